#include "cmr/registration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cmr/errors.hpp"

namespace cmr {

namespace {

Array3d to_double(const Array3f& a) {
    Array3d out(a.shape);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    return out;
}

double range_of(const Array3d& a) {
    double lo = a.data[0], hi = a.data[0];
    for (double v : a.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

template <typename T>
Array3<T> warp_impl(const Array3<T>& moving, const VectorField3D& field) {
    if (!(moving.shape == field.shape))
        throw usage_error("warp: field shape does not match image shape");
    Array3<T> out(moving.shape);
    const Shape3 s = moving.shape;
    std::size_t i = 0;
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x, ++i) {
                const std::size_t f = i * 3;
                out.data[i] = static_cast<T>(trilinear_sample(
                    moving, z + field.disp[f], y + field.disp[f + 1], x + field.disp[f + 2]));
            }
    return out;
}

// 2x block-mean downsampling with edge clamping.
Array3d downsample2(const Array3d& a) {
    const Shape3 s = a.shape;
    const Shape3 o{(s.z + 1) / 2, (s.y + 1) / 2, (s.x + 1) / 2};
    Array3d out(o);
    for (int z = 0; z < o.z; ++z)
        for (int y = 0; y < o.y; ++y)
            for (int x = 0; x < o.x; ++x) {
                double acc = 0.0;
                for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            acc += a(std::min(2 * z + dz, s.z - 1), std::min(2 * y + dy, s.y - 1),
                                     std::min(2 * x + dx, s.x - 1));
                out(z, y, x) = acc / 8.0;
            }
    return out;
}

// Upsample a displacement field to a finer grid; coordinates map corner to
// corner and displacement components scale with the per-axis grid ratio.
VectorField3D upsample_field(const VectorField3D& coarse, Shape3 fine_shape) {
    VectorField3D fine(fine_shape, coarse.grid_spacing_mm);
    Array3d comp(coarse.shape);
    Array3d fine_comp[3] = {Array3d(fine_shape), Array3d(fine_shape), Array3d(fine_shape)};

    const auto ratio = [](int fine_n, int coarse_n) {
        return fine_n > 1 ? static_cast<double>(coarse_n - 1) / (fine_n - 1) : 0.0;
    };
    const double rz = ratio(fine_shape.z, coarse.shape.z);
    const double ry = ratio(fine_shape.y, coarse.shape.y);
    const double rx = ratio(fine_shape.x, coarse.shape.x);
    const double scale[3] = {static_cast<double>(fine_shape.z) / coarse.shape.z,
                             static_cast<double>(fine_shape.y) / coarse.shape.y,
                             static_cast<double>(fine_shape.x) / coarse.shape.x};

    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < comp.data.size(); ++i) comp.data[i] = coarse.disp[i * 3 + c];
        std::size_t i = 0;
        for (int z = 0; z < fine_shape.z; ++z)
            for (int y = 0; y < fine_shape.y; ++y)
                for (int x = 0; x < fine_shape.x; ++x, ++i)
                    fine_comp[c].data[i] =
                        scale[c] * trilinear_sample(comp, z * rz, y * ry, x * rx);
    }
    for (std::size_t i = 0; i < fine_shape.size(); ++i)
        for (int c = 0; c < 3; ++c) fine.disp[i * 3 + c] = fine_comp[c].data[i];
    return fine;
}

double smoothness_impl(const VectorField3D& field, VectorField3D* grad) {
    const Shape3 s = field.shape;
    const int strides[3] = {s.y * s.x * 3, s.x * 3, 3};
    const int dims[3] = {s.z, s.y, s.x};
    double acc = 0.0;
    std::size_t i = 0;
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x, i += 3) {
                const int idx[3] = {z, y, x};
                for (int d = 0; d < 3; ++d) {
                    if (idx[d] + 1 >= dims[d]) continue;
                    for (int c = 0; c < 3; ++c) {
                        const double diff = field.disp[i + strides[d] + c] - field.disp[i + c];
                        acc += diff * diff;
                        if (grad) {
                            grad->disp[i + c] -= 2.0 * diff;
                            grad->disp[i + strides[d] + c] += 2.0 * diff;
                        }
                    }
                }
            }
    return acc;
}

struct WarpWithGrad {
    Array3d warped;
    std::vector<double> moving_grad;  // (z, y, x, 3): dM/d(coord) at p + u(p)
};

WarpWithGrad warp_with_grad(const Array3d& moving, const VectorField3D& field) {
    WarpWithGrad out;
    out.warped = Array3d(moving.shape);
    out.moving_grad.resize(moving.shape.size() * 3);
    const Shape3 s = moving.shape;
    std::size_t i = 0;
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x, ++i) {
                const std::size_t f = i * 3;
                const auto g = trilinear_sample_grad(moving, z + field.disp[f],
                                                     y + field.disp[f + 1], x + field.disp[f + 2]);
                out.warped.data[i] = g.value;
                out.moving_grad[f] = g.dz;
                out.moving_grad[f + 1] = g.dy;
                out.moving_grad[f + 2] = g.dx;
            }
    return out;
}

SsimParams resolved_params(const RegistrationConfig& cfg, const Array3d& fixed) {
    return resolve_ssim_eps(cfg.ssim_params(), range_of(fixed));
}

LossParts loss_resolved(const Array3d& fixed, const Array3d& moving, const VectorField3D& field,
                        const RegistrationConfig& cfg, const SsimParams& params) {
    LossParts parts;
    const Array3d warped = warp_impl(moving, field);
    parts.sim = 1.0 - ssim3d(fixed, warped, params);
    parts.smooth = smoothness_impl(field, nullptr);
    parts.total = parts.sim + cfg.lambda * parts.smooth;
    return parts;
}

LossParts loss_grad_resolved(const Array3d& fixed, const Array3d& moving,
                             const VectorField3D& field, const RegistrationConfig& cfg,
                             const SsimParams& params, VectorField3D& grad) {
    if (!(fixed.shape == moving.shape) || !(fixed.shape == field.shape))
        throw usage_error("loss: fixed/moving/field shapes do not match");

    WarpWithGrad wg = warp_with_grad(moving, field);
    Array3d dssim_dwarped;
    const double sim_val = ssim3d_grad(fixed, wg.warped, params, dssim_dwarped);

    grad = VectorField3D(field.shape, field.grid_spacing_mm);
    for (std::size_t i = 0; i < field.shape.size(); ++i) {
        const double gs = -dssim_dwarped.data[i];  // d(1 - ssim)/d(warped)
        grad.disp[i * 3] = gs * wg.moving_grad[i * 3];
        grad.disp[i * 3 + 1] = gs * wg.moving_grad[i * 3 + 1];
        grad.disp[i * 3 + 2] = gs * wg.moving_grad[i * 3 + 2];
    }

    LossParts parts;
    VectorField3D smooth_grad(field.shape, field.grid_spacing_mm);
    parts.smooth = smoothness_impl(field, &smooth_grad);
    for (std::size_t i = 0; i < grad.disp.size(); ++i)
        grad.disp[i] += cfg.lambda * smooth_grad.disp[i];

    parts.sim = 1.0 - sim_val;
    parts.total = parts.sim + cfg.lambda * parts.smooth;
    return parts;
}

} // namespace

void RegistrationConfig::validate() const {
    if (lambda < 0.0) throw usage_error("registration lambda must be >= 0");
    if (ssim_window < 3 || ssim_window % 2 == 0)
        throw usage_error("ssim window must be odd and >= 3");
    if (pyramid_levels < 1) throw usage_error("pyramid levels must be >= 1");
    if (iters_per_level < 1) throw usage_error("iterations per level must be >= 1");
    if (!(step_size > 0.0)) throw usage_error("step size must be > 0");
    if (!(convergence_tol >= 0.0)) throw usage_error("convergence tolerance must be >= 0");
}

Array3f warp(const Array3f& moving, const VectorField3D& field) {
    return warp_impl(moving, field);
}
Array3d warp(const Array3d& moving, const VectorField3D& field) {
    return warp_impl(moving, field);
}

double smoothness(const VectorField3D& field) { return smoothness_impl(field, nullptr); }

LossParts loss(const Array3d& fixed, const Array3d& moving, const VectorField3D& field,
               const RegistrationConfig& cfg) {
    if (!(fixed.shape == moving.shape) || !(fixed.shape == field.shape))
        throw usage_error("loss: fixed/moving/field shapes do not match");
    return loss_resolved(fixed, moving, field, cfg, resolved_params(cfg, fixed));
}

LossParts loss(const Array3f& fixed, const Array3f& moving, const VectorField3D& field,
               const RegistrationConfig& cfg) {
    return loss(to_double(fixed), to_double(moving), field, cfg);
}

LossParts loss_grad(const Array3d& fixed, const Array3d& moving, const VectorField3D& field,
                    const RegistrationConfig& cfg, VectorField3D& grad) {
    return loss_grad_resolved(fixed, moving, field, cfg, resolved_params(cfg, fixed), grad);
}

PairRegistration register_pair_detailed(const Array3f& moving, const Array3f& fixed,
                                        const RegistrationConfig& cfg, double grid_spacing_mm) {
    cfg.validate();
    if (!(moving.shape == fixed.shape))
        throw usage_error("register_pair: moving/fixed shapes do not match");

    const Array3d fixed_full = to_double(fixed);
    const Array3d moving_full = to_double(moving);

    // Stability constants pinned once from the full-resolution fixed image so
    // they stay constant across pyramid levels and descent iterations.
    const SsimParams params = resolved_params(cfg, fixed_full);
    RegistrationConfig rc = cfg;
    rc.ssim_eps1 = params.eps1;
    rc.ssim_eps2 = params.eps2;

    // Build the pyramid, coarsest first. Levels whose slices would fall below
    // the ssim window are not created.
    std::vector<Array3d> fixed_pyr{fixed_full};
    std::vector<Array3d> moving_pyr{moving_full};
    for (int l = 1; l < rc.pyramid_levels; ++l) {
        const Shape3 s = fixed_pyr.back().shape;
        const Shape3 next{(s.z + 1) / 2, (s.y + 1) / 2, (s.x + 1) / 2};
        if (next.y < rc.ssim_window || next.x < rc.ssim_window) break;
        fixed_pyr.push_back(downsample2(fixed_pyr.back()));
        moving_pyr.push_back(downsample2(moving_pyr.back()));
    }
    std::reverse(fixed_pyr.begin(), fixed_pyr.end());
    std::reverse(moving_pyr.begin(), moving_pyr.end());

    PairRegistration result;
    result.initial_loss =
        loss_resolved(fixed_full, moving_full, VectorField3D(fixed.shape, grid_spacing_mm), rc,
                      params)
            .total;

    VectorField3D best_field(fixed.shape, grid_spacing_mm);
    double best_fullres = result.initial_loss;

    VectorField3D field(fixed_pyr.front().shape, grid_spacing_mm);
    for (std::size_t level = 0; level < fixed_pyr.size(); ++level) {
        const Array3d& f = fixed_pyr[level];
        const Array3d& m = moving_pyr[level];
        if (level > 0) {
            field = upsample_field(field, f.shape);
            // At the native resolution, fall back to the incumbent best start
            // if the upsampled coarse solution is worse. Coarse levels cannot
            // resolve deep-subvoxel motion and may have drifted.
            if (f.shape == fixed.shape &&
                loss_resolved(f, m, field, rc, params).total > best_fullres)
                field = best_field;
        }

        LevelTrace trace;
        trace.level = static_cast<int>(level);
        trace.shape = f.shape;

        VectorField3D grad(f.shape, grid_spacing_mm);
        LossParts cur = loss_grad_resolved(f, m, field, rc, params, grad);
        if (!std::isfinite(cur.total))
            throw numeric_error("register_pair: non-finite loss at level " +
                                std::to_string(level) + " iteration 0");
        trace.losses.push_back(cur.total);

        double step = rc.step_size;
        for (int iter = 1; iter <= rc.iters_per_level; ++iter) {
            double gmax = 0.0;
            for (double g : grad.disp) gmax = std::max(gmax, std::fabs(g));
            if (gmax < 1e-14) break;

            VectorField3D cand = field;
            const double scale = step / gmax;
            for (std::size_t i = 0; i < cand.disp.size(); ++i)
                cand.disp[i] -= scale * grad.disp[i];

            const LossParts cand_loss = loss_resolved(f, m, cand, rc, params);
            if (!std::isfinite(cand_loss.total))
                throw numeric_error("register_pair: non-finite loss at level " +
                                    std::to_string(level) + " iteration " + std::to_string(iter));

            if (cand_loss.total <= cur.total) {
                const double drop = cur.total - cand_loss.total;
                field = std::move(cand);
                cur = cand_loss;
                trace.losses.push_back(cur.total);
                if (drop <= rc.convergence_tol * std::max(std::fabs(cur.total), 1e-12)) break;
                cur = loss_grad_resolved(f, m, field, rc, params, grad);
            } else {
                step *= 0.5;
                if (step < rc.step_size * 0x1p-12) break;
            }
        }

        // Track the best candidate at full resolution so the level-end trace
        // is non-increasing even if a coarse level overshoots.
        VectorField3D at_full =
            (f.shape == fixed.shape) ? field : upsample_field(field, fixed.shape);
        const double full_loss = loss_resolved(fixed_full, moving_full, at_full, rc, params).total;
        if (full_loss <= best_fullres) {
            best_fullres = full_loss;
            best_field = at_full;
        }
        trace.fullres_loss_after = best_fullres;
        result.levels.push_back(std::move(trace));
    }

    // Quantize to the f32 precision of the persisted container so in-memory
    // results and a save/load round trip are bit-identical.
    for (double& d : best_field.disp) d = static_cast<double>(static_cast<float>(d));
    result.field = std::move(best_field);
    result.final_loss = best_fullres;
    return result;
}

VectorField3D register_pair(const Array3f& moving, const Array3f& fixed,
                            const RegistrationConfig& cfg, double grid_spacing_mm) {
    return register_pair_detailed(moving, fixed, cfg, grid_spacing_mm).field;
}

std::vector<VectorField3D> SequenceRegistration::take_fields() {
    std::vector<VectorField3D> out;
    out.reserve(pairs.size());
    for (auto& p : pairs) out.push_back(std::move(p.field));
    return out;
}

SequenceRegistration register_sequence_detailed(const Volume4D& vol,
                                                const RegistrationConfig& cfg, int jobs) {
    cfg.validate();
    if (vol.t_len < 2) throw usage_error("register_sequence: need T >= 2");
    if (std::fabs(vol.spacing_mm[0] - vol.spacing_mm[1]) > 1e-9 ||
        std::fabs(vol.spacing_mm[0] - vol.spacing_mm[2]) > 1e-9)
        throw usage_error("register_sequence expects an isotropic grid; resample first");

    const int t_len = vol.t_len;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::clamp(jobs, 1, t_len);

    SequenceRegistration seq;
    seq.pairs.resize(t_len);
    std::vector<std::string> failures(t_len);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int t = next.fetch_add(1);
            if (t >= t_len) return;
            // fields[t] carries frame t toward frame t+1: the moved (later)
            // frame is resampled onto frame t's grid, so fixed = frame t.
            const Array3f fixed = vol.frame_copy(t);
            const Array3f moving = vol.frame_copy((t + 1) % t_len);
            try {
                seq.pairs[t] = register_pair_detailed(moving, fixed, cfg, vol.spacing_mm[0]);
            } catch (const std::exception& e) {
                failures[t] = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (int t = 0; t < t_len; ++t)
        if (!failures[t].empty())
            throw numeric_error("register_sequence failed at t=" + std::to_string(t) + ": " +
                                failures[t]);
    return seq;
}

std::vector<VectorField3D> register_sequence(const Volume4D& vol, const RegistrationConfig& cfg,
                                             int jobs) {
    return register_sequence_detailed(vol, cfg, jobs).take_fields();
}

} // namespace cmr

#include "cmr/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "cmr/errors.hpp"
#include "cmr/stats.hpp"

namespace cmr {

std::string to_string(FocusStrategy s) {
    switch (s) {
        case FocusStrategy::lv: return "lv";
        case FocusStrategy::sept: return "sept";
        case FocusStrategy::vol: return "vol";
        case FocusStrategy::mse: return "mse";
    }
    return "vol";
}

FocusStrategy focus_strategy_from_string(const std::string& s) {
    if (s == "lv") return FocusStrategy::lv;
    if (s == "sept") return FocusStrategy::sept;
    if (s == "vol") return FocusStrategy::vol;
    if (s == "mse") return FocusStrategy::mse;
    throw usage_error("unknown focus strategy '" + s + "' (expected lv, sept, vol or mse)");
}

FocusPoint focus_vol(const Volume4D& vol) {
    FocusPoint fp;
    fp.strategy = FocusStrategy::vol;
    fp.coord = {(vol.spatial.z - 1) / 2.0, (vol.spatial.y - 1) / 2.0, (vol.spatial.x - 1) / 2.0};
    return fp;
}

FocusPoint focus_mse(const Volume4D& vol, double quantile) {
    if (vol.t_len < 2) throw usage_error("focus_mse: need T >= 2");
    if (!(quantile > 0.0 && quantile < 1.0))
        throw usage_error("focus_mse quantile must be in (0, 1)");

    const Shape3 s = vol.spatial;
    Array3d err(s, 0.0);
    for (int t = 0; t < vol.t_len; ++t) {
        const float* cur = vol.frame(t);
        const float* nxt = vol.frame((t + 1) % vol.t_len);
        for (std::size_t i = 0; i < err.data.size(); ++i) {
            const double d = static_cast<double>(nxt[i]) - static_cast<double>(cur[i]);
            err.data[i] += d * d;
        }
    }
    for (double& v : err.data) v /= vol.t_len;

    double max_err = 0.0;
    for (double v : err.data) max_err = std::max(max_err, v);
    if (max_err <= 0.0) throw numeric_error("focus_mse: no temporal change in sequence");

    const double thr = quantile_linear(std::vector<double>(err.data.begin(), err.data.end()),
                                       quantile);

    double wsum = 0.0, cz = 0.0, cy = 0.0, cx = 0.0;
    std::size_t i = 0;
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x, ++i) {
                const double e = err.data[i];
                if (e < thr || e <= 0.0) continue;
                wsum += e;
                cz += e * z;
                cy += e * y;
                cx += e * x;
            }
    if (wsum <= 0.0) throw numeric_error("focus_mse: no temporal change above threshold");

    FocusPoint fp;
    fp.strategy = FocusStrategy::mse;
    fp.coord = {cz / wsum, cy / wsum, cx / wsum};
    return fp;
}

FocusPoint focus_lv(const Mask3& mask) {
    double n = 0.0, cz = 0.0, cy = 0.0, cx = 0.0;
    std::size_t i = 0;
    for (int z = 0; z < mask.shape.z; ++z)
        for (int y = 0; y < mask.shape.y; ++y)
            for (int x = 0; x < mask.shape.x; ++x, ++i)
                if (mask.data[i]) {
                    n += 1.0;
                    cz += z;
                    cy += y;
                    cx += x;
                }
    if (n == 0.0) throw usage_error("focus_lv: empty mask");

    FocusPoint fp;
    fp.strategy = FocusStrategy::lv;
    fp.coord = {cz / n, cy / n, cx / n};
    return fp;
}

FocusPoint focus_sept(const std::array<double, 3>& rvip_ant, const std::array<double, 3>& rvip_inf,
                      Shape3 bounds) {
    const auto inside = [&](const std::array<double, 3>& p) {
        return p[0] >= 0.0 && p[0] <= bounds.z - 1 && p[1] >= 0.0 && p[1] <= bounds.y - 1 &&
               p[2] >= 0.0 && p[2] <= bounds.x - 1;
    };
    if (!inside(rvip_ant) || !inside(rvip_inf))
        throw usage_error("focus_sept: insertion point outside the volume");

    FocusPoint fp;
    fp.strategy = FocusStrategy::sept;
    for (int c = 0; c < 3; ++c) fp.coord[c] = 0.5 * (rvip_ant[c] + rvip_inf[c]);
    return fp;
}

Array3d angle_field(const VectorField3D& field, const FocusPoint& focus) {
    const Shape3 s = field.shape;
    const auto inside = [&](double v, int n) { return v >= 0.0 && v <= n - 1; };
    if (!inside(focus.coord[0], s.z) || !inside(focus.coord[1], s.y) ||
        !inside(focus.coord[2], s.x))
        throw usage_error("angle_field: focus point outside the grid");

    Array3d alpha(s, 0.0);
    std::size_t i = 0;
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x, ++i) {
                const std::size_t f = i * 3;
                const double vz = field.disp[f], vy = field.disp[f + 1], vx = field.disp[f + 2];
                const double wz = focus.coord[0] - z, wy = focus.coord[1] - y,
                             wx = focus.coord[2] - x;
                const double vn = std::sqrt(vz * vz + vy * vy + vx * vx);
                const double wn = std::sqrt(wz * wz + wy * wy + wx * wx);
                if (vn == 0.0 || wn == 0.0) continue;  // no directional evidence
                alpha.data[i] = -(vz * wz + vy * wy + vx * wx) / (vn * wn);
            }
    return alpha;
}

Mask3 magnitude_mask(const std::vector<VectorField3D>& fields, double quantile) {
    if (fields.empty()) throw usage_error("magnitude_mask: empty field list");
    if (!(quantile > 0.0 && quantile < 1.0))
        throw usage_error("magnitude_mask quantile must be in (0, 1)");

    const Shape3 s = fields.front().shape;
    Array3d mag(s, 0.0);
    for (const auto& f : fields) {
        if (!(f.shape == s)) throw usage_error("magnitude_mask: field shapes differ");
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double dz = f.disp[i * 3], dy = f.disp[i * 3 + 1], dx = f.disp[i * 3 + 2];
            mag.data[i] += std::sqrt(dz * dz + dy * dy + dx * dx);
        }
    }
    double max_mag = 0.0;
    for (double& v : mag.data) {
        v /= static_cast<double>(fields.size());
        max_mag = std::max(max_mag, v);
    }
    if (max_mag <= 0.0) throw numeric_error("magnitude_mask: no motion in field sequence");

    const double thr =
        quantile_linear(std::vector<double>(mag.data.begin(), mag.data.end()), quantile);

    Mask3 mask(s, 0);
    for (std::size_t i = 0; i < s.size(); ++i) mask.data[i] = mag.data[i] >= thr ? 1 : 0;
    return mask;
}

MotionDescriptor reduce_descriptor(const std::vector<VectorField3D>& fields,
                                   const FocusPoint& focus, const Mask3& mask) {
    if (fields.empty()) throw usage_error("reduce_descriptor: empty field list");

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i]) idx.push_back(i);
    if (idx.empty()) throw usage_error("reduce_descriptor: empty mask");

    MotionDescriptor desc;
    desc.focus = focus;
    desc.alpha_raw.reserve(fields.size());
    desc.vnorm_raw_mm.reserve(fields.size());

    for (const auto& f : fields) {
        if (!(f.shape == mask.shape))
            throw usage_error("reduce_descriptor: field/mask shapes differ");
        const Array3d alpha = angle_field(f, focus);
        double asum = 0.0, msum = 0.0;
        for (std::size_t i : idx) {
            asum += alpha.data[i];
            const double dz = f.disp[i * 3], dy = f.disp[i * 3 + 1], dx = f.disp[i * 3 + 2];
            msum += std::sqrt(dz * dz + dy * dy + dx * dx);
        }
        const double n = static_cast<double>(idx.size());
        desc.alpha_raw.push_back(asum / n);
        desc.vnorm_raw_mm.push_back(msum / n * f.grid_spacing_mm);
    }
    return desc;
}

MotionDescriptor smooth_normalize(MotionDescriptor desc, double sigma) {
    const std::size_t t_len = desc.alpha_raw.size();
    if (t_len < 3) throw usage_error("smooth_normalize: need T >= 3");
    if (desc.vnorm_raw_mm.size() != t_len)
        throw usage_error("smooth_normalize: curve lengths differ");

    desc.sigma = sigma;
    desc.alpha_norm = smooth_cyclic(desc.alpha_raw, gaussian_kernel(sigma));

    const auto minmax_a = std::minmax_element(desc.alpha_norm.begin(), desc.alpha_norm.end());
    const double alo = *minmax_a.first, ahi = *minmax_a.second;
    if (!(ahi - alo > 1e-12)) throw numeric_error("smooth_normalize: flat descriptor");
    for (double& v : desc.alpha_norm) v = 2.0 * (v - alo) / (ahi - alo) - 1.0;

    desc.vnorm_norm = desc.vnorm_raw_mm;
    const auto minmax_v = std::minmax_element(desc.vnorm_norm.begin(), desc.vnorm_norm.end());
    const double vlo = *minmax_v.first, vhi = *minmax_v.second;
    if (vhi - vlo > 0.0)
        for (double& v : desc.vnorm_norm) v = (v - vlo) / (vhi - vlo);
    else
        for (double& v : desc.vnorm_norm) v = 0.0;
    return desc;
}

} // namespace cmr

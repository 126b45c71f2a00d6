#include "cmr/volume.hpp"

#include <cmath>
#include <string>

#include "cmr/errors.hpp"
#include "cmr/stats.hpp"

namespace cmr {

void Volume4D::validate(const char* context) const {
    const std::string where(context);
    if (t_len < 2) throw io_error(where + ": need a sequence with T >= 2, got T=" + std::to_string(t_len));
    if (spatial.z < 1 || spatial.y < 1 || spatial.x < 1)
        throw io_error(where + ": non-positive spatial shape");
    for (double s : spacing_mm)
        if (!(s > 0.0)) throw io_error(where + ": spacing components must be strictly positive");
    if (data.size() != static_cast<std::size_t>(t_len) * frame_size())
        throw io_error(where + ": data size does not match shape");
    for (float v : data)
        if (!std::isfinite(v)) throw io_error(where + ": non-finite intensity in volume");
}

Volume4D resample_isotropic(const Volume4D& vol, double target_mm) {
    if (!(target_mm > 0.0)) throw usage_error("resample target spacing must be > 0");

    const auto newdim = [&](int n, double sp) {
        const int m = static_cast<int>(std::lround(n * sp / target_mm));
        return std::max(m, 1);
    };
    Shape3 out_shape{newdim(vol.spatial.z, vol.spacing_mm[0]),
                     newdim(vol.spatial.y, vol.spacing_mm[1]),
                     newdim(vol.spatial.x, vol.spacing_mm[2])};

    Volume4D out;
    out.t_len = vol.t_len;
    out.spatial = out_shape;
    out.spacing_mm = {target_mm, target_mm, target_mm};
    out.frame_duration_ms = vol.frame_duration_ms;
    out.data.resize(static_cast<std::size_t>(out.t_len) * out_shape.size());

    const double rz = target_mm / vol.spacing_mm[0];
    const double ry = target_mm / vol.spacing_mm[1];
    const double rx = target_mm / vol.spacing_mm[2];

    for (int t = 0; t < vol.t_len; ++t) {
        const Array3f src = vol.frame_copy(t);
        float* dst = out.frame(t);
        std::size_t i = 0;
        for (int z = 0; z < out_shape.z; ++z)
            for (int y = 0; y < out_shape.y; ++y)
                for (int x = 0; x < out_shape.x; ++x, ++i)
                    dst[i] = static_cast<float>(trilinear_sample(src, z * rz, y * ry, x * rx));
    }
    return out;
}

std::pair<Volume4D, PreprocessReport> repeat_temporal(const Volume4D& vol, int target_len) {
    if (target_len < vol.t_len)
        throw usage_error("repeat_temporal: target length " + std::to_string(target_len) +
                          " shorter than sequence T=" + std::to_string(vol.t_len));

    Volume4D out = vol;
    out.t_len = target_len;
    out.data.resize(static_cast<std::size_t>(target_len) * vol.frame_size());
    for (int t = vol.t_len; t < target_len; ++t) {
        const float* src = vol.frame(t % vol.t_len);
        std::copy(src, src + vol.frame_size(), out.frame(t));
    }

    PreprocessReport rep;
    rep.original_t = vol.t_len;
    rep.repeated_to = target_len;
    return {std::move(out), rep};
}

std::pair<Volume4D, PreprocessReport> clip_standardize(const Volume4D& vol, double quantile) {
    if (!(quantile > 0.5 && quantile <= 1.0))
        throw usage_error("clip quantile must be in (0.5, 1]");

    std::vector<double> values(vol.data.begin(), vol.data.end());
    const double hi = quantile_linear(values, quantile);

    Volume4D out = vol;
    double lo = hi;
    for (float& v : out.data) {
        if (v > hi) v = static_cast<float>(hi);
        if (v < lo) lo = v;
    }

    double m = 0.0;
    for (float v : out.data) m += v;
    m /= static_cast<double>(out.data.size());
    double var = 0.0;
    for (float v : out.data) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / static_cast<double>(out.data.size()));
    if (!(sd > 1e-12)) throw numeric_error("degenerate constant volume");

    for (float& v : out.data) v = static_cast<float>((v - m) / sd);

    PreprocessReport rep;
    rep.original_t = vol.t_len;
    rep.clip_low = lo;
    rep.clip_high = hi;
    rep.mean = m;
    rep.std = sd;
    rep.resampled_spacing_mm = vol.spacing_mm[0];
    return {std::move(out), rep};
}

Volume4D crop_pad_centered(const Volume4D& vol, Shape3 target) {
    if (target.z < 1 || target.y < 1 || target.x < 1)
        throw usage_error("crop/pad target shape must be positive");

    Volume4D out;
    out.t_len = vol.t_len;
    out.spatial = target;
    out.spacing_mm = vol.spacing_mm;
    out.frame_duration_ms = vol.frame_duration_ms;
    out.data.assign(static_cast<std::size_t>(out.t_len) * target.size(), 0.0f);

    const int oz = (vol.spatial.z - target.z) / 2;
    const int oy = (vol.spatial.y - target.y) / 2;
    const int ox = (vol.spatial.x - target.x) / 2;

    for (int t = 0; t < vol.t_len; ++t)
        for (int z = 0; z < target.z; ++z) {
            const int sz = z + oz;
            if (sz < 0 || sz >= vol.spatial.z) continue;
            for (int y = 0; y < target.y; ++y) {
                const int sy = y + oy;
                if (sy < 0 || sy >= vol.spatial.y) continue;
                for (int x = 0; x < target.x; ++x) {
                    const int sx = x + ox;
                    if (sx < 0 || sx >= vol.spatial.x) continue;
                    out.at(t, z, y, x) = vol.at(t, sz, sy, sx);
                }
            }
        }
    return out;
}

} // namespace cmr

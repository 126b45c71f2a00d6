#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "cmr/grid.hpp"

namespace cmr {

/// A T x Z x Y x X scalar image sequence with physical spacing.
/// Data is stored in (t, z, y, x) C order, x fastest.
struct Volume4D {
    int t_len = 0;
    Shape3 spatial;
    std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};  // (sz, sy, sx)
    std::optional<double> frame_duration_ms;
    std::vector<float> data;

    std::size_t frame_size() const { return spatial.size(); }

    float* frame(int t) { return data.data() + static_cast<std::size_t>(t) * frame_size(); }
    const float* frame(int t) const {
        return data.data() + static_cast<std::size_t>(t) * frame_size();
    }

    Array3f frame_copy(int t) const {
        Array3f out(spatial);
        const float* src = frame(t);
        std::copy(src, src + frame_size(), out.data.begin());
        return out;
    }

    float& at(int t, int z, int y, int x) {
        return data[((static_cast<std::size_t>(t) * spatial.z + z) * spatial.y + y) * spatial.x + x];
    }
    float at(int t, int z, int y, int x) const {
        return data[((static_cast<std::size_t>(t) * spatial.z + z) * spatial.y + y) * spatial.x + x];
    }

    /// Throws if the sequence invariants do not hold: T >= 2, positive
    /// spacing, finite intensities.
    void validate(const char* context) const;
};

/// Record of what preprocessing did, kept so phase indices can be mapped
/// back to the original time base.
struct PreprocessReport {
    int original_t = 0;
    int repeated_to = 0;  // 0 when no temporal repetition was applied
    double clip_low = 0.0;
    double clip_high = 0.0;
    double mean = 0.0;
    double std = 0.0;
    double resampled_spacing_mm = 0.0;
};

/// Trilinear resampling of every frame to an isotropic grid of `target_mm`
/// spacing. Spatial extent scales by the spacing ratio (rounded, minimum 1).
Volume4D resample_isotropic(const Volume4D& vol, double target_mm);

/// Repeat frames cyclically until the sequence has `target_len` frames.
std::pair<Volume4D, PreprocessReport> repeat_temporal(const Volume4D& vol, int target_len);

/// Clip intensities above the per-4D quantile, then shift/scale the whole
/// 4D array to zero mean, unit standard deviation.
std::pair<Volume4D, PreprocessReport> clip_standardize(const Volume4D& vol, double quantile);

/// Center crop or zero-pad every frame to the requested spatial shape.
Volume4D crop_pad_centered(const Volume4D& vol, Shape3 target);

} // namespace cmr

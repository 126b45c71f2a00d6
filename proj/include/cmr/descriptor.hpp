#pragma once

#include <array>
#include <string>
#include <vector>

#include "cmr/field.hpp"
#include "cmr/grid.hpp"
#include "cmr/volume.hpp"

namespace cmr {

enum class FocusStrategy { lv, sept, vol, mse };

std::string to_string(FocusStrategy s);
FocusStrategy focus_strategy_from_string(const std::string& s);

/// Reference point the motion direction is measured against, continuous
/// (z, y, x) coordinate on the isotropic grid.
struct FocusPoint {
    std::array<double, 3> coord{0.0, 0.0, 0.0};
    FocusStrategy strategy = FocusStrategy::vol;
};

/// Paired 1D curves over the cardiac cycle: signed mean motion direction
/// (negative = toward the focus point) and mean deformation magnitude.
struct MotionDescriptor {
    std::vector<double> alpha_raw;
    std::vector<double> vnorm_raw_mm;
    std::vector<double> alpha_norm;  // empty until smooth_normalize
    std::vector<double> vnorm_norm;  // empty until smooth_normalize
    double mask_quantile = 0.0;
    double sigma = 0.0;
    FocusPoint focus;
};

FocusPoint focus_vol(const Volume4D& vol);

/// Center of mass of the temporal mean-squared frame difference above its
/// `quantile` quantile. Throws when the sequence has no temporal change.
FocusPoint focus_mse(const Volume4D& vol, double quantile = 0.70);

FocusPoint focus_lv(const Mask3& mask);

FocusPoint focus_sept(const std::array<double, 3>& rvip_ant, const std::array<double, 3>& rvip_inf,
                      Shape3 bounds);

/// Signed cosine between each displacement vector and the direction to the
/// focus point; motion toward the focus is negative. Zero vectors (and the
/// focus voxel itself) map to 0.
Array3d angle_field(const VectorField3D& field, const FocusPoint& focus);

/// Threshold mask on the temporally averaged displacement magnitude:
/// keep voxels >= the `quantile` quantile.
Mask3 magnitude_mask(const std::vector<VectorField3D>& fields, double quantile = 0.70);

/// Volume-mean direction and magnitude curves over the mask. Magnitudes are
/// reported in millimeters via the field grid spacing.
MotionDescriptor reduce_descriptor(const std::vector<VectorField3D>& fields,
                                   const FocusPoint& focus, const Mask3& mask);

/// Cyclic Gaussian smoothing of the direction curve (sigma in frames,
/// kernel truncated at 4*sigma), then min/max mapping of both curves to
/// [-1, 1] and [0, 1]. The magnitude curve is not smoothed.
MotionDescriptor smooth_normalize(MotionDescriptor desc, double sigma = 2.0);

} // namespace cmr

#pragma once

#include <span>

#include "cmr/grid.hpp"

namespace cmr {

/// Window size and stability constants for the windowed structural
/// similarity measure. Non-positive eps values mean "derive from the
/// dynamic range": eps1 = (0.01*L)^2, eps2 = (0.03*L)^2 where L is the
/// joint min/max range of the two inputs (L = 1 for constant pairs).
struct SsimParams {
    int window = 7;
    double eps1 = 0.0;
    double eps2 = 0.0;
};

/// Resolve auto eps against a known dynamic range.
SsimParams resolve_ssim_eps(SsimParams p, double dynamic_range);

/// Mean SSIM over all window x window sliding windows (stride 1, uniform
/// weights, population moments).
double ssim2d(std::span<const double> x, std::span<const double> y, int ny, int nx,
              const SsimParams& params);

/// Mean of per-slice 2D SSIM over all Z slices.
double ssim3d(const Array3d& x, const Array3d& y, const SsimParams& params);

/// ssim3d plus its gradient with respect to the second image. `dssim_dy`
/// is resized and overwritten. eps must already be resolved (positive) so
/// the gradient does not pick up a range dependence on y.
double ssim3d_grad(const Array3d& x, const Array3d& y, const SsimParams& params,
                   Array3d& dssim_dy);

} // namespace cmr

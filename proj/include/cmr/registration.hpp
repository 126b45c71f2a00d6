#pragma once

#include <string>
#include <vector>

#include "cmr/field.hpp"
#include "cmr/grid.hpp"
#include "cmr/ssim.hpp"
#include "cmr/volume.hpp"

namespace cmr {

struct RegistrationConfig {
    double lambda = 0.001;         // smoothness weight
    int ssim_window = 7;
    double ssim_eps1 = 0.0;        // <= 0: derive from the fixed image's range
    double ssim_eps2 = 0.0;
    int pyramid_levels = 3;
    int iters_per_level = 100;
    double step_size = 0.4;        // max voxel update per iteration
    double convergence_tol = 1e-5; // relative loss change stop

    void validate() const;
    SsimParams ssim_params() const { return {ssim_window, ssim_eps1, ssim_eps2}; }
};

struct LossParts {
    double total = 0.0;
    double sim = 0.0;     // 1 - ssim3d(fixed, warp(moving, field))
    double smooth = 0.0;  // unweighted smoothness term
};

/// output(p) = moving(p + disp(p)), trilinear with border clamp.
Array3f warp(const Array3f& moving, const VectorField3D& field);
Array3d warp(const Array3d& moving, const VectorField3D& field);

/// Diffusion energy: sum of squared forward differences of the displacement
/// over all sites where the forward neighbour exists.
double smoothness(const VectorField3D& field);

LossParts loss(const Array3d& fixed, const Array3d& moving, const VectorField3D& field,
               const RegistrationConfig& cfg);
LossParts loss(const Array3f& fixed, const Array3f& moving, const VectorField3D& field,
               const RegistrationConfig& cfg);

/// Loss plus its analytic gradient with respect to the displacement field.
LossParts loss_grad(const Array3d& fixed, const Array3d& moving, const VectorField3D& field,
                    const RegistrationConfig& cfg, VectorField3D& grad);

struct LevelTrace {
    int level = 0;  // 0 = coarsest
    Shape3 shape;
    std::vector<double> losses;    // accepted per-iteration losses at level resolution
    double fullres_loss_after = 0.0;
};

struct PairRegistration {
    VectorField3D field;
    std::vector<LevelTrace> levels;
    double initial_loss = 0.0;  // zero-field loss at full resolution
    double final_loss = 0.0;
};

/// Multi-resolution descent on the composite loss. Deterministic given cfg;
/// the returned final loss never exceeds the zero-field loss.
PairRegistration register_pair_detailed(const Array3f& moving, const Array3f& fixed,
                                        const RegistrationConfig& cfg,
                                        double grid_spacing_mm = 1.0);
VectorField3D register_pair(const Array3f& moving, const Array3f& fixed,
                            const RegistrationConfig& cfg, double grid_spacing_mm = 1.0);

struct SequenceRegistration {
    std::vector<PairRegistration> pairs;  // pairs[t]: frame t -> t+1 (cyclic)
    std::vector<VectorField3D> take_fields();
};

/// Sequential cyclic registration: fields[t] carries the motion of frame t
/// toward frame t+1 (frame T-1 toward frame 0), expressed on frame t's grid.
SequenceRegistration register_sequence_detailed(const Volume4D& vol,
                                                const RegistrationConfig& cfg, int jobs = 0);
std::vector<VectorField3D> register_sequence(const Volume4D& vol, const RegistrationConfig& cfg,
                                             int jobs = 0);

} // namespace cmr

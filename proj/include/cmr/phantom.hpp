#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmr/field.hpp"
#include "cmr/phases.hpp"
#include "cmr/volume.hpp"

namespace cmr {

/// Analytic beating-sphere phantom: a bright spherical shell whose radius
/// follows a fixed asymmetric cardiac contraction profile (fast systole,
/// rapid early filling, flat diastasis, small late filling bump).
struct PhantomConfig {
    int t_len = 30;
    Shape3 spatial{16, 64, 64};
    std::array<double, 3> center{-1.0, -1.0, -1.0};  // negative: grid center
    double inner_radius = 4.0;    // voxels, inner edge of the shell at rest
    double wall_thickness = 2.0;  // voxels
    double amplitude = 0.25;      // contraction as a fraction of the rest radius
    double noise_sigma = 0.02;    // frozen intensity noise
    int phase_offset = 0;         // cyclic shift of the motion profile, frames
    double truncate_fraction = 1.0;
    std::uint64_t seed = 7;
    double spacing_mm = 2.5;

    void validate() const;
    std::array<double, 3> resolved_center() const;
    double rest_radius() const { return inner_radius + wall_thickness / 2.0; }
    /// Frames actually generated (truncation drops trailing frames).
    int output_t() const;
};

struct PhantomTruth {
    std::vector<VectorField3D> fields;  // frame t -> t+1, cyclic over the output frames
    PhaseSet phases;                    // on the full (untruncated) cycle
    std::vector<double> radius_profile; // shell mid-radius per output frame, voxels
};

/// Contraction level s in [0, 1] at cycle fraction x in [0, 1).
double phantom_profile(double x);

/// Ground-truth landmark positions of the motion profile in cycle
/// fractions: {ED, MS, ES, PF, MD}.
std::array<double, 5> phantom_landmarks();

std::pair<Volume4D, PhantomTruth> generate_phantom(const PhantomConfig& cfg);

/// Ground-truth displacement field for frame t (cyclic at the last frame).
VectorField3D analytic_field(const PhantomConfig& cfg, int t);

/// Writes volume.json/.raw, fields/field_NNN.json/.raw and truth.json.
void save_phantom(const std::filesystem::path& out_dir, const PhantomConfig& cfg,
                  const Volume4D& vol, const PhantomTruth& truth);

} // namespace cmr

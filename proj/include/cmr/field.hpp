#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "cmr/grid.hpp"

namespace cmr {

/// Dense per-voxel displacement (dz, dy, dx) in voxel units of the
/// isotropic grid, C order (z, y, x, component).
struct VectorField3D {
    Shape3 shape;
    double grid_spacing_mm = 1.0;
    std::vector<double> disp;

    VectorField3D() = default;
    VectorField3D(Shape3 s, double spacing_mm)
        : shape(s), grid_spacing_mm(spacing_mm), disp(s.size() * 3, 0.0) {}

    std::size_t voxel_index(int z, int y, int x) const {
        return ((static_cast<std::size_t>(z) * shape.y + y) * shape.x + x) * 3;
    }
    double& at(int z, int y, int x, int c) { return disp[voxel_index(z, y, x) + c]; }
    double at(int z, int y, int x, int c) const { return disp[voxel_index(z, y, x) + c]; }

    std::array<double, 3> vec(int z, int y, int x) const {
        const std::size_t i = voxel_index(z, y, x);
        return {disp[i], disp[i + 1], disp[i + 2]};
    }
};

/// Persisted as raw+json with shape [Z, Y, X, 3], dtype f32.
void save_field(const std::filesystem::path& json_path, const VectorField3D& field);
VectorField3D load_field(const std::filesystem::path& json_path);

} // namespace cmr

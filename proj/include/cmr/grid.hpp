#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cmr {

/// Spatial extent of a 3D grid, (z, y, x) order throughout the library.
struct Shape3 {
    int z = 0;
    int y = 0;
    int x = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(z) * static_cast<std::size_t>(y) *
               static_cast<std::size_t>(x);
    }
    bool operator==(const Shape3&) const = default;
};

/// Dense 3D scalar array, C order with x fastest.
template <typename T>
struct Array3 {
    Shape3 shape;
    std::vector<T> data;

    Array3() = default;
    explicit Array3(Shape3 s, T fill = T{}) : shape(s), data(s.size(), fill) {}

    T& operator()(int z, int y, int x) {
        return data[(static_cast<std::size_t>(z) * shape.y + y) * shape.x + x];
    }
    T operator()(int z, int y, int x) const {
        return data[(static_cast<std::size_t>(z) * shape.y + y) * shape.x + x];
    }
    std::size_t size() const { return data.size(); }
};

using Array3f = Array3<float>;
using Array3d = Array3<double>;
using Mask3 = Array3<unsigned char>;

/// Trilinear interpolation with clamp-to-edge border handling.
/// Coordinates are (z, y, x) in voxel units; out-of-range coordinates
/// sample the border voxel.
template <typename T>
double trilinear_sample(const Array3<T>& vol, double z, double y, double x) {
    const Shape3& s = vol.shape;
    const double cz = std::clamp(z, 0.0, static_cast<double>(s.z - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(s.y - 1));
    const double cx = std::clamp(x, 0.0, static_cast<double>(s.x - 1));

    int z0 = std::min(static_cast<int>(cz), std::max(s.z - 2, 0));
    int y0 = std::min(static_cast<int>(cy), std::max(s.y - 2, 0));
    int x0 = std::min(static_cast<int>(cx), std::max(s.x - 2, 0));
    const int z1 = std::min(z0 + 1, s.z - 1);
    const int y1 = std::min(y0 + 1, s.y - 1);
    const int x1 = std::min(x0 + 1, s.x - 1);
    const double fz = cz - z0;
    const double fy = cy - y0;
    const double fx = cx - x0;

    const double c000 = vol(z0, y0, x0), c001 = vol(z0, y0, x1);
    const double c010 = vol(z0, y1, x0), c011 = vol(z0, y1, x1);
    const double c100 = vol(z1, y0, x0), c101 = vol(z1, y0, x1);
    const double c110 = vol(z1, y1, x0), c111 = vol(z1, y1, x1);

    const double c00 = c000 + (c001 - c000) * fx;
    const double c01 = c010 + (c011 - c010) * fx;
    const double c10 = c100 + (c101 - c100) * fx;
    const double c11 = c110 + (c111 - c110) * fx;
    const double c0 = c00 + (c01 - c00) * fy;
    const double c1 = c10 + (c11 - c10) * fy;
    return c0 + (c1 - c0) * fz;
}

/// Value plus partial derivatives with respect to the (z, y, x) coordinate.
/// Outside the grid the clamped coordinate is constant, so the derivative
/// along that axis is zero.
template <typename T>
struct TrilinearGrad {
    double value;
    double dz, dy, dx;
};

template <typename T>
TrilinearGrad<T> trilinear_sample_grad(const Array3<T>& vol, double z, double y, double x) {
    const Shape3& s = vol.shape;
    const bool in_z = z > 0.0 && z < s.z - 1;
    const bool in_y = y > 0.0 && y < s.y - 1;
    const bool in_x = x > 0.0 && x < s.x - 1;
    const double cz = std::clamp(z, 0.0, static_cast<double>(s.z - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(s.y - 1));
    const double cx = std::clamp(x, 0.0, static_cast<double>(s.x - 1));

    int z0 = std::min(static_cast<int>(cz), std::max(s.z - 2, 0));
    int y0 = std::min(static_cast<int>(cy), std::max(s.y - 2, 0));
    int x0 = std::min(static_cast<int>(cx), std::max(s.x - 2, 0));
    const int z1 = std::min(z0 + 1, s.z - 1);
    const int y1 = std::min(y0 + 1, s.y - 1);
    const int x1 = std::min(x0 + 1, s.x - 1);
    const double fz = cz - z0;
    const double fy = cy - y0;
    const double fx = cx - x0;

    const double c000 = vol(z0, y0, x0), c001 = vol(z0, y0, x1);
    const double c010 = vol(z0, y1, x0), c011 = vol(z0, y1, x1);
    const double c100 = vol(z1, y0, x0), c101 = vol(z1, y0, x1);
    const double c110 = vol(z1, y1, x0), c111 = vol(z1, y1, x1);

    const double c00 = c000 + (c001 - c000) * fx;
    const double c01 = c010 + (c011 - c010) * fx;
    const double c10 = c100 + (c101 - c100) * fx;
    const double c11 = c110 + (c111 - c110) * fx;
    const double c0 = c00 + (c01 - c00) * fy;
    const double c1 = c10 + (c11 - c10) * fy;

    TrilinearGrad<T> g;
    g.value = c0 + (c1 - c0) * fz;
    g.dz = in_z ? (c1 - c0) : 0.0;

    const double dy0 = c01 - c00;
    const double dy1 = c11 - c10;
    g.dy = in_y ? (dy0 + (dy1 - dy0) * fz) : 0.0;

    const double dx00 = c001 - c000;
    const double dx01 = c011 - c010;
    const double dx10 = c101 - c100;
    const double dx11 = c111 - c110;
    const double dx0 = dx00 + (dx01 - dx00) * fy;
    const double dx1 = dx10 + (dx11 - dx10) * fy;
    g.dx = in_x ? (dx0 + (dx1 - dx0) * fz) : 0.0;
    return g;
}

} // namespace cmr

#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "cmr/field.hpp"
#include "cmr/grid.hpp"
#include "cmr/registration.hpp"
#include "cmr/rng.hpp"
#include "cmr/volume.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "cardiomotion_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline cmr::Array3f random_image(cmr::Shape3 s, cmr::Rng& rng) {
    cmr::Array3f img(s);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

// Smooth random image: a few low-frequency products of sines.
inline cmr::Array3f smooth_image(cmr::Shape3 s, cmr::Rng& rng) {
    cmr::Array3f img(s);
    const double az = rng.uniform(0.5, 1.5), ay = rng.uniform(0.5, 1.5),
                 ax = rng.uniform(0.5, 1.5);
    const double pz = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28),
                 px = rng.uniform(0.0, 6.28);
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x)
                img(z, y, x) = static_cast<float>(std::sin(az * z * 0.7 + pz) +
                                                  std::sin(ay * y * 0.6 + py) +
                                                  std::sin(ax * x * 0.5 + px));
    return img;
}

inline cmr::Volume4D make_volume(int t_len, cmr::Shape3 s, double spacing, cmr::Rng& rng) {
    cmr::Volume4D vol;
    vol.t_len = t_len;
    vol.spatial = s;
    vol.spacing_mm = {spacing, spacing, spacing};
    vol.data.resize(static_cast<std::size_t>(t_len) * s.size());
    for (auto& v : vol.data) v = static_cast<float>(rng.normal(0.0, 1.0));
    return vol;
}

// Displacements whose warped coordinates stay away from lattice points, so
// trilinear interpolation is differentiable along the finite-difference path.
inline cmr::VectorField3D lattice_safe_field(cmr::Shape3 s, cmr::Rng& rng) {
    cmr::VectorField3D f(s, 1.0);
    for (auto& d : f.disp) {
        const double mag = rng.uniform(0.3, 0.7);
        d = rng.uniform() < 0.5 ? -mag : mag;
    }
    return f;
}

// ---- independent oracles ----------------------------------------------

// Naive sliding-window SSIM, one window at a time.
inline double ssim2d_window_oracle(const std::vector<double>& x, const std::vector<double>& y,
                                   int ny, int nx, int N, double e1, double e2) {
    const int wy = ny - N + 1, wx = nx - N + 1;
    const double n = static_cast<double>(N) * N;
    double acc = 0.0;
    for (int oy = 0; oy < wy; ++oy)
        for (int ox = 0; ox < wx; ++ox) {
            double sx = 0, sy = 0;
            for (int j = 0; j < N; ++j)
                for (int i = 0; i < N; ++i) {
                    sx += x[(oy + j) * nx + (ox + i)];
                    sy += y[(oy + j) * nx + (ox + i)];
                }
            const double mx = sx / n, my = sy / n;
            double vx = 0, vy = 0, cov = 0;
            for (int j = 0; j < N; ++j)
                for (int i = 0; i < N; ++i) {
                    const double dx = x[(oy + j) * nx + (ox + i)] - mx;
                    const double dy = y[(oy + j) * nx + (ox + i)] - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cov += dx * dy;
                }
            vx /= n;
            vy /= n;
            cov /= n;
            acc += ((2 * mx * my + e1) * (2 * cov + e2)) /
                   ((mx * mx + my * my + e1) * (vx + vy + e2));
        }
    return acc / (wy * wx);
}

// Direct forward-difference evaluation of the diffusion energy.
inline double smoothness_oracle(const cmr::VectorField3D& f) {
    const cmr::Shape3 s = f.shape;
    double acc = 0.0;
    for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < s.y; ++y)
            for (int x = 0; x < s.x; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v = f.at(z, y, x, c);
                    if (z + 1 < s.z) acc += (f.at(z + 1, y, x, c) - v) * (f.at(z + 1, y, x, c) - v);
                    if (y + 1 < s.y) acc += (f.at(z, y + 1, x, c) - v) * (f.at(z, y + 1, x, c) - v);
                    if (x + 1 < s.x) acc += (f.at(z, y, x + 1, c) - v) * (f.at(z, y, x + 1, c) - v);
                }
    return acc;
}

// Central finite differences of the registration loss against the analytic
// gradient; returns the relative L2 error.
inline double gradient_check(const cmr::Array3f& fixed, const cmr::Array3f& moving,
                             cmr::VectorField3D field, const cmr::RegistrationConfig& cfg,
                             double h = 1e-5) {
    cmr::Array3d fx(fixed.shape), mv(moving.shape);
    std::copy(fixed.data.begin(), fixed.data.end(), fx.data.begin());
    std::copy(moving.data.begin(), moving.data.end(), mv.data.begin());

    cmr::VectorField3D grad;
    cmr::loss_grad(fx, mv, field, cfg, grad);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < field.disp.size(); ++i) {
        const double orig = field.disp[i];
        field.disp[i] = orig + h;
        const double up = cmr::loss(fx, mv, field, cfg).total;
        field.disp[i] = orig - h;
        const double down = cmr::loss(fx, mv, field, cfg).total;
        field.disp[i] = orig;
        const double fd = (up - down) / (2.0 * h);
        num += (fd - grad.disp[i]) * (fd - grad.disp[i]);
        den += fd * fd;
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-30);
}

// Smooth random cyclic signal from a few harmonics.
inline std::vector<double> random_cyclic_signal(int t_len, cmr::Rng& rng) {
    std::vector<double> out(t_len, 0.0);
    const int harmonics = 1 + rng.uniform_int(0, 2);
    for (int h = 1; h <= harmonics; ++h) {
        const double amp = rng.uniform(0.3, 1.0) / h;
        const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        for (int t = 0; t < t_len; ++t)
            out[t] += amp * std::sin(2.0 * 3.14159265358979323846 * h * t / t_len + phase);
    }
    return out;
}

template <typename T>
std::vector<T> rotate_signal(const std::vector<T>& v, int k) {
    const int n = static_cast<int>(v.size());
    std::vector<T> out(v.size());
    for (int t = 0; t < n; ++t) out[t] = v[((t - k) % n + n) % n];
    return out;
}

} // namespace testutil

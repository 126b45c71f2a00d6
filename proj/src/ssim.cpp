#include "cmr/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cmr/errors.hpp"

namespace cmr {

namespace {

void check_params(const SsimParams& p) {
    if (p.window < 3 || p.window % 2 == 0)
        throw usage_error("ssim window must be odd and >= 3, got " + std::to_string(p.window));
}

// Summed-area table with a zero top/left border row/column.
class Sat {
public:
    Sat(int ny, int nx) : nx_(nx), acc_((ny + 1) * (nx + 1), 0.0) {}

    void build(const double* v, int ny, int nx) {
        for (int y = 0; y < ny; ++y) {
            double row = 0.0;
            for (int x = 0; x < nx; ++x) {
                row += v[y * nx + x];
                acc_[(y + 1) * (nx_ + 1) + (x + 1)] = acc_[y * (nx_ + 1) + (x + 1)] + row;
            }
        }
    }

    // sum over [y0, y1) x [x0, x1)
    double box(int y0, int x0, int y1, int x1) const {
        const int w = nx_ + 1;
        return acc_[y1 * w + x1] - acc_[y0 * w + x1] - acc_[y1 * w + x0] + acc_[y0 * w + x0];
    }

private:
    int nx_;
    std::vector<double> acc_;
};

struct SliceResult {
    double ssim_sum = 0.0;
    int n_windows = 0;
};

// Per-window statistics via summed-area tables; optionally emits the
// per-window linear-gradient coefficient maps (a + b*x_q + c*y_q form).
SliceResult slice_ssim(const double* x, const double* y, int ny, int nx, int N, double e1,
                       double e2, std::vector<double>* amap, std::vector<double>* bmap,
                       std::vector<double>* cmap) {
    const int wy_count = ny - N + 1;
    const int wx_count = nx - N + 1;
    const double n = static_cast<double>(N) * N;

    std::vector<double> xx(static_cast<std::size_t>(ny) * nx);
    std::vector<double> yy(xx.size()), xy(xx.size());
    for (std::size_t i = 0; i < xx.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    Sat sx(ny, nx), sy(ny, nx), sxx(ny, nx), syy(ny, nx), sxy(ny, nx);
    sx.build(x, ny, nx);
    sy.build(y, ny, nx);
    sxx.build(xx.data(), ny, nx);
    syy.build(yy.data(), ny, nx);
    sxy.build(xy.data(), ny, nx);

    SliceResult res;
    res.n_windows = wy_count * wx_count;
    for (int wy = 0; wy < wy_count; ++wy) {
        for (int wx = 0; wx < wx_count; ++wx) {
            const int y1 = wy + N, x1 = wx + N;
            const double mx = sx.box(wy, wx, y1, x1) / n;
            const double my = sy.box(wy, wx, y1, x1) / n;
            const double vx = std::max(sxx.box(wy, wx, y1, x1) / n - mx * mx, 0.0);
            const double vy = std::max(syy.box(wy, wx, y1, x1) / n - my * my, 0.0);
            const double cov = sxy.box(wy, wx, y1, x1) / n - mx * my;

            const double a1 = 2.0 * mx * my + e1;
            const double a2 = 2.0 * cov + e2;
            const double b1 = mx * mx + my * my + e1;
            const double b2 = vx + vy + e2;
            const double s = (a1 * a2) / (b1 * b2);
            res.ssim_sum += s;

            if (amap) {
                const double inv_b1b2 = 1.0 / (b1 * b2);
                const double b = (2.0 / n) * a1 * inv_b1b2;
                const double c = -(2.0 / n) * s / b2;
                const double a =
                    (2.0 / n) * (mx * (a2 - a1) * inv_b1b2 + s * my * (1.0 / b2 - 1.0 / b1));
                const std::size_t w = static_cast<std::size_t>(wy) * wx_count + wx;
                (*amap)[w] = a;
                (*bmap)[w] = b;
                (*cmap)[w] = c;
            }
        }
    }
    return res;
}

double joint_range(std::span<const double> x, std::span<const double> y) {
    double lo = x[0], hi = x[0];
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

} // namespace

SsimParams resolve_ssim_eps(SsimParams p, double dynamic_range) {
    const double L = dynamic_range > 0.0 ? dynamic_range : 1.0;
    if (p.eps1 <= 0.0) p.eps1 = (0.01 * L) * (0.01 * L);
    if (p.eps2 <= 0.0) p.eps2 = (0.03 * L) * (0.03 * L);
    return p;
}

double ssim2d(std::span<const double> x, std::span<const double> y, int ny, int nx,
              const SsimParams& params) {
    check_params(params);
    if (x.size() != y.size() || x.size() != static_cast<std::size_t>(ny) * nx)
        throw usage_error("ssim: image shapes do not match");
    if (ny < params.window || nx < params.window)
        throw usage_error("ssim: image smaller than the " + std::to_string(params.window) +
                          "x" + std::to_string(params.window) + " window");
    const SsimParams p = resolve_ssim_eps(params, joint_range(x, y));
    const SliceResult r =
        slice_ssim(x.data(), y.data(), ny, nx, p.window, p.eps1, p.eps2, nullptr, nullptr, nullptr);
    return r.ssim_sum / r.n_windows;
}

double ssim3d(const Array3d& x, const Array3d& y, const SsimParams& params) {
    check_params(params);
    if (!(x.shape == y.shape)) throw usage_error("ssim3d: volume shapes do not match");
    if (x.shape.y < params.window || x.shape.x < params.window)
        throw usage_error("ssim3d: slice smaller than the ssim window");
    const SsimParams p =
        resolve_ssim_eps(params, joint_range(std::span(x.data), std::span(y.data)));

    const std::size_t slice = static_cast<std::size_t>(x.shape.y) * x.shape.x;
    double acc = 0.0;
    for (int z = 0; z < x.shape.z; ++z) {
        const SliceResult r =
            slice_ssim(x.data.data() + z * slice, y.data.data() + z * slice, x.shape.y, x.shape.x,
                       p.window, p.eps1, p.eps2, nullptr, nullptr, nullptr);
        acc += r.ssim_sum / r.n_windows;
    }
    return acc / x.shape.z;
}

double ssim3d_grad(const Array3d& x, const Array3d& y, const SsimParams& params,
                   Array3d& dssim_dy) {
    check_params(params);
    if (!(x.shape == y.shape)) throw usage_error("ssim3d: volume shapes do not match");
    if (x.shape.y < params.window || x.shape.x < params.window)
        throw usage_error("ssim3d: slice smaller than the ssim window");
    if (!(params.eps1 > 0.0 && params.eps2 > 0.0))
        throw usage_error("ssim3d_grad requires resolved eps constants");

    const int N = params.window;
    const int ny = x.shape.y, nx = x.shape.x, nz = x.shape.z;
    const int wy_count = ny - N + 1;
    const int wx_count = nx - N + 1;
    const std::size_t slice = static_cast<std::size_t>(ny) * nx;

    dssim_dy = Array3d(x.shape, 0.0);
    std::vector<double> amap(static_cast<std::size_t>(wy_count) * wx_count);
    std::vector<double> bmap(amap.size()), cmap(amap.size());

    double acc = 0.0;
    for (int z = 0; z < nz; ++z) {
        const double* xs = x.data.data() + z * slice;
        const double* ys = y.data.data() + z * slice;
        const SliceResult r =
            slice_ssim(xs, ys, ny, nx, N, params.eps1, params.eps2, &amap, &bmap, &cmap);
        acc += r.ssim_sum / r.n_windows;

        Sat sa(wy_count, wx_count), sb(wy_count, wx_count), sc(wy_count, wx_count);
        sa.build(amap.data(), wy_count, wx_count);
        sb.build(bmap.data(), wy_count, wx_count);
        sc.build(cmap.data(), wy_count, wx_count);

        const double norm = 1.0 / (static_cast<double>(r.n_windows) * nz);
        double* grad = dssim_dy.data.data() + z * slice;
        for (int py = 0; py < ny; ++py) {
            const int wy0 = std::max(0, py - N + 1);
            const int wy1 = std::min(py, wy_count - 1) + 1;
            for (int px = 0; px < nx; ++px) {
                const int wx0 = std::max(0, px - N + 1);
                const int wx1 = std::min(px, wx_count - 1) + 1;
                if (wy0 >= wy1 || wx0 >= wx1) continue;
                const double a = sa.box(wy0, wx0, wy1, wx1);
                const double b = sb.box(wy0, wx0, wy1, wx1);
                const double c = sc.box(wy0, wx0, wy1, wx1);
                grad[py * nx + px] = (a + b * xs[py * nx + px] + c * ys[py * nx + px]) * norm;
            }
        }
    }
    return acc / nz;
}

} // namespace cmr

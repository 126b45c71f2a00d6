#include "cmr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmr {

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    q = std::clamp(q, 0.0, 1.0);
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double mean(const std::vector<double>& values) {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    const double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    const double sd = values.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(values.size()));
    return {m, sd};
}

double median(std::vector<double> values) {
    return quantile_linear(std::move(values), 0.5);
}

double mad(const std::vector<double>& values) {
    const double med = median(std::vector<double>(values));
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) dev.push_back(std::fabs(v - med));
    return median(std::move(dev));
}

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int j = -radius; j <= radius; ++j) {
        const double w = std::exp(-0.5 * (j * j) / (sigma * sigma));
        k[j + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

std::vector<double> smooth_cyclic(const std::vector<double>& signal,
                                  const std::vector<double>& kernel) {
    const int t_len = static_cast<int>(signal.size());
    const int radius = static_cast<int>(kernel.size()) / 2;
    std::vector<double> out(signal.size(), 0.0);
    for (int t = 0; t < t_len; ++t) {
        double acc = 0.0;
        for (int j = -radius; j <= radius; ++j) {
            int idx = (t - j) % t_len;
            if (idx < 0) idx += t_len;
            acc += kernel[j + radius] * signal[idx];
        }
        out[t] = acc;
    }
    return out;
}

} // namespace cmr

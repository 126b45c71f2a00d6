#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace cmr {

/// Quantile by linear interpolation between order statistics
/// (position q*(n-1) on the sorted sample).
double quantile_linear(std::vector<double> values, double q);

double mean(const std::vector<double>& values);

/// Population mean and standard deviation (divide by n).
std::pair<double, double> mean_std(const std::vector<double>& values);

double median(std::vector<double> values);

/// Median absolute deviation about the median.
double mad(const std::vector<double>& values);

/// Normalized Gaussian kernel, radius = ceil(4*sigma). sigma <= 0 yields
/// the identity kernel {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Cyclic (wrap-around) convolution of a length-T signal with a symmetric
/// kernel centered at index radius.
std::vector<double> smooth_cyclic(const std::vector<double>& signal,
                                  const std::vector<double>& kernel);

} // namespace cmr

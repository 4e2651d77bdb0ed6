#pragma once

#include <functional>
#include <vector>

#include "widthlab/types.hpp"

namespace widthlab {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs);

// Delete-one-block jackknife. Row b of block_sums holds the sums of the raw
// statistics over the counts[b] samples of block b; stat maps a vector of
// sample means to the estimate.
MeanSe jackknife(const Matrix& block_sums, const Vector& counts, const std::function<double(const Vector&)>& stat);

// Two-sample Kolmogorov-Smirnov statistic D.
double ks_statistic(std::vector<double> a, std::vector<double> b);
// Asymptotic critical value of D at level alpha.
double ks_critical(std::size_t n1, std::size_t n2, double alpha);

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r2 = 0.0;
};

// Least squares fit of log y = log c + p log x; requires positive data.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

// (intercept a, slope b) of ordinary least squares y ~ a + b x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

} // namespace widthlab

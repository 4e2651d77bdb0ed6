#include "widthlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "widthlab/errors.hpp"

namespace widthlab {

MeanSe mean_se(const std::vector<double>& xs) {
    if (xs.empty()) fail(Errc::InvalidArgument, "mean of empty sample");
    const double n = double(xs.size());
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {m, std::sqrt(var / n)};
}

MeanSe jackknife(const Matrix& block_sums, const Vector& counts, const std::function<double(const Vector&)>& stat) {
    const Eigen::Index B = block_sums.rows();
    if (B < 2 || counts.size() != B) fail(Errc::InvalidArgument, "jackknife needs at least two blocks");
    const Vector total = block_sums.colwise().sum().transpose();
    const double N = counts.sum();
    const double full = stat(total / N);
    std::vector<double> loo(B);
    double avg = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
        loo[b] = stat((total - block_sums.row(b).transpose()) / (N - counts[b]));
        avg += loo[b];
    }
    avg /= double(B);
    double ss = 0.0;
    for (double v : loo) ss += (v - avg) * (v - avg);
    return {full, std::sqrt(double(B - 1) / double(B) * ss)};
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) fail(Errc::InvalidArgument, "KS on empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    return d;
}

double ks_critical(std::size_t n1, std::size_t n2, double alpha) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(double(n1 + n2) / (double(n1) * double(n2)));
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail(Errc::InvalidArgument, "linear fit needs matching data");
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) fail(Errc::InvalidArgument, "degenerate abscissae");
    const double b = sxy / sxx;
    return {my - b * mx, b};
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(Errc::LogOfNonPositive, "power-law fit on non-positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const auto [a, b] = linear_fit(lx, ly);
    double my = 0;
    for (double v : ly) my += v;
    my /= double(ly.size());
    double ssr = 0, sst = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (a + b * lx[i]);
        ssr += r * r;
        sst += (ly[i] - my) * (ly[i] - my);
    }
    return {b, std::exp(a), sst > 0 ? 1.0 - ssr / sst : 1.0};
}

} // namespace widthlab

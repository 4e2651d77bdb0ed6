#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "widthlab/errors.hpp"
#include "widthlab/rng.hpp"
#include "widthlab/stats.hpp"

using namespace widthlab;
using doctest::Approx;

TEST_CASE("mean and standard error") {
    const auto r = mean_se({1.0, 2.0, 3.0, 4.0});
    CHECK(r.mean == Approx(2.5));
    CHECK(r.se == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("jackknife of a linear statistic equals the plain standard error") {
    // Blocks of one sample each: the delete-one jackknife of the mean reproduces s / sqrt(N).
    const std::vector<double> xs = {0.3, -1.2, 2.5, 0.7, 1.1, -0.4};
    Matrix sums(xs.size(), 1);
    Vector counts = Vector::Ones(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sums(i, 0) = xs[i];
    const auto jk = jackknife(sums, counts, [](const Vector& v) { return v[0]; });
    const auto ms = mean_se(xs);
    CHECK(jk.mean == Approx(ms.mean));
    CHECK(jk.se == Approx(ms.se));
}

TEST_CASE("jackknife of a variance") {
    PhiloxEngine eng(5, 0);
    NormalSampler normal;
    const int B = 200, per = 100;
    Matrix sums = Matrix::Zero(B, 2);
    Vector counts = Vector::Constant(B, per);
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < per; ++i) {
            const double z = 2.0 * normal(eng);
            sums(b, 0) += z;
            sums(b, 1) += z * z;
        }
    const auto jk = jackknife(sums, counts, [](const Vector& v) { return v[1] - v[0] * v[0]; });
    CHECK(std::abs(jk.mean - 4.0) < 4 * jk.se);
    // Var of the sample variance of N normals with sigma^2 = 4: 2 sigma^4 / N.
    CHECK(jk.se == Approx(std::sqrt(2.0 * 16.0 / (B * per))).epsilon(0.2));
}

TEST_CASE("Kolmogorov-Smirnov") {
    CHECK(ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_statistic({1, 2, 3}, {4, 5, 6}) == 1.0);
    CHECK(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}) == Approx(0.5));
    CHECK(ks_critical(100000, 100000, 0.05) == Approx(1.358 * std::sqrt(2.0 / 100000)).epsilon(1e-3));
}

TEST_CASE("power-law fit") {
    const std::vector<double> x = {64, 256, 1024};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
    const auto f = fit_power_law(x, y);
    CHECK(f.exponent == Approx(-0.5));
    CHECK(f.prefactor == Approx(3.0));
    CHECK(f.r2 == Approx(1.0));
    CHECK_THROWS_AS(fit_power_law({1, 2}, {1, -1}), Error);
    const auto [a, b] = linear_fit({0, 1, 2}, {1, 3, 5});
    CHECK(a == Approx(1.0));
    CHECK(b == Approx(2.0));
}

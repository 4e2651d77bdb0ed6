#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "widthlab/criticality.hpp"
#include "widthlab/errors.hpp"

using namespace widthlab;
using doctest::Approx;

TEST_CASE("variance fixed points with closed forms") {
    // q = b + w q  ->  q* = b / (1 - w)
    auto lin = find_qstar(Nonlinearity::linear(), 0.1, 0.5);
    CHECK(lin.status == FixedPointStatus::converged);
    CHECK(lin.value == Approx(0.2).epsilon(1e-10));
    auto relu = find_qstar(Nonlinearity::relu(), 0.1, 1.0);
    CHECK(relu.value == Approx(0.2).epsilon(1e-10));
    auto id = find_qstar(Nonlinearity::relu(), 0.0, 2.0);
    CHECK(id.status == FixedPointStatus::every_point_fixed);
    CHECK(id.value == 2.0);
    auto none = find_qstar(Nonlinearity::relu(), 0.1, 3.0);
    CHECK(none.status == FixedPointStatus::not_converged);
}

TEST_CASE("tanh at (0, 1) approaches q* = 0 algebraically and is critical") {
    const auto q = find_qstar(Nonlinearity::tanh(), 0.0, 1.0);
    CHECK(q.status == FixedPointStatus::converged);
    CHECK(q.value < 1e-6);
    const auto p = phase_classify(Nonlinearity::tanh(), 0.0, 1.0);
    CHECK(p.phase == Phase::critical);
    CHECK(std::isinf(p.xi_c));
}

TEST_CASE("fixed point satisfies the map") {
    const auto phi = Nonlinearity::tanh();
    for (auto [b, w] : {std::pair{0.05, 1.5}, std::pair{0.3, 0.8}, std::pair{1.0, 3.0}}) {
        const auto q = find_qstar(phi, b, w);
        REQUIRE(q.status == FixedPointStatus::converged);
        CHECK(q_map(phi, q.value, b, w) == Approx(q.value).epsilon(1e-10));
    }
}

TEST_CASE("correlation fixed point by phase") {
    const auto phi = Nonlinearity::tanh();
    const auto ordered = phase_classify(phi, 0.1, 1.0);
    CHECK(ordered.phase == Phase::ordered);
    CHECK(ordered.c_star == 1.0);
    CHECK(ordered.chi1 < 1.0);
    const auto chaotic = phase_classify(phi, 0.05, 3.0);
    CHECK(chaotic.phase == Phase::chaotic);
    CHECK(chaotic.c_star < 1.0);
    CHECK(c_map(phi, chaotic.c_star, chaotic.q_star, 0.05, 3.0) == Approx(chaotic.c_star).epsilon(1e-9));
    CHECK(std::isfinite(chaotic.xi_c));
    CHECK(chaotic.xi_c > 0.0);
}

TEST_CASE("chi1 and chi_parallel") {
    CHECK(chi1(Nonlinearity::relu(), 1.0, 2.0) == 1.0);
    CHECK(chi_parallel(Nonlinearity::relu(), 1.0, 2.0) == 1.0);
    CHECK(chi1(Nonlinearity::linear(), 3.0, 0.7) == 0.7);
    // E tanh'(0)^2 = 1 at q -> 0
    CHECK(chi1(Nonlinearity::tanh(), 1e-12, 1.0) == Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(chi1(Nonlinearity::tanh(), -1.0, 1.0), Error);
}

TEST_CASE("depth scale edge cases") {
    // Inside the band the depth scale is infinite.
    const auto crit = depth_scales(Nonlinearity::relu(), 1.0, 1.0, 2.0);
    CHECK(std::isinf(crit.xi_q));
    CHECK(std::isinf(crit.xi_c));
    // Expanding directions have no depth scale.
    const auto exp = depth_scales(Nonlinearity::relu(), 1.0, 1.0, 3.0);
    CHECK(std::isnan(exp.xi_c));
    // linear at w = 0.5: xi = -1 / log 0.5
    const auto lin = depth_scales(Nonlinearity::linear(), 1.0, 1.0, 0.5);
    CHECK(lin.xi_q == Approx(1.0 / std::log(2.0)));
    // cos has E[phi phi''] < 0 large enough to make chi_parallel negative.
    const auto cosine = Nonlinearity::custom("cos", [](double x) { return std::cos(x); },
                                             [](double x) { return -std::sin(x); },
                                             [](double x) { return -std::cos(x); });
    CHECK(chi_parallel(cosine, 0.1, 1.0) < 0.0);
    CHECK_THROWS_AS(depth_scales(cosine, 0.1, 1.0, 1.0), Error);
}

TEST_CASE("phase diagram") {
    const std::vector<double> b = {0.0, 0.05, 0.2}, w = {0.5, 1.0, 2.5};
    const auto par = phase_diagram(Nonlinearity::tanh(), b, w);
    const auto ser = phase_diagram(Nonlinearity::tanh(), b, w, {}, Exec::serial);
    REQUIRE(par.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(par[i].sigma_b2 == b[i / 3]);
        CHECK(par[i].sigma_w2 == w[i % 3]);
        CHECK(par[i].q_star == ser[i].q_star);
        CHECK(par[i].phase == ser[i].phase);
        if (par[i].phase == Phase::ordered) CHECK(par[i].c_star == 1.0);
        if (par[i].phase == Phase::chaotic) CHECK(par[i].c_star < 1.0);
    }
    CHECK(par[1].phase == Phase::critical);
    CHECK(par[2].phase == Phase::chaotic);
    CHECK(par[0].phase == Phase::ordered);
}

TEST_CASE("measured correlation decay matches xi_c") {
    const auto phi = Nonlinearity::tanh();
    const auto p = phase_classify(phi, 0.2, 1.2);
    REQUIRE(p.phase == Phase::ordered);
    double c = 0.5, prev = std::abs(c - 1.0);
    double last_ratio = 0.0;
    for (int l = 0; l < 40; ++l) {
        c = c_map(phi, c, p.q_star, 0.2, 1.2);
        const double d = std::abs(c - 1.0);
        last_ratio = d / prev;
        prev = d;
    }
    CHECK(-1.0 / std::log(last_ratio) == Approx(p.xi_c).epsilon(0.01));
}

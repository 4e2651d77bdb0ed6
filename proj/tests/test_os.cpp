#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "widthlab/errors.hpp"
#include "widthlab/os_measure.hpp"

using namespace widthlab;

namespace {

// f(x) = v . u x / sqrt(n): linear, bias-free, one hidden layer, n0 = 1.
Mlp uv_net(int n, std::uint64_t seed) {
    NetworkSpec s{1, {n}, 1, Parameterization::ntk, 0.0, 1.0, Nonlinearity::linear()};
    PhiloxEngine eng(seed, 0);
    return init_network(s, eng);
}

} // namespace

TEST_CASE("uv network matches the hand-derived tensors") {
    const int n = 50;
    const Mlp net = uv_net(n, 3);
    const Vector u = net.W(0).col(0), v = net.W(1).row(0).transpose();
    Matrix X(3, 1);
    X << 0.7, -1.2, 0.4;
    const OsResult r = measure_Os(net, X);
    REQUIRE(r.O3.m == 3);
    REQUIRE(r.O4.m == 3);
    CHECK(r.richardson < 0.01);
    const double c3 = 4.0 * u.dot(v) / std::pow(n, 1.5);
    const double c4 = 4.0 * (u.squaredNorm() + v.squaredNorm()) / double(n * n);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                const double e3 = c3 * X(a, 0) * X(b, 0) * X(c, 0);
                CHECK(std::abs(r.O3(a, b, c) - e3) <= 1e-4 * std::abs(e3));
                for (int d = 0; d < 3; ++d) {
                    const double e4 = c4 * X(a, 0) * X(b, 0) * X(c, 0) * X(d, 0);
                    CHECK(std::abs(r.O4(a, b, c, d) - e4) <= 1e-4 * std::abs(e4));
                }
            }
}

TEST_CASE("third order only") {
    const Mlp net = uv_net(20, 5);
    const OsResult r = measure_Os(net, Matrix::Ones(2, 1), 3);
    CHECK(r.O3.m == 2);
    CHECK(r.O4.m == 0);
}

TEST_CASE("tanh tensors are symmetric in the kernel indices") {
    NetworkSpec s{2, {16}, 1, Parameterization::ntk, 0.1, 1.0, Nonlinearity::tanh()};
    PhiloxEngine eng(8, 0);
    const Mlp net = init_network(s, eng);
    Matrix X(2, 2);
    X << 0.3, -0.5, 1.0, 0.2;
    const OsResult r = measure_Os(net, X);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) CHECK(std::abs(r.O3(a, b, c) - r.O3(b, a, c)) < 1e-8);
}

TEST_CASE("argument checks") {
    const Mlp net = uv_net(10, 1);
    CHECK_THROWS_AS(measure_Os(net, Matrix::Ones(2, 1), 5), Error);
    CHECK_THROWS_AS(measure_Os(net, Matrix::Ones(2, 1), 4, 1e-15), Error);
    NetworkSpec big{1, {400, 400}, 1, Parameterization::ntk, 0.0, 1.0, Nonlinearity::tanh()};
    CHECK_THROWS_AS(measure_Os(Mlp(big), Matrix::Ones(1, 1)), Error);
    try {
        measure_Os(net, Matrix::Ones(2, 1), 4, 1e-15);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::StepTooSmall);
    }
}

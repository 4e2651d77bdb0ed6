#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "widthlab/errors.hpp"
#include "widthlab/finite_width.hpp"
#include "widthlab/gp.hpp"
#include "widthlab/rng.hpp"

using namespace widthlab;
using doctest::Approx;

TEST_CASE("deep linear two- and four-point functions") {
    CHECK(deep_linear_g2(3, 2.0, 0.5) == Approx(4.0));
    CHECK(deep_linear_g4(0, 8.0, 2.0, 0.5) == Approx(0.25));
    CHECK(deep_linear_g4(2, 4.0, 1.0, 1.0) == Approx(2.25));
    CHECK(deep_linear_g4(4, 64.0, 1.0, 2.0) == Approx(4.0 * std::pow(1.0 + 2.0 / 64.0, 4)));
    CHECK(deep_linear_g4(5, std::numeric_limits<double>::infinity(), 1.5, 1.0) ==
          Approx(std::pow(deep_linear_g2(5, 1.5, 1.0), 2)));
    CHECK_THROWS_AS(deep_linear_g4(1, 0.0, 1.0, 1.0), Error);
}

TEST_CASE("kappa4 recursion") {
    ArchSpec relu;
    relu.depth = 4;
    relu.input_dim = 3;
    relu.sigma_b2 = 0.0;
    relu.sigma_w2 = 2.0;
    Vector x(3);
    x << 1.0, -2.0, 0.5;
    const WidthProfile wp{{100, 50, 200, 80}, 3};
    const auto ks = kappa4_recursion(relu, wp, x);
    REQUIRE(ks.size() == 5);
    const double K = 2.0 * x.squaredNorm() / 3.0;
    double inv = 0.0;
    for (std::size_t l = 0; l < ks.size(); ++l) {
        CHECK(ks[l].K == Approx(K));
        CHECK(ks[l].ratio() == Approx(5.0 * inv).epsilon(1e-12));
        if (l < wp.widths.size()) inv += 1.0 / wp.widths[l];
    }
    CHECK(ks[0].kappa4 == 0.0);

    // Deep linear: kappa grows by 2K^2/n per layer at leading order.
    ArchSpec lin = relu;
    lin.phi = Nonlinearity::linear();
    lin.sigma_w2 = 1.0;
    const auto kl = kappa4_recursion(lin, WidthProfile{{64, 64, 64, 64}, 3}, x);
    CHECK(kl.back().ratio() == Approx(4 * 2.0 / 64.0));

    // tanh at criticality: positive, growing, of order depth / width.
    ArchSpec th = relu;
    th.phi = Nonlinearity::tanh();
    th.sigma_w2 = 1.0;
    const auto kt = kappa4_recursion(th, WidthProfile{{128, 128, 128, 128}, 3}, x);
    for (std::size_t l = 1; l < kt.size(); ++l) {
        CHECK(kt[l].kappa4 > 0.0);
        CHECK(kt[l].ratio() > 0.0);
        CHECK(kt[l].ratio() < 4.0 * l / 128.0);
    }
}

TEST_CASE("Var[phi^2] closed forms match quadrature") {
    const auto relu_q = Nonlinearity::custom("relu-q", [](double x) { return x > 0 ? x : 0.0; },
                                             [](double x) { return x > 0 ? 1.0 : 0.0; }, [](double) { return 0.0; });
    CHECK(var_sigma2(2.0, Nonlinearity::relu()) == Approx(5.0));
    CHECK(var_sigma2(2.0, relu_q) == Approx(5.0).epsilon(1e-3));
    CHECK(var_sigma2(1.5, Nonlinearity::linear()) == Approx(4.5));
    CHECK_THROWS_AS(var_sigma2(-1.0, Nonlinearity::tanh()), Error);
}

TEST_CASE("Edgeworth-corrected moments") {
    CHECK(edgeworth_moment(EdgeworthKind::single_fourth, 2.0, 0.1) == Approx(12.3));
    CHECK(edgeworth_moment(EdgeworthKind::cross_pair, 2.0, 0.1) == Approx(4.1));
}

namespace {

struct Problem {
    Matrix theta0;
    Vector f0, y;
    Tensor3 O3;
    Tensor4 O4;
};

Problem make_problem(double eps) {
    Problem p;
    p.theta0.resize(3, 3);
    p.theta0 << 2.0, 0.4, 0.1, 0.4, 1.5, 0.3, 0.1, 0.3, 1.0;
    p.f0.resize(3);
    p.y.resize(3);
    p.f0 << 0.3, -0.2, 0.5;
    p.y << 1.0, 0.2, -0.4;
    p.O3 = Tensor3(3);
    p.O4 = Tensor4(3);
    PhiloxEngine eng(11, 0);
    NormalSampler normal;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                const double v = eps * normal(eng);
                p.O3(a, b, c) = p.O3(b, a, c) = v;
                for (int d = 0; d < 3; ++d) {
                    const double w = eps * normal(eng);
                    p.O4(a, b, c, d) = p.O4(b, a, c, d) = w;
                }
            }
    return p;
}

// RK4 on df = -Theta R, dTheta = -O3.R, dO3 = -O4.R with O4 frozen.
Vector flow(const Problem& p, double T, int steps) {
    struct S {
        Vector f;
        Matrix th;
        Tensor3 o3;
    };
    auto rhs = [&](const S& s) {
        const Vector R = s.f - p.y;
        S d{-s.th * R, Matrix::Zero(3, 3), Tensor3(3)};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    d.th(a, b) -= s.o3(a, b, c) * R[c];
                    for (int e = 0; e < 3; ++e) d.o3(a, b, c) -= p.O4(a, b, c, e) * R[e];
                }
        return d;
    };
    auto axpy = [](const S& s, double h, const S& d) {
        S r{s.f + h * d.f, s.th + h * d.th, s.o3};
        for (std::size_t i = 0; i < r.o3.data.size(); ++i) r.o3.data[i] += h * d.o3.data[i];
        return r;
    };
    S s{p.f0, p.theta0, p.O3};
    const double h = T / steps;
    for (int k = 0; k < steps; ++k) {
        const S k1 = rhs(s), k2 = rhs(axpy(s, h / 2, k1)), k3 = rhs(axpy(s, h / 2, k2)), k4 = rhs(axpy(s, h, k3));
        s.f += h / 6 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f);
        s.th += h / 6 * (k1.th + 2 * k2.th + 2 * k3.th + k4.th);
        for (std::size_t i = 0; i < s.o3.data.size(); ++i)
            s.o3.data[i] += h / 6 * (k1.o3.data[i] + 2 * k2.o3.data[i] + 2 * k3.o3.data[i] + k4.o3.data[i]);
    }
    return s.f;
}

} // namespace

TEST_CASE("perturbative prediction against the integrated hierarchy") {
    const double T = 1.5;
    double prev_err = 0.0;
    for (double eps : {0.02, 0.01, 0.005}) {
        const Problem p = make_problem(eps);
        const Vector exact = flow(p, T, 3000);
        const Vector pert = perturbative_train_prediction(p.theta0, p.f0, p.y, p.O3, p.O4, T);
        const Vector plain = ntk_gd_train_evolution(p.theta0, p.f0, p.y, {T})[0];
        const double err = (pert - exact).norm();
        CHECK(err < (plain - exact).norm());
        if (prev_err > 0.0) CHECK(prev_err / err == Approx(4.0).epsilon(0.15)); // error is second order
        prev_err = err;
    }
}

TEST_CASE("Theta1 limits") {
    const Problem p = make_problem(0.05);
    const Vector R0 = p.f0 - p.y;
    CHECK(theta1_t(p.theta0, R0, p.O3, p.O4, 0.0).norm() == 0.0);
    const Matrix inf = theta1_infinity(p.theta0, R0, p.O3, p.O4);
    CHECK((theta1_t(p.theta0, R0, p.O3, p.O4, 200.0) - inf).norm() < 1e-10);
    // Without O4 the infinite-time correction is -O3 . Theta0^{-1} R0.
    Problem q = p;
    q.O4 = Tensor4(3);
    const Vector w = q.theta0.llt().solve(R0);
    const Matrix i3 = theta1_infinity(q.theta0, R0, q.O3, q.O4);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double e = 0.0;
            for (int c = 0; c < 3; ++c) e -= q.O3(a, b, c) * w[c];
            CHECK(i3(a, b) == Approx(e).epsilon(1e-10));
        }
    // Zero tensors leave the kernel dynamics untouched.
    const Vector plain = ntk_gd_train_evolution(p.theta0, p.f0, p.y, {0.8})[0];
    CHECK((perturbative_train_prediction(p.theta0, p.f0, p.y, Tensor3(3), Tensor4(3), 0.8) - plain).norm() < 1e-12);
    CHECK_THROWS_AS(theta1_infinity(Matrix::Ones(3, 3), R0, p.O3, p.O4), Error);
}

namespace {

// Exact E[J^4] for a ReLU path sum with weight fourth moment mu4 (variance units),
// tracking A = E[(sum_i u_i^2)^2] and B = E[sum_i u_i^4] layer by layer.
double jacobian4_recursion(const WidthProfile& wp, double mu4) {
    const double s0 = 2.0 / wp.input_dim;
    double n = wp.widths[0];
    double A = n * mu4 * s0 * s0 + n * (n - 1) * s0 * s0;
    double B = n * mu4 * s0 * s0;
    for (std::size_t l = 1; l < wp.widths.size(); ++l) {
        const double s = 2.0 / wp.widths[l - 1];
        const double np = wp.widths[l];
        const double s4 = B / 2, s22 = (A + B) / 4; // masked sums
        const double diag = s * s * ((mu4 - 3) * s4 + 3 * s22);
        A = np * diag + np * (np - 1) * s * s * s22;
        B = np * diag;
    }
    const double s = 2.0 / wp.widths.back();
    return s * s * ((mu4 - 3) * B / 2 + 3 * (A + B) / 4);
}

} // namespace

TEST_CASE("Jacobian moments") {
    CHECK(jacobian_moment2(4) == 0.5);
    const WidthProfile wp{{64, 64}, 4};
    CHECK(jacobian_moment4(wp) == Approx(0.75 * std::exp(10.0 / 64.0)));
    CHECK(jacobian_moment4_product(wp) == Approx(0.75 * std::pow(1.0 + 5.0 / 64.0, 2)));
    CHECK(jacobian_moment4_product(wp) == Approx(jacobian4_recursion(wp, 3.0)));

    const WidthProfile small{{3, 3}, 2};
    CHECK(path_moment_bruteforce(small, 2) == Approx(1.0));
    CHECK(path_moment_bruteforce(small, 4) == Approx(jacobian_moment4_product(small)));
    CHECK(path_moment_bruteforce(small, 4) == Approx(jacobian4_recursion(small, 3.0)));
    for (double mu4 : {1.8, 5.0}) {
        CHECK(path_moment_bruteforce(small, 4, mu4) == Approx(jacobian4_recursion(small, mu4)));
        CHECK(path_moment_bruteforce(WidthProfile{{2, 4, 2}, 3}, 4, mu4) ==
              Approx(jacobian4_recursion(WidthProfile{{2, 4, 2}, 3}, mu4)));
    }
    CHECK_THROWS_AS(path_moment_bruteforce(WidthProfile{{64, 64, 64}, 2}, 4), Error);
    CHECK_THROWS_AS(path_moment_bruteforce(small, 3), Error);
}

TEST_CASE("chi-square log statistics") {
    const auto s2 = chi_square_log_stats(2.0);
    CHECK(s2.mean == Approx(-0.5 * 0.57721566490153286));
    CHECK(s2.variance == Approx(std::numbers::pi * std::numbers::pi / 24.0));
    // Leading large-k behaviour of the exact values.
    const auto big = chi_square_log_stats(1e4);
    CHECK(big.mean * 2e4 == Approx(-1.0).epsilon(1e-3));
    CHECK(big.variance * 2e4 == Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(chi_square_log_stats(0.0), Error);
}

TEST_CASE("log-normal Jacobian parameters") {
    const WidthProfile wp{{64, 128}, 3};
    const auto r = lognormal_jacobian_params(wp, JacobianKind::relu);
    const double beta = 5.0 * (1.0 / 64 + 1.0 / 128);
    CHECK(r.log_mean == Approx(-beta / 2));
    CHECK(r.log_variance == Approx(beta));
    const auto l = lognormal_jacobian_params(wp, JacobianKind::linear);
    CHECK(l.log_mean == Approx(chi_square_log_stats(64).mean + chi_square_log_stats(128).mean));
    CHECK(l.log_variance == Approx(chi_square_log_stats(64).variance + chi_square_log_stats(128).variance));
}

#include "widthlab/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "widthlab/errors.hpp"

namespace widthlab {

namespace {

constexpr double kPi = std::numbers::pi;

double erf_deriv(double x) { return 2.0 / std::sqrt(kPi) * std::exp(-x * x); }

} // namespace

double Nonlinearity::value(double x) const {
    switch (kind) {
    case PhiKind::relu: return x > 0.0 ? x : 0.0;
    case PhiKind::tanh: return std::tanh(x);
    case PhiKind::linear: return x;
    case PhiKind::erf: return std::erf(x);
    case PhiKind::custom: return f(x);
    }
    return 0.0;
}

double Nonlinearity::deriv(double x) const {
    switch (kind) {
    case PhiKind::relu: return x > 0.0 ? 1.0 : 0.0;
    case PhiKind::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case PhiKind::linear: return 1.0;
    case PhiKind::erf: return erf_deriv(x);
    case PhiKind::custom: return d1(x);
    }
    return 0.0;
}

double Nonlinearity::deriv2(double x) const {
    switch (kind) {
    case PhiKind::relu: return 0.0;
    case PhiKind::tanh: {
        const double t = std::tanh(x);
        return -2.0 * t * (1.0 - t * t);
    }
    case PhiKind::linear: return 0.0;
    case PhiKind::erf: return -2.0 * x * erf_deriv(x);
    case PhiKind::custom: return d2(x);
    }
    return 0.0;
}

Nonlinearity Nonlinearity::relu() { return {PhiKind::relu, "relu", {}, {}, {}}; }
Nonlinearity Nonlinearity::tanh() { return {PhiKind::tanh, "tanh", {}, {}, {}}; }
Nonlinearity Nonlinearity::linear() { return {PhiKind::linear, "linear", {}, {}, {}}; }
Nonlinearity Nonlinearity::erf() { return {PhiKind::erf, "erf", {}, {}, {}}; }

Nonlinearity Nonlinearity::custom(std::string name, std::function<double(double)> f,
                                  std::function<double(double)> d1, std::function<double(double)> d2) {
    if (!f || !d1) fail(Errc::InvalidArgument, "custom nonlinearity needs value and first derivative");
    if (!d2) {
        auto g = d1;
        d2 = [g](double x) {
            const double h = 1e-5 * (1.0 + std::abs(x));
            return (g(x + h) - g(x - h)) / (2.0 * h);
        };
    }
    return {PhiKind::custom, std::move(name), std::move(f), std::move(d1), std::move(d2)};
}

Nonlinearity Nonlinearity::from_name(const std::string& name) {
    if (name == "relu") return relu();
    if (name == "tanh") return tanh();
    if (name == "linear") return linear();
    if (name == "erf") return erf();
    fail(Errc::InvalidArgument, "unknown nonlinearity '" + name + "'");
}

namespace {

QuadratureRule build_rule(int n) {
    // Jacobi matrix of the orthonormal probabilists' Hermite polynomials.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    std::vector<double> x(es.eigenvalues().data(), es.eigenvalues().data() + n);

    // Newton polish on p_n, then Christoffel weights 1 / sum_k p_k(x)^2.
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double xi = x[i];
        double ssum = 0.0;
        for (int it = 0; it < 3; ++it) {
            double pm1 = 0.0, p = 1.0;
            ssum = 1.0;
            for (int k = 0; k < n; ++k) {
                const double pn = (xi * p - std::sqrt(double(k)) * pm1) / std::sqrt(double(k + 1));
                pm1 = p;
                p = pn;
                if (k + 1 < n) ssum += p * p;
            }
            // p = p_n, pm1 = p_{n-1}; p_n' = sqrt(n) p_{n-1}
            const double dp = std::sqrt(double(n)) * pm1;
            if (dp != 0.0) xi -= p / dp;
        }
        rule.nodes[i] = xi;
        rule.weights[i] = 1.0 / ssum;
    }
    for (int i = 0; i < n / 2; ++i) {
        const double a = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
        rule.nodes[i] = -a;
        rule.nodes[n - 1 - i] = a;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2) rule.nodes[n / 2] = 0.0;
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    for (double& w : rule.weights) w /= wsum;
    return rule;
}

template <class G>
double integrate1(const G& g, double variance, const GaussOptions& opts) {
    if (!std::isfinite(variance)) fail(Errc::NonFiniteInput, "variance is not finite");
    if (variance < 0.0) fail(Errc::NegativeVariance, "variance " + std::to_string(variance));
    if (variance == 0.0) return g(0.0);
    const auto& rule = gauss_hermite(opts.order);
    const double s = std::sqrt(variance);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * g(s * rule.nodes[i]);
    return acc;
}

struct Prepared {
    enum { full, left_zero, right_zero, both_zero } shape;
    double a, b, rho, r;
};

Prepared prepare(const Cov2& c, const GaussOptions& opts) {
    if (!std::isfinite(c.k11) || !std::isfinite(c.k12) || !std::isfinite(c.k22))
        fail(Errc::NonFiniteInput, "covariance entry is not finite");
    if (c.k11 < -opts.psd_tol || c.k22 < -opts.psd_tol) fail(Errc::NotPSD, "negative variance in covariance");
    const double k11 = std::max(c.k11, 0.0), k22 = std::max(c.k22, 0.0);
    const bool z1 = k11 < opts.degenerate_tol, z2 = k22 < opts.degenerate_tol;
    if (z1 || z2) {
        if (std::abs(c.k12) > opts.degenerate_tol)
            fail(Errc::DegenerateCovariance, "zero variance with nonzero covariance");
        if (z1 && z2) return {Prepared::both_zero, 0, 0, 0, 0};
        if (z1) return {Prepared::left_zero, 0, std::sqrt(k22), 0, 0};
        return {Prepared::right_zero, std::sqrt(k11), 0, 0, 0};
    }
    const double s = std::sqrt(k11 * k22);
    if (std::abs(c.k12) - s > opts.psd_tol) fail(Errc::NotPSD, "|k12| exceeds sqrt(k11 k22)");
    const double rho = std::clamp(c.k12 / s, -1.0, 1.0);
    return {Prepared::full, std::sqrt(k11), std::sqrt(k22), rho, std::sqrt(std::max(0.0, 1.0 - rho * rho))};
}

template <class G1, class G2>
double integrate2(const G1& g1, const G2& g2, const Cov2& c, const GaussOptions& opts) {
    const Prepared p = prepare(c, opts);
    switch (p.shape) {
    case Prepared::both_zero: return g1(0.0) * g2(0.0);
    case Prepared::left_zero: return g1(0.0) * integrate1(g2, p.b * p.b, opts);
    case Prepared::right_zero: return g2(0.0) * integrate1(g1, p.a * p.a, opts);
    case Prepared::full: break;
    }
    const auto& rule = gauss_hermite(opts.order);
    const std::size_t n = rule.nodes.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double si = rule.nodes[i];
        const double left = g1(p.a * si);
        if (left == 0.0) continue;
        double inner;
        if (p.r == 0.0) {
            inner = g2(p.b * p.rho * si);
        } else {
            inner = 0.0;
            for (std::size_t j = 0; j < n; ++j) inner += rule.weights[j] * g2(p.b * (p.rho * si + p.r * rule.nodes[j]));
        }
        acc += rule.weights[i] * left * inner;
    }
    return acc;
}

} // namespace

const QuadratureRule& gauss_hermite(int order) {
    if (order < 1 || order > 400) fail(Errc::InvalidArgument, "quadrature order out of range");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<QuadratureRule>(build_rule(order));
    return *slot;
}

double gauss1d(const std::function<double(double)>& f, double variance, const GaussOptions& opts) {
    return integrate1(f, variance, opts);
}

double gauss2d(const std::function<double(double)>& g1, const std::function<double(double)>& g2,
               const Cov2& cov, const GaussOptions& opts) {
    return integrate2(g1, g2, cov, opts);
}

double f_phi(const Cov2& cov, const Nonlinearity& phi, const GaussOptions& opts) {
    if (phi.kind == PhiKind::relu) {
        const Prepared p = prepare(cov, opts);
        if (p.shape != Prepared::full) return 0.0;
        const double theta = std::acos(p.rho);
        return p.a * p.b / (2.0 * kPi) * (std::sin(theta) + (kPi - theta) * std::cos(theta));
    }
    if (phi.kind == PhiKind::linear) {
        prepare(cov, opts);
        return cov.k12;
    }
    auto g = [&phi](double x) { return phi.value(x); };
    return integrate2(g, g, cov, opts);
}

double f_phi_prime(const Cov2& cov, const Nonlinearity& phi, const GaussOptions& opts) {
    if (phi.kind == PhiKind::relu) {
        const Prepared p = prepare(cov, opts);
        switch (p.shape) {
        case Prepared::full: return (kPi - std::acos(p.rho)) / (2.0 * kPi);
        case Prepared::both_zero: return 0.0; // relu'(0) = 0
        default: return 0.0;
        }
    }
    if (phi.kind == PhiKind::linear) {
        prepare(cov, opts);
        return 1.0;
    }
    auto g = [&phi](double x) { return phi.deriv(x); };
    return integrate2(g, g, cov, opts);
}

namespace {

double wick_rec(const Matrix& c, std::vector<int>& idx, std::size_t n) {
    if (n == 0) return 1.0;
    const int first = idx[n - 1];
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double cij = c(first, idx[j]);
        if (cij == 0.0) continue;
        std::swap(idx[j], idx[n - 2]);
        acc += cij * wick_rec(c, idx, n - 2);
        std::swap(idx[j], idx[n - 2]);
    }
    return acc;
}

} // namespace

double wick_moment(const Matrix& cov, const std::vector<int>& indices) {
    if (cov.rows() != cov.cols()) fail(Errc::DimensionMismatch, "covariance must be square");
    for (int i : indices)
        if (i < 0 || i >= cov.rows()) fail(Errc::IndexOutOfRange, "index " + std::to_string(i));
    if (indices.size() % 2) return 0.0;
    if (indices.size() > 20) fail(Errc::InvalidArgument, "moment order above 20");
    std::vector<int> idx = indices;
    return wick_rec(cov, idx, idx.size());
}

} // namespace widthlab

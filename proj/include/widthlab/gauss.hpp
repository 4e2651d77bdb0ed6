#pragma once

#include <functional>
#include <string>
#include <vector>

#include "widthlab/types.hpp"

namespace widthlab {

enum class PhiKind { relu, tanh, linear, erf, custom };

// Activation with first and second derivatives. Built-ins dispatch without
// std::function; custom activations carry closures.
struct Nonlinearity {
    PhiKind kind = PhiKind::relu;
    std::string name = "relu";
    std::function<double(double)> f, d1, d2;

    double value(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;

    bool has_closed_form() const { return kind == PhiKind::relu || kind == PhiKind::linear; }

    static Nonlinearity relu();
    static Nonlinearity tanh();
    static Nonlinearity linear();
    static Nonlinearity erf();
    static Nonlinearity custom(std::string name, std::function<double(double)> f,
                               std::function<double(double)> d1, std::function<double(double)> d2);
    // relu | tanh | linear | erf; throws InvalidArgument otherwise.
    static Nonlinearity from_name(const std::string& name);
};

struct GaussOptions {
    int order = 80;
    double psd_tol = 1e-9;
    double degenerate_tol = 1e-12;
};

// 2x2 covariance (k11, k12, k22) of a centered Gaussian pair.
struct Cov2 {
    double k11 = 1.0, k12 = 0.0, k22 = 1.0;
};

// Gauss-Hermite rule for the standard normal weight: sum w_i g(s_i) ~ E[g(s)], sum w_i = 1.
struct QuadratureRule {
    std::vector<double> nodes, weights;
};

const QuadratureRule& gauss_hermite(int order);

double gauss1d(const std::function<double(double)>& f, double variance, const GaussOptions& opts = {});

// E[g1(u1) g2(u2)] for (u1, u2) ~ N(0, cov).
double gauss2d(const std::function<double(double)>& g1, const std::function<double(double)>& g2,
               const Cov2& cov, const GaussOptions& opts = {});

// E[phi(u1) phi(u2)].
double f_phi(const Cov2& cov, const Nonlinearity& phi, const GaussOptions& opts = {});
// E[phi'(u1) phi'(u2)].
double f_phi_prime(const Cov2& cov, const Nonlinearity& phi, const GaussOptions& opts = {});

// E[x_{i1} ... x_{ik}] for x ~ N(0, cov) by pairing enumeration; indices are 0-based.
double wick_moment(const Matrix& cov, const std::vector<int>& indices);

} // namespace widthlab

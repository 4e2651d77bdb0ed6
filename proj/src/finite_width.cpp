#include "widthlab/finite_width.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>

#include "widthlab/criticality.hpp"
#include "widthlab/errors.hpp"

namespace widthlab {

void WidthProfile::validate() const {
    if (input_dim < 1) fail(Errc::InvalidArgument, "input width must be >= 1");
    for (int n : widths)
        if (n < 1) fail(Errc::InvalidArgument, "widths must be >= 1");
}

double WidthProfile::inverse_width_sum() const {
    double s = 0.0;
    for (int n : widths) s += 1.0 / double(n);
    return s;
}

double deep_linear_g2(int layer, double sigma_w2, double g2_0) {
    if (layer < 0) fail(Errc::InvalidArgument, "layer must be >= 0");
    return std::pow(sigma_w2, layer) * g2_0;
}

double deep_linear_g4(int layer, double width, double sigma_w2, double g2_0) {
    if (!(width > 0.0)) fail(Errc::InvalidArgument, "width must be positive");
    const double g2 = deep_linear_g2(layer, sigma_w2, g2_0);
    const double growth = std::isinf(width) ? 1.0 : std::pow(1.0 + 2.0 / width, layer);
    return growth * g2 * g2;
}

double var_sigma2(double K, const Nonlinearity& phi, const GaussOptions& quad) {
    if (!(K >= 0.0)) fail(Errc::NegativeVariance, "K = " + std::to_string(K));
    switch (phi.kind) {
    case PhiKind::relu: return 1.25 * K * K; // E relu^4 = 3K^2/2, (E relu^2)^2 = K^2/4
    case PhiKind::linear: return 2.0 * K * K;
    default: {
        const double m2 = gauss1d([&](double x) { double v = phi.value(x); return v * v; }, K, quad);
        const double m4 = gauss1d([&](double x) { double v = phi.value(x); return v * v * v * v; }, K, quad);
        return m4 - m2 * m2;
    }
    }
}

std::vector<Kappa4Layer> kappa4_recursion(const ArchSpec& arch, const WidthProfile& wp, const Vector& x) {
    arch.validate();
    wp.validate();
    if (int(wp.widths.size()) != arch.depth) fail(Errc::ShapeMismatch, "one width per hidden layer");
    if (x.size() != arch.input_dim || wp.input_dim != arch.input_dim) fail(Errc::DimensionMismatch, "input width");
    if (!x.allFinite()) fail(Errc::NonFiniteInput, "input");
    std::vector<Kappa4Layer> out;
    double K = arch.sigma_b2 + arch.sigma_w2 * x.squaredNorm() / double(arch.input_dim);
    double kappa = 0.0;
    out.push_back({1, K, kappa});
    for (int l = 1; l <= arch.depth; ++l) {
        const double n = double(wp.widths[l - 1]);
        const double v = var_sigma2(K, arch.phi, arch.quad);
        const double chi = chi_parallel(arch.phi, K, arch.sigma_w2, arch.quad);
        const double Kn = q_map(arch.phi, K, arch.sigma_b2, arch.sigma_w2, arch.quad);
        kappa = arch.sigma_w2 * arch.sigma_w2 / n * v + chi * chi * kappa;
        K = Kn;
        out.push_back({l + 1, K, kappa});
    }
    return out;
}

double edgeworth_moment(EdgeworthKind kind, double K, double kappa4) {
    switch (kind) {
    case EdgeworthKind::single_fourth: return 3.0 * K * K + 3.0 * kappa4;
    case EdgeworthKind::cross_pair: return K * K + kappa4;
    }
    return 0.0;
}

namespace {

// (1 - e^{-a t}) / a, stable for small a t.
double e1(double a, double t) {
    if (std::isinf(t)) return 1.0 / a;
    if (a * t < 1e-300) return t;
    return -std::expm1(-a * t) / a;
}

struct Contracted {
    Spectral s;
    int m;
    Vector r;                 // V^T R0
    std::vector<double> o3e;  // (a, b, i)
    std::vector<double> o4ee; // (a, b, i, j)
};

Contracted contract(const Matrix& theta0, const Vector& R0, const Tensor3& O3, const Tensor4& O4) {
    const int m = int(theta0.rows());
    if (R0.size() != m || O3.m != m || O4.m != m) fail(Errc::DimensionMismatch, "perturbation inputs");
    Contracted c{spectral_decompose(theta0), m, {}, {}, {}};
    const double lmax = c.s.eigenvalues.maxCoeff();
    if (c.s.eigenvalues.minCoeff() <= 1e-12 * lmax) fail(Errc::ZeroEigenvalue, "Theta0 has a null direction");
    const Matrix& V = c.s.eigenvectors;
    c.r = V.transpose() * R0;
    c.o3e.assign(std::size_t(m) * m * m, 0.0);
    c.o4ee.assign(std::size_t(m) * m * m * m, 0.0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            for (int i = 0; i < m; ++i) {
                double acc = 0.0;
                for (int g = 0; g < m; ++g) acc += O3(a, b, g) * V(g, i);
                c.o3e[(std::size_t(a) * m + b) * m + i] = acc;
            }
            Matrix P(m, m); // P(g, j) = sum_d O4(a, b, g, d) V(d, j)
            for (int g = 0; g < m; ++g)
                for (int j = 0; j < m; ++j) {
                    double acc = 0.0;
                    for (int d = 0; d < m; ++d) acc += O4(a, b, g, d) * V(d, j);
                    P(g, j) = acc;
                }
            const Matrix Q = V.transpose() * P; // Q(i, j)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) c.o4ee[((std::size_t(a) * m + b) * m + i) * m + j] = Q(i, j);
        }
    return c;
}

Matrix theta1_from(const Contracted& c, double t) {
    const int m = c.m;
    const Vector& lam = c.s.eigenvalues;
    Matrix T = Matrix::Zero(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc -= c.o3e[(std::size_t(a) * m + b) * m + i] * c.r[i] * e1(lam[i], t);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    const double bracket = e1(lam[i], t) - e1(lam[i] + lam[j], t);
                    acc += c.o4ee[((std::size_t(a) * m + b) * m + i) * m + j] * c.r[i] * c.r[j] / lam[j] * bracket;
                }
            T(a, b) = acc;
        }
    return 0.5 * (T + T.transpose());
}

} // namespace

Matrix theta1_t(const Matrix& theta0, const Vector& R0, const Tensor3& O3, const Tensor4& O4, double t) {
    if (!(t >= 0.0)) fail(Errc::InvalidArgument, "t must be >= 0");
    return theta1_from(contract(theta0, R0, O3, O4), t);
}

Matrix theta1_infinity(const Matrix& theta0, const Vector& R0, const Tensor3& O3, const Tensor4& O4) {
    return theta1_from(contract(theta0, R0, O3, O4), std::numeric_limits<double>::infinity());
}

Vector perturbative_train_prediction(const Matrix& theta0, const Vector& f0, const Vector& y, const Tensor3& O3,
                                     const Tensor4& O4, double t, double tol) {
    if (!(t >= 0.0) || std::isinf(t)) fail(Errc::InvalidArgument, "t must be finite and >= 0");
    if (f0.size() != y.size()) fail(Errc::DimensionMismatch, "f0 vs y");
    const Contracted c = contract(theta0, f0 - y, O3, O4);
    const int m = c.m;
    const Matrix& V = c.s.eigenvectors;
    const Vector& lam = c.s.eigenvalues;
    // Integrand in the eigenbasis: e^{Lambda t'} V^T Theta1(t') V e^{-Lambda t'} r.
    auto g = [&](double tp) {
        const Matrix M = V.transpose() * theta1_from(c, tp) * V;
        Vector out(m);
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += std::exp((lam[i] - lam[j]) * tp) * M(i, j) * c.r[j];
            out[i] = acc;
        }
        return out;
    };
    Vector integral = Vector::Zero(m);
    if (t > 0.0) {
        int n = 16;
        double h = t / n;
        Vector sum = 0.5 * (g(0.0) + g(t));
        for (int k = 1; k < n; ++k) sum += g(k * h);
        Vector prev = sum * h;
        for (int level = 0; level < 22; ++level) {
            for (int k = 0; k < n; ++k) sum += g((k + 0.5) * h);
            n *= 2;
            h *= 0.5;
            const Vector cur = sum * h;
            const double diff = (cur - prev).cwiseAbs().maxCoeff();
            prev = cur;
            if (level >= 2 && diff <= tol * (1.0 + cur.cwiseAbs().maxCoeff())) break;
        }
        integral = prev;
    }
    Vector s(m);
    for (int i = 0; i < m; ++i) s[i] = std::exp(-lam[i] * t) * (c.r[i] - integral[i]);
    return y + V * s;
}

double jacobian_moment2(int input_dim) {
    if (input_dim < 1) fail(Errc::InvalidArgument, "input width must be >= 1");
    return 2.0 / double(input_dim);
}

double jacobian_moment4(const WidthProfile& wp) {
    wp.validate();
    const double n0 = wp.input_dim;
    return 12.0 / (n0 * n0) * std::exp(5.0 * wp.inverse_width_sum());
}

double jacobian_moment4_product(const WidthProfile& wp) {
    wp.validate();
    const double n0 = wp.input_dim;
    double p = 12.0 / (n0 * n0);
    for (int n : wp.widths) p *= 1.0 + 5.0 / double(n);
    return p;
}

double path_moment_bruteforce(const WidthProfile& wp, int order, double mu4) {
    wp.validate();
    const double n0 = wp.input_dim;
    double paths = 1.0;
    for (int n : wp.widths) paths *= double(n);
    if (order == 2) {
        if (paths > 1e7) fail(Errc::EnumerationTooLarge, "too many paths");
        return 2.0 / n0; // every path contributes the same factor
    }
    if (order != 4) fail(Errc::InvalidArgument, "order must be 2 or 4");
    if (paths * paths > 1e7) fail(Errc::EnumerationTooLarge, "too many path pairs");
    const int L = int(wp.widths.size());
    const auto P = static_cast<long long>(paths);
    std::vector<int> g1(L), g2(L);
    auto decode = [&](long long code, std::vector<int>& g) {
        for (int l = L - 1; l >= 0; --l) {
            g[l] = int(code % wp.widths[l]);
            code /= wp.widths[l];
        }
    };
    double total = 0.0;
    for (long long a = 0; a < P; ++a) {
        decode(a, g1);
        for (long long b = 0; b < P; ++b) {
            decode(b, g2);
            double prod = 1.0;
            bool prev = true; // C(0): both paths leave the same input coordinate
            for (int l = 1; l <= L + 1; ++l) {
                const bool cur = l == L + 1 ? true : g1[l - 1] == g2[l - 1];
                prod *= 1.0 + (cur ? 5.0 : 0.0) + (cur && prev ? 2.0 * (mu4 - 3.0) : 0.0);
                prev = cur;
            }
            total += prod;
        }
    }
    return 2.0 / (n0 * n0) * total / (paths * paths);
}

LogStats chi_square_log_stats(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) fail(Errc::InvalidArgument, "degrees of freedom must be > 0");
    LogStats s;
    s.mean = 0.5 * (boost::math::digamma(0.5 * k) + std::log(2.0) - std::log(k));
    s.variance = 0.25 * boost::math::trigamma(0.5 * k);
    s.mean_leading = -1.0 / (4.0 * k);
    s.variance_leading = 1.0 / (4.0 * k);
    return s;
}

LogNormalParams lognormal_jacobian_params(const WidthProfile& wp, JacobianKind kind) {
    wp.validate();
    const double inv = wp.inverse_width_sum();
    if (kind == JacobianKind::relu) {
        const double beta = 5.0 * inv;
        return {-0.5 * beta, beta};
    }
    LogNormalParams p;
    for (int n : wp.widths) {
        const LogStats st = chi_square_log_stats(double(n));
        p.log_mean += st.mean;
        p.log_variance += st.variance;
    }
    return p;
}

} // namespace widthlab

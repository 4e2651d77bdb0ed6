#pragma once

#include <vector>

#include "widthlab/gp.hpp"
#include "widthlab/kernels.hpp"
#include "widthlab/types.hpp"

namespace widthlab {

// Hidden widths n_1..n_L and the input width n_0.
struct WidthProfile {
    std::vector<int> widths;
    int input_dim = 1;

    void validate() const;
    double inverse_width_sum() const; // sum_l 1/n_l
};

double deep_linear_g2(int layer, double sigma_w2, double g2_0);
// width = +inf gives the infinite-width value (G2)^2.
double deep_linear_g4(int layer, double width, double sigma_w2, double g2_0);

// Layer l = 1 is the first preactivation; layer L+1 is the output.
struct Kappa4Layer {
    int layer = 1;
    double K = 0.0;
    double kappa4 = 0.0;
    double ratio() const { return kappa4 / (K * K); }
};

std::vector<Kappa4Layer> kappa4_recursion(const ArchSpec& arch, const WidthProfile& widths, const Vector& x);

// Var[phi(z)^2] for z ~ N(0, K).
double var_sigma2(double K, const Nonlinearity& phi, const GaussOptions& quad = {});

enum class EdgeworthKind { single_fourth, cross_pair };
// single_fourth: E[z^4] = 3K^2 + 3 kappa; cross_pair: E[z_i^2 z_j^2] = K^2 + kappa.
double edgeworth_moment(EdgeworthKind kind, double K, double kappa4);

// Leading 1/n correction to the training-set NTK under gradient flow.
// R0 = f0 - y; O3(i,j,k) and O4(i,j,k,l) act on training indices.
Matrix theta1_t(const Matrix& theta0, const Vector& R0, const Tensor3& O3, const Tensor4& O4, double t);
Matrix theta1_infinity(const Matrix& theta0, const Vector& R0, const Tensor3& O3, const Tensor4& O4);

// f_t on the training set including the first-order kernel correction.
Vector perturbative_train_prediction(const Matrix& theta0, const Vector& f0, const Vector& y, const Tensor3& O3,
                                     const Tensor4& O4, double t, double tol = 1e-8);

double jacobian_moment2(int input_dim);
// (12 / n0^2) exp(5 sum 1/n_l); large-width form.
double jacobian_moment4(const WidthProfile& widths);
// (12 / n0^2) prod (1 + 5/n_l); exact for symmetric Gaussian weights.
double jacobian_moment4_product(const WidthProfile& widths);

// E[J^2] (order 2) or E[J^4] (order 4) by explicit enumeration of path pairs.
// mu4 is the weight fourth moment in units of the variance squared.
double path_moment_bruteforce(const WidthProfile& widths, int order, double mu4 = 3.0);

struct LogStats {
    double mean = 0.0, variance = 0.0;                 // exact, of (1/2) log(chi2_k / k)
    double mean_leading = 0.0, variance_leading = 0.0; // -1/(4k), 1/(4k)
};

LogStats chi_square_log_stats(double k);

enum class JacobianKind { relu, linear };

struct LogNormalParams {
    double log_mean = 0.0;
    double log_variance = 0.0;
};

// relu: (-beta/2, beta) with beta = 5 sum 1/n_l. linear: sums of the exact
// chi_square_log_stats over the hidden widths.
LogNormalParams lognormal_jacobian_params(const WidthProfile& widths, JacobianKind kind);

} // namespace widthlab

#pragma once

#include <vector>

#include "widthlab/types.hpp"

namespace widthlab {

struct Posterior {
    Vector mean;
    Vector variance;
};

// K_cross is m x q with entries K(x_train_i, x_query_j).
Posterior gp_posterior(const Matrix& K_train, const Matrix& K_cross, const Vector& k_query_diag, const Vector& y,
                       double noise, double jitter = 0.0);
double gp_log_marginal(const Matrix& K_train, const Vector& y, double noise, double jitter = 0.0);

struct Spectral {
    Vector eigenvalues; // ascending, negative round-off clipped to 0
    Matrix eigenvectors;
    Matrix reconstruct() const;
};

Spectral spectral_decompose(const Matrix& K);

// Eigenvalues below this fraction of the largest are treated as null directions.
inline constexpr double kNullEigenvalueRatio = 1e-12;

// f_t = y + e^{-Theta t}(f0 - y) on the training set; t may be +inf.
std::vector<Vector> ntk_gd_train_evolution(const Matrix& theta, const Vector& f0, const Vector& y,
                                           const std::vector<double>& times);

// Query predictions split into the target-driven part mu_t and the
// initialization-driven part gamma_t; f_t(x) = mu_t(x) + gamma_t(x).
struct QueryEvolution {
    std::vector<Vector> mu;
    std::vector<Vector> gamma;
};

// theta_cross is m x q with entries Theta(x_train_i, x_query_j).
QueryEvolution ntk_gd_query_evolution(const Matrix& theta, const Matrix& theta_cross, const Vector& f0_train,
                                      const Vector& f0_query, const Vector& y, const std::vector<double>& times);

// Mean and variance of the t -> inf prediction over random initializations
// with NNGP covariance K.
Posterior ntk_gd_mean_var(const Matrix& theta, const Matrix& theta_cross, const Matrix& K_train,
                          const Matrix& K_cross, const Vector& k_query_diag, const Vector& y);

void check_symmetric(const Matrix& A, const char* what);

} // namespace widthlab

#include "widthlab/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "widthlab/errors.hpp"

namespace widthlab {

void check_symmetric(const Matrix& A, const char* what) {
    if (A.rows() != A.cols()) fail(Errc::DimensionMismatch, std::string(what) + " must be square");
    if (!A.allFinite()) fail(Errc::NonFiniteInput, std::string(what) + " has non-finite entries");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        fail(Errc::NotSymmetric, std::string(what) + " is not symmetric");
}

namespace {

// Cholesky of a kernel that must be strictly positive definite.
Eigen::LLT<Matrix> factor_pd(const Matrix& A, const char* what) {
    check_symmetric(A, what);
    const Matrix S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double tr = std::abs(S.trace());
    if (lmin < -1e-9 * tr) fail(Errc::IndefiniteKernel, std::string(what) + " min eigenvalue " + std::to_string(lmin));
    if (lmin <= 1e-12 * tr) fail(Errc::SingularKernel, std::string(what) + " min eigenvalue " + std::to_string(lmin));
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) fail(Errc::SingularKernel, std::string(what) + " Cholesky failed");
    return llt;
}

void check_dims(const Matrix& K, const Matrix& cross, const Vector& diag, const Vector& y) {
    const auto m = K.rows();
    if (y.size() != m || cross.rows() != m || diag.size() != cross.cols())
        fail(Errc::DimensionMismatch, "train/query shapes disagree");
    if (!y.allFinite() || !cross.allFinite() || !diag.allFinite()) fail(Errc::NonFiniteInput, "non-finite input");
}

double clip_variance(double v, double scale) {
    if (v < -1e-9 * std::max(1.0, scale)) fail(Errc::IndefiniteKernel, "negative predictive variance " + std::to_string(v));
    return std::max(v, 0.0);
}

} // namespace

Posterior gp_posterior(const Matrix& K_train, const Matrix& K_cross, const Vector& k_query_diag, const Vector& y,
                       double noise, double jitter) {
    if (!(noise >= 0.0) || !(jitter >= 0.0)) fail(Errc::InvalidArgument, "noise and jitter must be >= 0");
    check_dims(K_train, K_cross, k_query_diag, y);
    Matrix A = K_train;
    A.diagonal().array() += noise + jitter;
    const auto llt = factor_pd(A, "training kernel");
    // One step of iterative refinement on each solve.
    auto solve = [&](const auto& rhs) {
        Matrix x = llt.solve(rhs);
        x += llt.solve(rhs - A * x);
        return x;
    };
    Posterior p;
    p.mean = K_cross.transpose() * solve(y);
    const Matrix W = solve(K_cross);
    p.variance.resize(k_query_diag.size());
    for (Eigen::Index j = 0; j < k_query_diag.size(); ++j)
        p.variance[j] = clip_variance(k_query_diag[j] - K_cross.col(j).dot(W.col(j)), std::abs(k_query_diag[j]));
    return p;
}

double gp_log_marginal(const Matrix& K_train, const Vector& y, double noise, double jitter) {
    if (y.size() != K_train.rows()) fail(Errc::DimensionMismatch, "targets and kernel disagree");
    Matrix A = K_train;
    A.diagonal().array() += noise + jitter;
    const auto llt = factor_pd(A, "training kernel");
    const Vector alpha = llt.solve(y);
    const Matrix L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * double(y.size()) * std::log(2.0 * std::numbers::pi);
}

Matrix Spectral::reconstruct() const { return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose(); }

Spectral spectral_decompose(const Matrix& K) {
    check_symmetric(K, "kernel");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (K + K.transpose()));
    Spectral s{es.eigenvalues(), es.eigenvectors()};
    const double lmax = s.eigenvalues.cwiseAbs().maxCoeff();
    if (s.eigenvalues.size() && s.eigenvalues.minCoeff() < -1e-9 * std::max(lmax, 1e-300))
        fail(Errc::IndefiniteKernel, "kernel has a negative eigenvalue");
    s.eigenvalues = s.eigenvalues.cwiseMax(0.0);
    return s;
}

namespace {

struct Modes {
    Spectral s;
    double null_cut;
};

Modes modes_of(const Matrix& theta) {
    Spectral s = spectral_decompose(theta);
    const double lmax = s.eigenvalues.size() ? s.eigenvalues.maxCoeff() : 0.0;
    return {std::move(s), kNullEigenvalueRatio * lmax};
}

double decay(double lam, double t, double cut) {
    if (lam <= cut) return 1.0;
    if (std::isinf(t)) return 0.0;
    return std::exp(-lam * t);
}

// (1 - e^{-lam t}) / lam with the pseudo-inverse convention on null modes at t = inf.
double gain(double lam, double t, double cut) {
    if (std::isinf(t)) return lam <= cut ? 0.0 : 1.0 / lam;
    if (lam <= cut) return t;
    return -std::expm1(-lam * t) / lam;
}

void check_times(const std::vector<double>& times) {
    for (double t : times)
        if (std::isnan(t) || t < 0.0) fail(Errc::InvalidArgument, "times must be >= 0");
}

} // namespace

std::vector<Vector> ntk_gd_train_evolution(const Matrix& theta, const Vector& f0, const Vector& y,
                                           const std::vector<double>& times) {
    if (f0.size() != theta.rows() || y.size() != theta.rows()) fail(Errc::DimensionMismatch, "f0/y vs kernel");
    check_times(times);
    const Modes md = modes_of(theta);
    const Vector r = md.s.eigenvectors.transpose() * (f0 - y);
    std::vector<Vector> out;
    for (double t : times) {
        Vector c(r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) c[i] = decay(md.s.eigenvalues[i], t, md.null_cut) * r[i];
        out.push_back(y + md.s.eigenvectors * c);
    }
    return out;
}

QueryEvolution ntk_gd_query_evolution(const Matrix& theta, const Matrix& theta_cross, const Vector& f0_train,
                                      const Vector& f0_query, const Vector& y, const std::vector<double>& times) {
    const auto m = theta.rows();
    if (theta_cross.rows() != m || f0_train.size() != m || y.size() != m || f0_query.size() != theta_cross.cols())
        fail(Errc::DimensionMismatch, "query evolution shapes");
    check_times(times);
    const Modes md = modes_of(theta);
    const Matrix CV = theta_cross.transpose() * md.s.eigenvectors; // q x m
    const Vector ry = md.s.eigenvectors.transpose() * y;
    const Vector rf = md.s.eigenvectors.transpose() * f0_train;
    QueryEvolution ev;
    for (double t : times) {
        Vector g(m);
        for (Eigen::Index i = 0; i < m; ++i) g[i] = gain(md.s.eigenvalues[i], t, md.null_cut);
        ev.mu.push_back(CV * g.cwiseProduct(ry));
        ev.gamma.push_back(f0_query - CV * g.cwiseProduct(rf));
    }
    return ev;
}

Posterior ntk_gd_mean_var(const Matrix& theta, const Matrix& theta_cross, const Matrix& K_train, const Matrix& K_cross,
                          const Vector& k_query_diag, const Vector& y) {
    check_dims(theta, theta_cross, k_query_diag, y);
    check_dims(K_train, K_cross, k_query_diag, y);
    check_symmetric(K_train, "NNGP kernel");
    const auto llt = factor_pd(theta, "NTK");
    const Matrix A = llt.solve(theta_cross); // Theta^{-1} Theta(X, x), m x q
    Posterior p;
    p.mean = A.transpose() * y;
    p.variance.resize(k_query_diag.size());
    const Matrix KA = K_train * A;
    for (Eigen::Index j = 0; j < k_query_diag.size(); ++j) {
        const double v = k_query_diag[j] + A.col(j).dot(KA.col(j)) - 2.0 * A.col(j).dot(K_cross.col(j));
        p.variance[j] = clip_variance(v, std::abs(k_query_diag[j]));
    }
    return p;
}

} // namespace widthlab

#include "widthlab/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <utility>

#include "parallel.hpp"
#include "widthlab/errors.hpp"
#include "widthlab/log.hpp"

namespace widthlab {

void ArchSpec::validate() const {
    if (depth < 1) fail(Errc::InvalidArgument, "depth must be >= 1");
    if (input_dim < 1) fail(Errc::InvalidArgument, "input_dim must be >= 1");
    if (!(sigma_b2 >= 0.0) || !std::isfinite(sigma_b2)) fail(Errc::InvalidArgument, "sigma_b2 must be >= 0");
    if (!(sigma_w2 > 0.0) || !std::isfinite(sigma_w2)) fail(Errc::InvalidArgument, "sigma_w2 must be > 0");
    if (kind == ArchKind::residual) {
        if (int(gamma2.size()) != depth) fail(Errc::ShapeMismatch, "gamma2 needs one entry per hidden layer");
        for (double g : gamma2)
            if (!(g >= 0.0)) fail(Errc::InvalidArgument, "gamma2 entries must be >= 0");
    }
    if (kind == ArchKind::conv1d) {
        if (conv.half_width < 0 || conv.spatial_dim < 1) fail(Errc::InvalidArgument, "bad conv geometry");
        if (int(conv.weights.size()) != 2 * conv.half_width + 1)
            fail(Errc::ShapeMismatch, "conv weights need 2k+1 entries");
        double s = 0.0;
        for (double v : conv.weights) {
            if (!(v >= 0.0)) fail(Errc::InvalidArgument, "conv weights must be >= 0");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) fail(Errc::InvalidArgument, "conv weights must sum to 1");
    }
}

namespace {

void check_finite(const Matrix& X) {
    if (!X.allFinite()) fail(Errc::NonFiniteInput, "input contains NaN or Inf");
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

std::vector<std::pair<int, int>> upper_pairs(int m) {
    std::vector<std::pair<int, int>> p;
    p.reserve(std::size_t(m) * (m + 1) / 2);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) p.emplace_back(i, j);
    return p;
}

template <class F>
Matrix pairwise(const Matrix& K, Exec exec, F&& f) {
    const int m = int(K.rows());
    const auto pairs = upper_pairs(m);
    Matrix out(m, m);
    detail::parallel_for(std::int64_t(pairs.size()), exec == Exec::parallel, [&](std::int64_t p) {
        const auto [i, j] = pairs[p];
        const double v = f(Cov2{K(i, i), K(i, j), K(j, j)});
        out(i, j) = v;
        out(j, i) = v;
    });
    return out;
}

std::vector<int> iota_ids(int m) {
    std::vector<int> ids(m);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

} // namespace

Matrix input_kernel(const ArchSpec& arch, const Matrix& X) {
    if (X.cols() != arch.input_dim) fail(Errc::DimensionMismatch, "input width differs from input_dim");
    check_finite(X);
    Matrix K = (X * X.transpose()) * (arch.sigma_w2 / double(arch.input_dim));
    K.array() += arch.sigma_b2;
    return K;
}

Matrix kernel_map(const Matrix& K, const Nonlinearity& phi, const GaussOptions& opts, Exec exec) {
    return pairwise(K, exec, [&](const Cov2& c) { return f_phi(c, phi, opts); });
}

Matrix kernel_map_prime(const Matrix& K, const Nonlinearity& phi, const GaussOptions& opts, Exec exec) {
    return pairwise(K, exec, [&](const Cov2& c) { return f_phi_prime(c, phi, opts); });
}

Matrix psd_repair(const Matrix& K, int layer) {
    if (!K.allFinite()) fail(Errc::NonFiniteInput, "kernel has non-finite entries at layer " + std::to_string(layer));
    Matrix S = 0.5 * (K + K.transpose());
    if (S.rows() == 0) return S;
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    const double lmin = es.eigenvalues().minCoeff();
    const double tr = std::abs(S.trace());
    if (lmin < -1e-9 * tr)
        fail(Errc::NotPSD, "layer " + std::to_string(layer) + " min eigenvalue " + sci(lmin) + ", trace " + sci(tr));
    if (lmin < -1e-13 * tr) {
        warn("clipping eigenvalue " + sci(lmin) + " at layer " + std::to_string(layer));
        const Vector lam = es.eigenvalues().cwiseMax(0.0);
        S = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
        S = 0.5 * (S + S.transpose()).eval();
    }
    return S;
}

std::vector<KernelMatrix> nngp_fc(const ArchSpec& arch, const Matrix& X, Exec exec) {
    arch.validate();
    const int m = int(X.rows());
    std::vector<KernelMatrix> out;
    out.push_back({0, psd_repair(input_kernel(arch, X), 0), iota_ids(m)});
    for (int l = 1; l <= arch.depth; ++l) {
        Matrix K = kernel_map(out.back().values, arch.phi, arch.quad, exec) * arch.sigma_w2;
        K.array() += arch.sigma_b2;
        out.push_back({l, psd_repair(K, l), iota_ids(m)});
    }
    return out;
}

NtkResult ntk_fc(const ArchSpec& arch, const Matrix& X, Exec exec) {
    NtkResult r;
    r.nngp = nngp_fc(arch, X, exec);
    r.ntk.push_back(r.nngp[0]);
    for (int l = 1; l <= arch.depth; ++l) {
        const Matrix dot = kernel_map_prime(r.nngp[l - 1].values, arch.phi, arch.quad, exec);
        Matrix T = r.nngp[l].values + arch.sigma_w2 * dot.cwiseProduct(r.ntk.back().values);
        r.ntk.push_back({l, 0.5 * (T + T.transpose()), r.nngp[l].sample_ids});
    }
    return r;
}

std::vector<KernelMatrix> nngp_residual(const ArchSpec& arch, const Matrix& X, Exec exec) {
    if (arch.kind != ArchKind::residual) fail(Errc::InvalidArgument, "architecture is not residual");
    arch.validate();
    const int m = int(X.rows());
    std::vector<KernelMatrix> out;
    out.push_back({0, psd_repair(input_kernel(arch, X), 0), iota_ids(m)});
    for (int l = 1; l <= arch.depth; ++l) {
        const Matrix& prev = out.back().values;
        Matrix K = kernel_map(prev, arch.phi, arch.quad, exec) * arch.sigma_w2 + arch.gamma2[l - 1] * prev;
        K.array() += arch.sigma_b2;
        out.push_back({l, psd_repair(K, l), iota_ids(m)});
    }
    return out;
}

namespace {

// sigma_b^2 + sigma_w^2 sum_beta v_beta Phi(s, a+beta; s', a'+beta), circular in a.
Matrix conv_aggregate(const ArchSpec& arch, const Matrix& Phi, int m, Exec exec) {
    const int D = arch.conv.spatial_dim, k = arch.conv.half_width;
    const int N = m * D;
    Matrix K(N, N);
    const auto pairs = upper_pairs(N);
    detail::parallel_for(std::int64_t(pairs.size()), exec == Exec::parallel, [&](std::int64_t p) {
        const auto [r, c] = pairs[p];
        const int s = r / D, a = r % D, s2 = c / D, a2 = c % D;
        double acc = 0.0;
        for (int b = -k; b <= k; ++b) {
            const int ab = ((a + b) % D + D) % D, a2b = ((a2 + b) % D + D) % D;
            acc += arch.conv.weights[b + k] * Phi(s * D + ab, s2 * D + a2b);
        }
        const double v = arch.sigma_b2 + arch.sigma_w2 * acc;
        K(r, c) = v;
        K(c, r) = v;
    });
    return K;
}

} // namespace

std::vector<ConvKernel> nngp_conv1d(const ArchSpec& arch, const std::vector<Matrix>& X, Exec exec) {
    if (arch.kind != ArchKind::conv1d) fail(Errc::InvalidArgument, "architecture is not conv1d");
    arch.validate();
    const int m = int(X.size()), D = arch.conv.spatial_dim, n0 = arch.input_dim;
    if (m == 0) fail(Errc::InvalidArgument, "no inputs");
    Matrix flat(m * D, n0); // row s*D + a holds x_{s, :, a}
    for (int s = 0; s < m; ++s) {
        if (X[s].rows() != n0 || X[s].cols() != D) fail(Errc::DimensionMismatch, "conv input must be n0 x D");
        check_finite(X[s]);
        for (int a = 0; a < D; ++a) flat.row(s * D + a) = X[s].col(a).transpose();
    }
    const Matrix gram = flat * flat.transpose() / double(n0);
    std::vector<ConvKernel> out;
    out.push_back({0, m, D, psd_repair(conv_aggregate(arch, gram, m, exec), 0)});
    for (int l = 1; l <= arch.depth; ++l) {
        const Matrix Phi = kernel_map(out.back().values, arch.phi, arch.quad, exec);
        out.push_back({l, m, D, psd_repair(conv_aggregate(arch, Phi, m, exec), l)});
    }
    return out;
}

Matrix readout_vectorize(const ArchSpec& arch, const ConvKernel& last, Exec exec) {
    const int m = last.samples, D = last.spatial;
    const Matrix Phi = kernel_map(last.values, arch.phi, arch.quad, exec);
    Matrix K(m, m);
    for (int s = 0; s < m; ++s)
        for (int s2 = 0; s2 < m; ++s2) {
            double acc = 0.0;
            for (int a = 0; a < D; ++a) acc += Phi(s * D + a, s2 * D + a);
            K(s, s2) = arch.sigma_b2 + arch.sigma_w2 / double(D) * acc;
        }
    return K;
}

Matrix readout_spatial_aggregation(const ArchSpec& arch, const ConvKernel& last, const Vector& h, Exec exec) {
    const int m = last.samples, D = last.spatial;
    if (h.size() != D) fail(Errc::DimensionMismatch, "aggregation weights need D entries");
    if (!h.allFinite()) fail(Errc::NonFiniteInput, "aggregation weights not finite");
    const Matrix Phi = kernel_map(last.values, arch.phi, arch.quad, exec);
    Matrix K(m, m);
    for (int s = 0; s < m; ++s)
        for (int s2 = 0; s2 < m; ++s2) {
            double acc = 0.0;
            for (int a = 0; a < D; ++a)
                for (int a2 = 0; a2 < D; ++a2) acc += h[a] * h[a2] * Phi(s * D + a, s2 * D + a2);
            K(s, s2) = arch.sigma_b2 + arch.sigma_w2 * acc;
        }
    return K;
}

} // namespace widthlab

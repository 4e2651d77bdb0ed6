#include "widthlab/reference.hpp"

#include <numeric>

#include "widthlab/errors.hpp"

namespace widthlab::reference {

namespace {

Matrix map_serial(const Matrix& K, const ArchSpec& arch, bool prime) {
    const Eigen::Index m = K.rows();
    Matrix out(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            const Cov2 c{K(i, i), K(i, j), K(j, j)};
            out(i, j) = out(j, i) = prime ? f_phi_prime(c, arch.phi, arch.quad) : f_phi(c, arch.phi, arch.quad);
        }
    return out;
}

std::vector<int> ids(Eigen::Index m) {
    std::vector<int> v(m);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

} // namespace

std::vector<KernelMatrix> nngp_fc(const ArchSpec& arch, const Matrix& X) {
    arch.validate();
    std::vector<KernelMatrix> out;
    out.push_back({0, psd_repair(input_kernel(arch, X), 0), ids(X.rows())});
    for (int l = 1; l <= arch.depth; ++l) {
        Matrix K = map_serial(out.back().values, arch, false) * arch.sigma_w2;
        K.array() += arch.sigma_b2;
        out.push_back({l, psd_repair(K, l), ids(X.rows())});
    }
    return out;
}

NtkResult ntk_fc(const ArchSpec& arch, const Matrix& X) {
    NtkResult r;
    r.nngp = reference::nngp_fc(arch, X);
    r.ntk.push_back(r.nngp[0]);
    for (int l = 1; l <= arch.depth; ++l) {
        const Matrix dot = map_serial(r.nngp[l - 1].values, arch, true);
        const Matrix& prev = r.ntk.back().values;
        Matrix T(prev.rows(), prev.cols());
        for (Eigen::Index i = 0; i < T.rows(); ++i)
            for (Eigen::Index j = 0; j < T.cols(); ++j)
                T(i, j) = r.nngp[l].values(i, j) + arch.sigma_w2 * dot(i, j) * prev(i, j);
        r.ntk.push_back({l, 0.5 * (T + T.transpose()), r.nngp[l].sample_ids});
    }
    return r;
}

std::vector<ConvKernel> nngp_conv1d(const ArchSpec& arch, const std::vector<Matrix>& X) {
    if (arch.kind != ArchKind::conv1d) fail(Errc::InvalidArgument, "architecture is not conv1d");
    arch.validate();
    const int m = int(X.size()), D = arch.conv.spatial_dim, k = arch.conv.half_width, n0 = arch.input_dim;
    auto wrap = [D](int a) { return ((a % D) + D) % D; };
    auto aggregate = [&](auto&& phi_at) {
        Matrix K(m * D, m * D);
        for (int s = 0; s < m; ++s)
            for (int a = 0; a < D; ++a)
                for (int s2 = 0; s2 < m; ++s2)
                    for (int a2 = 0; a2 < D; ++a2) {
                        double acc = 0.0;
                        for (int b = -k; b <= k; ++b) acc += arch.conv.weights[b + k] * phi_at(s, wrap(a + b), s2, wrap(a2 + b));
                        K(s * D + a, s2 * D + a2) = arch.sigma_b2 + arch.sigma_w2 * acc;
                    }
        return K;
    };
    for (const auto& x : X)
        if (x.rows() != n0 || x.cols() != D) fail(Errc::DimensionMismatch, "conv input must be n0 x D");
    std::vector<ConvKernel> out;
    Matrix K0 = aggregate([&](int s, int a, int s2, int a2) { return X[s].col(a).dot(X[s2].col(a2)) / double(n0); });
    out.push_back({0, m, D, psd_repair(K0, 0)});
    for (int l = 1; l <= arch.depth; ++l) {
        const Matrix Phi = map_serial(out.back().values, arch, false);
        Matrix K = aggregate([&](int s, int a, int s2, int a2) { return Phi(s * D + a, s2 * D + a2); });
        out.push_back({l, m, D, psd_repair(K, l)});
    }
    return out;
}

} // namespace widthlab::reference

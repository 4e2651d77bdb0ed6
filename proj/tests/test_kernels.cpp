#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "widthlab/errors.hpp"
#include "widthlab/kernels.hpp"
#include "widthlab/log.hpp"
#include "widthlab/reference.hpp"
#include "widthlab/rng.hpp"

using namespace widthlab;
using doctest::Approx;

namespace {

ArchSpec fc(Nonlinearity phi, int depth, int n0, double b2, double w2) {
    ArchSpec a;
    a.depth = depth;
    a.input_dim = n0;
    a.sigma_b2 = b2;
    a.sigma_w2 = w2;
    a.phi = std::move(phi);
    return a;
}

Matrix sample_inputs(int m, int n0, std::uint64_t seed) {
    PhiloxEngine eng(seed, 0);
    NormalSampler normal;
    Matrix X(m, n0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n0; ++j) X(i, j) = normal(eng);
    return X;
}

} // namespace

TEST_CASE("ReLU hand values at depth 1") {
    const ArchSpec a = fc(Nonlinearity::relu(), 1, 2, 0.0, 2.0);
    const Matrix X = Matrix::Identity(2, 2);
    const auto r = ntk_fc(a, X);
    CHECK(r.nngp[0].values(0, 1) == 0.0);
    CHECK(r.nngp[0].values(0, 0) == Approx(1.0));
    CHECK(r.nngp[1].values(0, 0) == Approx(1.0));
    CHECK(r.nngp[1].values(0, 1) == Approx(1.0 / std::numbers::pi));
    CHECK(r.ntk[1].values(0, 0) == Approx(2.0));
    CHECK(r.ntk[1].values(0, 1) == Approx(1.0 / std::numbers::pi));
}

TEST_CASE("linear network kernels are affine in the input kernel") {
    const ArchSpec a = fc(Nonlinearity::linear(), 3, 3, 0.2, 0.7);
    const Matrix X = sample_inputs(4, 3, 1);
    const auto ks = nngp_fc(a, X);
    Matrix K = input_kernel(a, X);
    for (int l = 1; l <= 3; ++l) {
        K = (0.7 * K).array() + 0.2;
        CHECK((ks[l].values - K).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("critical ReLU preserves the diagonal") {
    const ArchSpec a = fc(Nonlinearity::relu(), 6, 5, 0.0, 2.0);
    const Matrix X = sample_inputs(3, 5, 2);
    const auto ks = nngp_fc(a, X);
    for (const auto& k : ks)
        for (int i = 0; i < 3; ++i) CHECK(k.values(i, i) == Approx(ks[0].values(i, i)).epsilon(1e-12));
}

TEST_CASE("kernels are symmetric PSD and correlations stay in [-1, 1]") {
    for (auto phi : {Nonlinearity::tanh(), Nonlinearity::relu(), Nonlinearity::erf()}) {
        const ArchSpec a = fc(phi, 4, 3, 0.1, 1.6);
        const auto r = ntk_fc(a, sample_inputs(6, 3, 3));
        for (std::size_t l = 0; l < r.nngp.size(); ++l) {
            const Matrix& K = r.nngp[l].values;
            CHECK((K - K.transpose()).norm() == 0.0);
            Eigen::SelfAdjointEigenSolver<Matrix> es(K);
            CHECK(es.eigenvalues().minCoeff() >= -1e-9 * K.trace());
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) CHECK(std::abs(K(i, j)) <= std::sqrt(K(i, i) * K(j, j)) * (1 + 1e-12));
            // NTK dominates the NNGP
            Eigen::SelfAdjointEigenSolver<Matrix> d(r.ntk[l].values - K);
            CHECK(d.eigenvalues().minCoeff() >= -1e-9 * K.trace());
        }
    }
}

TEST_CASE("parallel and serial reference paths agree") {
    const ArchSpec a = fc(Nonlinearity::tanh(), 3, 4, 0.05, 1.5);
    const Matrix X = sample_inputs(9, 4, 4);
    const auto p = ntk_fc(a, X, Exec::parallel);
    const auto s = ntk_fc(a, X, Exec::serial);
    const auto r = reference::ntk_fc(a, X);
    for (int l = 0; l <= 3; ++l) {
        CHECK((p.nngp[l].values - r.nngp[l].values).cwiseAbs().maxCoeff() == 0.0);
        CHECK((p.ntk[l].values - r.ntk[l].values).cwiseAbs().maxCoeff() < 1e-15 * r.ntk[l].values.norm());
        CHECK((p.ntk[l].values - s.ntk[l].values).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("residual kernels") {
    ArchSpec a = fc(Nonlinearity::relu(), 3, 3, 0.1, 1.5);
    a.kind = ArchKind::residual;
    const Matrix X = sample_inputs(4, 3, 5);
    a.gamma2 = {0.0, 0.0, 0.0};
    const auto plain = nngp_fc(fc(Nonlinearity::relu(), 3, 3, 0.1, 1.5), X);
    const auto res0 = nngp_residual(a, X);
    for (int l = 0; l <= 3; ++l) CHECK((plain[l].values - res0[l].values).norm() < 1e-12);
    a.gamma2 = {0.5, 0.5, 0.5};
    const auto res = nngp_residual(a, X);
    for (int l = 1; l <= 3; ++l) {
        const Matrix expect = 0.5 * res[l - 1].values;
        Matrix direct = kernel_map(res[l - 1].values, a.phi, a.quad) * 1.5;
        direct.array() += 0.1;
        CHECK((res[l].values - (direct + expect)).norm() < 1e-12);
    }
    a.gamma2 = {0.5};
    CHECK_THROWS_AS(nngp_residual(a, X), Error);
}

TEST_CASE("PSD repair") {
    std::string warned;
    set_warning_handler([&](const std::string& m) { warned = m; });
    Matrix K(2, 2);
    K << 1.0, 1.0 + 1e-11, 1.0 + 1e-11, 1.0;
    const Matrix R = psd_repair(K, 3);
    Eigen::SelfAdjointEigenSolver<Matrix> es(R);
    CHECK(es.eigenvalues().minCoeff() >= -1e-15);
    CHECK(!warned.empty());
    K << 1.0, 1.1, 1.1, 1.0;
    CHECK_THROWS_AS(psd_repair(K, 3), Error);
    K << 1.0, std::nan(""), 0.0, 1.0;
    CHECK_THROWS_AS(psd_repair(K, 0), Error);
    set_warning_handler(nullptr);
}

TEST_CASE("input validation") {
    const ArchSpec a = fc(Nonlinearity::relu(), 1, 3, 0.0, 1.0);
    CHECK_THROWS_AS(nngp_fc(a, Matrix::Ones(2, 2)), Error);
    Matrix bad = Matrix::Ones(2, 3);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(nngp_fc(a, bad), Error);
    ArchSpec z = a;
    z.depth = 0;
    CHECK_THROWS_AS(nngp_fc(z, Matrix::Ones(2, 3)), Error);
}

namespace {

ArchSpec conv(Nonlinearity phi, int depth, int n0, int D, std::vector<double> v) {
    ArchSpec a = fc(std::move(phi), depth, n0, 0.1, 1.3);
    a.kind = ArchKind::conv1d;
    a.conv.half_width = int(v.size()) / 2;
    a.conv.spatial_dim = D;
    a.conv.weights = std::move(v);
    return a;
}

std::vector<Matrix> conv_inputs(int m, int n0, int D, std::uint64_t seed) {
    std::vector<Matrix> X;
    for (int s = 0; s < m; ++s) X.push_back(sample_inputs(n0, D, seed + s));
    return X;
}

} // namespace

TEST_CASE("conv1d with a width-1 filter is the fc kernel per site") {
    const ArchSpec a = conv(Nonlinearity::tanh(), 2, 3, 4, {1.0});
    const auto X = conv_inputs(2, 3, 4, 10);
    const auto ks = nngp_conv1d(a, X);
    Matrix sites(8, 3);
    for (int s = 0; s < 2; ++s)
        for (int d = 0; d < 4; ++d) sites.row(s * 4 + d) = X[s].col(d).transpose();
    const auto ref = nngp_fc(fc(Nonlinearity::tanh(), 2, 3, 0.1, 1.3), sites);
    for (int l = 0; l <= 2; ++l) CHECK((ks[l].values - ref[l].values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conv1d linear kernel matches direct shift sums") {
    const std::vector<double> v = {0.25, 0.5, 0.25};
    const int D = 5, n0 = 2;
    const ArchSpec a = conv(Nonlinearity::linear(), 2, n0, D, v);
    const auto X = conv_inputs(2, n0, D, 20);
    const auto ks = nngp_conv1d(a, X);
    auto K = [&](int s, int p, int s2, int p2) { return X[s].col(p).dot(X[s2].col(p2)) / n0; };
    // Two stacked shift-averages of the input gram, written out directly.
    auto wrap = [&](int p) { return ((p % D) + D) % D; };
    for (int s = 0; s < 2; ++s)
        for (int s2 = 0; s2 < 2; ++s2)
            for (int p = 0; p < D; ++p)
                for (int p2 = 0; p2 < D; ++p2) {
                    double k1 = 0.0;
                    for (int b = -1; b <= 1; ++b) {
                        double k0 = 0.0;
                        for (int c = -1; c <= 1; ++c)
                            k0 += v[c + 1] * K(s, wrap(p + b + c), s2, wrap(p2 + b + c));
                        k0 = 0.1 + 1.3 * k0;
                        k1 += v[b + 1] * k0;
                    }
                    k1 = 0.1 + 1.3 * k1;
                    CHECK(ks[1].at(s, p, s2, p2) == Approx(k1).epsilon(1e-12));
                }
}

TEST_CASE("conv1d readouts against a finite-width Monte Carlo network") {
    const std::vector<double> v = {0.3, 0.4, 0.3};
    const int D = 4, n0 = 2, C = 128, draws = 6000;
    const ArchSpec a = conv(Nonlinearity::tanh(), 1, n0, D, v);
    const auto X = conv_inputs(2, n0, D, 30);
    const auto ks = nngp_conv1d(a, X);
    const Matrix Kv = readout_vectorize(a, ks.back());
    Vector h(D);
    h << 0.5, 0.5, 0.5, 0.5;
    const Matrix Ka = readout_spatial_aggregation(a, ks.back(), h);

    PhiloxEngine eng(77, 0);
    NormalSampler normal;
    Matrix sv = Matrix::Zero(2, 2), sa = Matrix::Zero(2, 2);
    const double sw = std::sqrt(1.3), sb = std::sqrt(0.1);
    for (int t = 0; t < draws; ++t) {
        // layer 0 and 1 weights: channel x channel x tap
        auto layer = [&](const std::vector<Matrix>& in, int fan_in) {
            std::vector<Matrix> W(3, Matrix(C, fan_in));
            for (auto& M : W)
                for (int i = 0; i < C; ++i)
                    for (int j = 0; j < fan_in; ++j) M(i, j) = normal(eng);
            Vector b(C);
            for (int i = 0; i < C; ++i) b[i] = normal(eng);
            std::vector<Matrix> out;
            for (const auto& x : in) {
                Matrix z(C, D);
                for (int p = 0; p < D; ++p) {
                    Vector acc = sb * b;
                    for (int k = -1; k <= 1; ++k)
                        acc += sw * std::sqrt(v[k + 1] / fan_in) * W[k + 1] * x.col(((p + k) % D + D) % D);
                    z.col(p) = acc;
                }
                out.push_back(z);
            }
            return out;
        };
        auto z0 = layer(X, n0);
        for (auto& z : z0) z = z.array().tanh();
        auto z1 = layer(z0, C);
        for (auto& z : z1) z = z.array().tanh();
        Matrix Wv(C, D);
        for (int i = 0; i < C; ++i)
            for (int p = 0; p < D; ++p) Wv(i, p) = normal(eng);
        Vector wa(C);
        for (int i = 0; i < C; ++i) wa[i] = normal(eng);
        const double bv = normal(eng), ba = normal(eng);
        Vector fv(2), fa(2);
        for (int s = 0; s < 2; ++s) {
            fv[s] = sb * bv + sw * (Wv.cwiseProduct(z1[s])).sum() / std::sqrt(double(C * D));
            fa[s] = sb * ba + sw * wa.dot(z1[s] * h) / std::sqrt(double(C));
        }
        sv += fv * fv.transpose();
        sa += fa * fa.transpose();
    }
    sv /= draws;
    sa /= draws;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(sv(i, j) == Approx(Kv(i, j)).epsilon(0.06));
            CHECK(sa(i, j) == Approx(Ka(i, j)).epsilon(0.06));
        }
}

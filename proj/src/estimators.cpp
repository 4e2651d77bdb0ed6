#include "widthlab/estimators.hpp"

#include <cmath>

#include "blocks.hpp"
#include "widthlab/errors.hpp"

namespace widthlab {

namespace {

// Substream purposes; distinct per estimator so runs sharing a seed do not reuse draws.
constexpr std::uint64_t kNngpStream = 0x6e6e6770;
constexpr std::uint64_t kMomentStream = 0x6d6f6d73;
constexpr std::uint64_t kJacobianStream = 0x6a61636f;

} // namespace

Matrix LayerwiseSampler::factor(const Matrix& C) {
    if (C.rows() == 1) return Matrix::Constant(1, 1, std::sqrt(std::max(C(0, 0), 0.0)));
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

LayerwiseSampler::LayerwiseSampler(NetworkSpec spec, const Matrix& X) : spec_(std::move(spec)), m_(X.rows()) {
    spec_.validate();
    if (X.cols() != spec_.input_dim) fail(Errc::ShapeMismatch, "input width differs from network");
    if (!X.allFinite()) fail(Errc::NonFiniteInput, "inputs");
    Matrix C = (X * X.transpose()) * (spec_.sigma_w2 / double(spec_.input_dim));
    C.array() += spec_.sigma_b2;
    base_factor_ = factor(C);
}

EstimatorResult empirical_nngp(const ArchSpec& arch, const WidthProfile& widths, const Matrix& X,
                               long long n_samples, const RngPlan& plan, NngpSampler sampler, Parameterization param,
                               Exec exec) {
    if (n_samples < 100) fail(Errc::InvalidArgument, "empirical_nngp needs n_samples >= 100");
    const NetworkSpec spec = make_spec(arch, widths, param, 1);
    const Eigen::Index m = X.rows();
    struct Acc {
        Matrix s1, s2;
    };
    const LayerwiseSampler proto(spec, X);
    auto blocks = detail::map_blocks<Acc>(n_samples, exec, [&](long long b, long long count) {
        PhiloxEngine eng = plan.stream(kNngpStream, std::uint64_t(b));
        Acc acc{Matrix::Zero(m, m), Matrix::Zero(m, m)};
        auto add = [&](const Vector& f) {
            const Matrix o = f * f.transpose();
            acc.s1 += o;
            acc.s2 += o.cwiseProduct(o);
        };
        if (sampler == NngpSampler::layerwise) {
            LayerwiseSampler s = proto;
            const int last = spec.num_layers() - 1;
            for (long long i = 0; i < count; ++i)
                s.draw(eng, [&](int l, const Matrix& Z) {
                    if (l == last) add(Z.row(0).transpose());
                });
        } else {
            Mlp net(spec);
            for (long long i = 0; i < count; ++i) {
                redraw(net, eng);
                add(forward(net, X).output().row(0).transpose());
            }
        }
        return acc;
    });
    Matrix s1 = Matrix::Zero(m, m), s2 = Matrix::Zero(m, m);
    for (const auto& a : blocks) {
        s1 += a.s1;
        s2 += a.s2;
    }
    const double N = double(n_samples);
    EstimatorResult r;
    r.n_samples = n_samples;
    r.estimate = s1 / N;
    const Matrix var = ((s2 / N) - r.estimate.cwiseProduct(r.estimate)) * (N / (N - 1.0));
    r.std_error = (var.cwiseMax(0.0) / N).cwiseSqrt();
    return r;
}

std::vector<LayerMoments> empirical_layer_moments(const ArchSpec& arch, const WidthProfile& widths, const Vector& x,
                                                  long long n_samples, const RngPlan& plan, int output_width,
                                                  Exec exec) {
    if (n_samples < 2 * kSamplesPerBlock) fail(Errc::InvalidArgument, "need at least two sample blocks");
    if (output_width <= 0) output_width = widths.widths.empty() ? 2 : widths.widths.back();
    const NetworkSpec spec = make_spec(arch, widths, Parameterization::standard, output_width);
    const int L = spec.num_layers();
    const LayerwiseSampler proto(spec, Matrix(x.transpose()));
    // Per layer: sums of mean z^2, mean z^4, pair mean z_i^2 z_j^2.
    auto blocks = detail::map_blocks<Matrix>(n_samples, exec, [&](long long b, long long count) {
        PhiloxEngine eng = plan.stream(kMomentStream, std::uint64_t(b));
        LayerwiseSampler s = proto;
        Matrix acc = Matrix::Zero(L, 3);
        for (long long i = 0; i < count; ++i)
            s.draw(eng, [&](int l, const Matrix& Z) {
                const double n = double(Z.rows());
                const double q2 = Z.col(0).squaredNorm();
                const double q4 = Z.col(0).array().pow(4).sum();
                acc(l, 0) += q2 / n;
                acc(l, 1) += q4 / n;
                if (n > 1) acc(l, 2) += (q2 * q2 - q4) / (n * (n - 1.0));
            });
        return acc;
    });
    const Eigen::Index B = Eigen::Index(blocks.size());
    Vector counts(B);
    for (Eigen::Index b = 0; b < B; ++b) counts[b] = double(std::min(kSamplesPerBlock, n_samples - b * kSamplesPerBlock));
    std::vector<LayerMoments> out;
    for (int l = 0; l < L; ++l) {
        Matrix sums(B, 3);
        for (Eigen::Index b = 0; b < B; ++b) sums.row(b) = blocks[b].row(l);
        LayerMoments lm;
        lm.layer = l + 1;
        lm.width = spec.fan_out(l);
        lm.m2 = jackknife(sums, counts, [](const Vector& v) { return v[0]; });
        lm.m4 = jackknife(sums, counts, [](const Vector& v) { return v[1]; });
        lm.cross = jackknife(sums, counts, [](const Vector& v) { return v[2]; });
        lm.kappa_single = jackknife(sums, counts, [](const Vector& v) { return (v[1] - 3.0 * v[0] * v[0]) / 3.0; });
        lm.kappa_cross = jackknife(sums, counts, [](const Vector& v) { return v[2] - v[0] * v[0]; });
        out.push_back(lm);
    }
    return out;
}

std::vector<LayerMoments> empirical_kappa4(const ArchSpec& arch, const WidthProfile& widths, const Vector& x,
                                           long long n_samples, const RngPlan& plan, int output_width, Exec exec) {
    if (n_samples < 10000) fail(Errc::InvalidArgument, "empirical_kappa4 needs n_samples >= 1e4");
    return empirical_layer_moments(arch, widths, x, n_samples, plan, output_width, exec);
}

JacobianMoments empirical_jacobian_moments(const ArchSpec& arch, const WidthProfile& widths, const Vector& x,
                                           long long n_samples, const RngPlan& plan, int output_index,
                                           int input_index, bool keep_samples, Exec exec) {
    if (x.size() != arch.input_dim) fail(Errc::DimensionMismatch, "input width");
    if (x.squaredNorm() == 0.0) fail(Errc::ZeroInput, "Jacobian moments need x != 0");
    if (input_index < 0 || input_index >= arch.input_dim) fail(Errc::IndexOutOfRange, "input index");
    const NetworkSpec spec = make_spec(arch, widths, Parameterization::standard, output_index + 1);
    struct Acc {
        double s2 = 0, s4 = 0, s8 = 0;
        std::vector<double> xs;
    };
    auto blocks = detail::map_blocks<Acc>(n_samples, exec, [&](long long b, long long count) {
        PhiloxEngine eng = plan.stream(kJacobianStream, std::uint64_t(b));
        Mlp net(spec);
        Acc acc;
        for (long long i = 0; i < count; ++i) {
            redraw(net, eng);
            const double j = input_gradient(net, x, output_index)[input_index];
            const double j2 = j * j, j4 = j2 * j2;
            acc.s2 += j2;
            acc.s4 += j4;
            acc.s8 += j4 * j4;
            if (keep_samples) acc.xs.push_back(j);
        }
        return acc;
    });
    JacobianMoments r;
    r.n_samples = n_samples;
    double s2 = 0, s4 = 0, s8 = 0;
    for (auto& a : blocks) {
        s2 += a.s2;
        s4 += a.s4;
        s8 += a.s8;
        if (keep_samples) r.samples.insert(r.samples.end(), a.xs.begin(), a.xs.end());
    }
    const double N = double(n_samples);
    r.m2 = {s2 / N, std::sqrt(std::max(s4 / N - (s2 / N) * (s2 / N), 0.0) / (N - 1.0))};
    r.m4 = {s4 / N, std::sqrt(std::max(s8 / N - (s4 / N) * (s4 / N), 0.0) / (N - 1.0))};
    return r;
}

Vector sample_dropout_linear(const WidthProfile& wp, const Vector& x, PhiloxEngine& rng, int output_dim,
                             bool no_masks) {
    wp.validate();
    if (x.size() != wp.input_dim) fail(Errc::DimensionMismatch, "input width");
    if (x.squaredNorm() == 0.0) fail(Errc::ZeroInput, "dropout model needs x != 0");
    NormalSampler normal;
    Vector v = x;
    const int L = int(wp.widths.size());
    for (int l = 0; l <= L; ++l) {
        const int fo = l == L ? output_dim : wp.widths[l];
        const double s = std::sqrt(2.0 / double(v.size()));
        Vector u = Vector::Zero(fo);
        for (Eigen::Index j = 0; j < v.size(); ++j)
            for (int i = 0; i < fo; ++i) u[i] += s * normal(rng) * v[j];
        if (l < L && !no_masks)
            for (int i = 0; i < fo; ++i)
                if (rng() >> 63) u[i] = 0.0;
        v = std::move(u);
    }
    return v;
}

} // namespace widthlab

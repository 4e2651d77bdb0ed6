#include "widthlab/mlp.hpp"

#include <cmath>

#include "widthlab/errors.hpp"

namespace widthlab {

void NetworkSpec::validate() const {
    if (input_dim < 1 || output_dim < 1) fail(Errc::ShapeMismatch, "input and output widths must be >= 1");
    for (int n : widths)
        if (n < 1) fail(Errc::ShapeMismatch, "hidden widths must be >= 1");
    if (!(sigma_b2 >= 0.0) || !(sigma_w2 >= 0.0)) fail(Errc::InvalidArgument, "variances must be >= 0");
}

NetworkSpec make_spec(const ArchSpec& arch, const WidthProfile& wp, Parameterization param, int output_dim) {
    if (arch.kind != ArchKind::fc) fail(Errc::InvalidArgument, "networks are fully connected");
    if (int(wp.widths.size()) != arch.depth) fail(Errc::ShapeMismatch, "one width per hidden layer");
    if (wp.input_dim != arch.input_dim) fail(Errc::ShapeMismatch, "input width differs from architecture");
    NetworkSpec s{arch.input_dim, wp.widths, output_dim, param, arch.sigma_b2, arch.sigma_w2, arch.phi};
    s.validate();
    return s;
}

Mlp::Mlp(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Eigen::Index off = 0;
    for (int l = 0; l < spec_.num_layers(); ++l) {
        offsets_.push_back(off);
        const int fi = spec_.fan_in(l), fo = spec_.fan_out(l);
        off += Eigen::Index(fo) * fi + fo;
        if (spec_.param == Parameterization::ntk) {
            wscale_.push_back(std::sqrt(spec_.sigma_w2 / double(fi)));
            bscale_.push_back(std::sqrt(spec_.sigma_b2));
        } else {
            wscale_.push_back(1.0);
            bscale_.push_back(1.0);
        }
    }
    theta = Vector::Zero(off);
}

Eigen::Map<Matrix> Mlp::W(int l) {
    return {theta.data() + offsets_[l], spec_.fan_out(l), spec_.fan_in(l)};
}
Eigen::Map<const Matrix> Mlp::W(int l) const {
    return {theta.data() + offsets_[l], spec_.fan_out(l), spec_.fan_in(l)};
}
Eigen::Map<Vector> Mlp::b(int l) { return {theta.data() + bias_offset(l), spec_.fan_out(l)}; }
Eigen::Map<const Vector> Mlp::b(int l) const { return {theta.data() + bias_offset(l), spec_.fan_out(l)}; }

void redraw(Mlp& net, PhiloxEngine& rng) {
    NormalSampler normal;
    const auto& s = net.spec();
    for (int l = 0; l < s.num_layers(); ++l) {
        double ws = 1.0, bs = 1.0;
        if (s.param == Parameterization::standard) {
            ws = std::sqrt(s.sigma_w2 / double(s.fan_in(l)));
            bs = std::sqrt(s.sigma_b2);
        }
        auto W = net.W(l);
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = ws * normal(rng);
        auto b = net.b(l);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bs * normal(rng);
    }
}

Mlp init_network(const NetworkSpec& spec, PhiloxEngine& rng) {
    Mlp net(spec);
    redraw(net, rng);
    return net;
}

Mlp init_network(const ArchSpec& arch, const WidthProfile& widths, Parameterization param, PhiloxEngine& rng,
                 int output_dim) {
    return init_network(make_spec(arch, widths, param, output_dim), rng);
}

ForwardPass forward(const Mlp& net, const Matrix& X) {
    const auto& s = net.spec();
    if (X.cols() != s.input_dim) fail(Errc::ShapeMismatch, "input width differs from network");
    ForwardPass p;
    p.post.push_back(X.transpose());
    for (int l = 0; l < s.num_layers(); ++l) {
        Matrix z = net.weight_scale(l) * (net.W(l) * p.post.back());
        z.colwise() += net.bias_scale(l) * net.b(l);
        p.pre.push_back(std::move(z));
        if (l + 1 < s.num_layers()) p.post.push_back(p.pre.back().unaryExpr([&](double v) { return s.phi.value(v); }));
    }
    return p;
}

Vector forward(const Mlp& net, const Vector& x) {
    return forward(net, Matrix(x.transpose())).output().col(0);
}

std::vector<Matrix> backward(const Mlp& net, const ForwardPass& pass, int k) {
    const auto& s = net.spec();
    if (k < 0 || k >= s.output_dim) fail(Errc::ShapeMismatch, "output index out of range");
    const int L = s.num_layers();
    const Eigen::Index m = pass.pre.back().cols();
    std::vector<Matrix> delta(L);
    delta[L - 1] = Matrix::Zero(s.output_dim, m);
    delta[L - 1].row(k).setOnes();
    for (int l = L - 1; l > 0; --l) {
        Matrix d = net.weight_scale(l) * (net.W(l).transpose() * delta[l]);
        d.array() *= pass.pre[l - 1].unaryExpr([&](double v) { return s.phi.deriv(v); }).array();
        delta[l - 1] = std::move(d);
    }
    return delta;
}

Vector weighted_grad(const Mlp& net, const Matrix& X, const Vector& w, int k) {
    if (w.size() != X.rows()) fail(Errc::ShapeMismatch, "one weight per sample");
    const ForwardPass p = forward(net, X);
    const auto delta = backward(net, p, k);
    Vector g(net.num_params());
    for (int l = 0; l < net.spec().num_layers(); ++l) {
        const Matrix dw = delta[l] * w.asDiagonal();
        Eigen::Map<Matrix>(g.data() + net.weight_offset(l), dw.rows(), p.post[l].rows()) =
            net.weight_scale(l) * dw * p.post[l].transpose();
        Eigen::Map<Vector>(g.data() + net.bias_offset(l), dw.rows()) = net.bias_scale(l) * dw.rowwise().sum();
    }
    return g;
}

Vector backprop_grads(const Mlp& net, const Vector& x, int k) {
    return weighted_grad(net, Matrix(x.transpose()), Vector::Ones(1), k);
}

Matrix per_sample_grads(const Mlp& net, const Matrix& X, int k) {
    const ForwardPass p = forward(net, X);
    const auto delta = backward(net, p, k);
    Matrix G(X.rows(), net.num_params());
    for (Eigen::Index a = 0; a < X.rows(); ++a) {
        for (int l = 0; l < net.spec().num_layers(); ++l) {
            const Matrix dw = net.weight_scale(l) * delta[l].col(a) * p.post[l].col(a).transpose();
            G.row(a).segment(net.weight_offset(l), dw.size()) = Eigen::Map<const Vector>(dw.data(), dw.size()).transpose();
            G.row(a).segment(net.bias_offset(l), delta[l].rows()) = net.bias_scale(l) * delta[l].col(a).transpose();
        }
    }
    return G;
}

Vector input_gradient(const Mlp& net, const Vector& x, int k) {
    const ForwardPass p = forward(net, Matrix(x.transpose()));
    const auto delta = backward(net, p, k);
    return net.weight_scale(0) * (net.W(0).transpose() * delta[0].col(0));
}

double ntk_normalizer(const NetworkSpec& spec) {
    if (spec.param == Parameterization::standard && !spec.widths.empty()) return 1.0 / double(spec.widths.front());
    return 1.0;
}

Matrix empirical_ntk_cross(const Mlp& net, const Matrix& X, const Matrix& Xq, int k) {
    const ForwardPass p = forward(net, X), q = forward(net, Xq);
    const auto da = backward(net, p, k), dq = backward(net, q, k);
    Matrix T = Matrix::Zero(X.rows(), Xq.rows());
    for (int l = 0; l < net.spec().num_layers(); ++l) {
        const double ws = net.weight_scale(l), bs = net.bias_scale(l);
        Matrix A = (p.post[l].transpose() * q.post[l]) * (ws * ws);
        A.array() += bs * bs;
        T.array() += A.array() * (da[l].transpose() * dq[l]).array();
    }
    return T * ntk_normalizer(net.spec());
}

Matrix empirical_ntk(const Mlp& net, const Matrix& X, int k) {
    const ForwardPass p = forward(net, X);
    const auto d = backward(net, p, k);
    Matrix T = Matrix::Zero(X.rows(), X.rows());
    for (int l = 0; l < net.spec().num_layers(); ++l) {
        const double ws = net.weight_scale(l), bs = net.bias_scale(l);
        Matrix A = (p.post[l].transpose() * p.post[l]) * (ws * ws);
        A.array() += bs * bs;
        T.array() += A.array() * (d[l].transpose() * d[l]).array();
    }
    T *= ntk_normalizer(net.spec());
    return 0.5 * (T + T.transpose());
}

} // namespace widthlab

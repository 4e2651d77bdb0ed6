#include "widthlab/os_measure.hpp"

#include <cmath>

#include "widthlab/errors.hpp"

namespace widthlab {

namespace {

Tensor3 o3_at(const Mlp& net, const Matrix& X, double fd_step) {
    const int m = int(X.rows());
    Tensor3 O3(m);
    const Matrix G = per_sample_grads(net, X);
    const double tn = net.theta.norm();
    Mlp shifted = net;
    for (int c = 0; c < m; ++c) {
        const double gn = G.row(c).norm();
        if (gn == 0.0) continue;
        const double h = fd_step * (1.0 + tn) / gn;
        shifted.theta = net.theta + h * G.row(c).transpose();
        // Rounding eats the displacement when h is too small relative to theta.
        if (std::abs((shifted.theta - net.theta).norm() - h * gn) > 1e-3 * h * gn)
            fail(Errc::StepTooSmall, "finite-difference step lost to rounding");
        const Matrix Tp = empirical_ntk(shifted, X);
        shifted.theta = net.theta - h * G.row(c).transpose();
        const Matrix Tm = empirical_ntk(shifted, X);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) O3(a, b, c) = (Tp(a, b) - Tm(a, b)) / (2.0 * h);
    }
    return O3;
}

double tensor_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

OsResult measure_Os(const Mlp& net, const Matrix& X, int s_max, double fd_step) {
    if (s_max != 3 && s_max != 4) fail(Errc::InvalidArgument, "s_max must be 3 or 4");
    if (!(fd_step > 0.0)) fail(Errc::InvalidArgument, "fd_step must be > 0");
    if (net.num_params() > 100000) fail(Errc::InvalidArgument, "network too large for dense O_s measurement");
    if (net.spec().output_dim != 1) fail(Errc::ShapeMismatch, "scalar output required");
    OsResult r;
    r.O3 = o3_at(net, X, fd_step);
    const Tensor3 half = o3_at(net, X, 0.5 * fd_step);
    std::vector<double> diff(r.O3.data.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = r.O3.data[i] - half.data[i];
    const double scale = tensor_norm(half.data);
    r.richardson = scale > 0.0 ? tensor_norm(diff) / scale : 0.0;
    if (r.richardson > 0.01)
        fail(Errc::StepTooSmall, "O3 moved by " + std::to_string(r.richardson) + " when halving the step");
    if (s_max == 3) return r;

    const int m = int(X.rows());
    r.O4 = Tensor4(m);
    const Matrix G = per_sample_grads(net, X);
    const double tn = net.theta.norm();
    Mlp shifted = net;
    for (int d = 0; d < m; ++d) {
        const double gn = G.row(d).norm();
        if (gn == 0.0) continue;
        const double h = fd_step * (1.0 + tn) / gn;
        shifted.theta = net.theta + h * G.row(d).transpose();
        const Tensor3 Op = o3_at(shifted, X, fd_step);
        shifted.theta = net.theta - h * G.row(d).transpose();
        const Tensor3 Om = o3_at(shifted, X, fd_step);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int c = 0; c < m; ++c) r.O4(a, b, c, d) = (Op(a, b, c) - Om(a, b, c)) / (2.0 * h);
    }
    return r;
}

} // namespace widthlab

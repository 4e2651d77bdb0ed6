#include "widthlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "widthlab/errors.hpp"

namespace widthlab {

namespace {

constexpr double kDivergedLoss = 1e12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_dataset(const Dataset& d) {
    if (d.X.rows() != d.y.size() || d.X.rows() == 0) fail(Errc::ShapeMismatch, "dataset X and y disagree");
    if (!d.X.allFinite() || !d.y.allFinite()) fail(Errc::NonFiniteInput, "dataset");
}

double top_eigenvalue(const Matrix& T) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(T, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

} // namespace

double mse_loss(const Vector& f, const Vector& y) { return 0.5 * (f - y).squaredNorm() / double(f.size()); }

std::vector<long long> record_schedule(long long steps, long long every) {
    if (every < 1) every = 1;
    std::set<long long> s;
    const long long dense = 100 * every;
    for (long long t = 0; t <= steps && t < dense; t += every) s.insert(t);
    for (long long t = dense; t <= steps; t *= 2) s.insert(t);
    s.insert(steps);
    return {s.begin(), s.end()};
}

double critical_learning_rate(const Matrix& theta, long long m) {
    if (m < 1) fail(Errc::InvalidArgument, "m must be >= 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(theta / double(m), Eigen::EigenvaluesOnly);
    const double lo = std::max(es.eigenvalues().minCoeff(), 0.0), hi = es.eigenvalues().maxCoeff();
    if (!(hi > 0.0)) fail(Errc::SingularKernel, "NTK has no positive eigenvalue");
    return 2.0 / (lo + hi);
}

namespace {

// Shared stepping state for the parameter-space trajectory.
struct GdState {
    Mlp net;
    Vector theta0;
    const Dataset& data;
    const TrainOptions& opts;
    double eta;

    Vector outputs() const { return forward(net, data.X).output().row(0).transpose(); }

    TrajectoryStep record(long long t, const Vector& f) const {
        TrajectoryStep s;
        s.t = t;
        s.f = f;
        s.loss = mse_loss(f, data.y);
        if (opts.probe.size()) s.f_probe = forward(net, opts.probe).output().row(0).transpose();
        s.param_distance = (net.theta - theta0).norm();
        s.lambda_top = kNaN;
        if (opts.record_ntk) {
            s.theta = empirical_ntk(net, data.X);
            s.lambda_top = top_eigenvalue(*s.theta);
        }
        return s;
    }

    void step(const Vector& f) {
        const double m = double(data.y.size());
        net.theta -= eta * weighted_grad(net, data.X, (f - data.y) / m);
    }
};

// Function-space state for the linearized model.
struct LinState {
    Matrix theta0, theta0_probe; // raw Gram (no standard-parameterization normalizer)
    Vector f, fp;
    const Dataset& data;
    double eta;

    void step() {
        const double m = double(data.y.size());
        const Vector R = f - data.y;
        if (theta0_probe.size()) fp -= (eta / m) * (theta0_probe.transpose() * R);
        f -= (eta / m) * (theta0 * R);
    }

    TrajectoryStep record(long long t, bool with_ntk) const {
        TrajectoryStep s;
        s.t = t;
        s.f = f;
        s.f_probe = fp;
        s.loss = mse_loss(f, data.y);
        s.lambda_top = kNaN;
        if (with_ntk) {
            s.theta = theta0;
            s.lambda_top = top_eigenvalue(theta0);
        }
        return s;
    }
};

LinState make_lin(const Mlp& net, const Dataset& data, double eta, const TrainOptions& opts) {
    const double norm = ntk_normalizer(net.spec());
    LinState s{empirical_ntk(net, data.X) / norm, Matrix(), Vector(), Vector(), data, eta};
    s.f = forward(net, data.X).output().row(0).transpose();
    if (opts.probe.size()) {
        s.theta0_probe = empirical_ntk_cross(net, data.X, opts.probe) / norm;
        s.fp = forward(net, opts.probe).output().row(0).transpose();
    }
    return s;
}

void check_train_args(const Mlp& net, const Dataset& data, double eta, long long steps) {
    check_dataset(data);
    if (!(eta > 0.0)) fail(Errc::InvalidArgument, "eta must be > 0");
    if (steps < 0) fail(Errc::InvalidArgument, "steps must be >= 0");
    if (net.spec().output_dim != 1) fail(Errc::ShapeMismatch, "training needs a scalar-output network");
}

bool diverged(double loss) { return !std::isfinite(loss) || loss > kDivergedLoss; }

} // namespace

TrajectoryRecord train_gd(Mlp net, const Dataset& data, double eta, long long steps, const TrainOptions& opts) {
    check_train_args(net, data, eta, steps);
    const auto sched = record_schedule(steps, opts.record_every);
    GdState st{std::move(net), Vector(), data, opts, eta};
    st.theta0 = st.net.theta;
    TrajectoryRecord rec;
    std::size_t next = 0;
    for (long long t = 0; t <= steps; ++t) {
        const Vector f = st.outputs();
        const double loss = mse_loss(f, data.y);
        if (next < sched.size() && sched[next] == t) {
            rec.steps.push_back(st.record(t, f));
            ++next;
        }
        if (diverged(loss)) {
            if (rec.steps.empty() || rec.steps.back().t != t) rec.steps.push_back(st.record(t, f));
            rec.diverged = true;
            break;
        }
        if (t < steps) st.step(f);
    }
    return rec;
}

TrajectoryRecord linearized_train(const Mlp& net, const Dataset& data, double eta, long long steps,
                                  const TrainOptions& opts) {
    check_train_args(net, data, eta, steps);
    const auto sched = record_schedule(steps, opts.record_every);
    LinState st = make_lin(net, data, eta, opts);
    TrajectoryRecord rec;
    std::size_t next = 0;
    for (long long t = 0; t <= steps; ++t) {
        const double loss = mse_loss(st.f, data.y);
        if (next < sched.size() && sched[next] == t) {
            rec.steps.push_back(st.record(t, opts.record_ntk));
            ++next;
        }
        if (diverged(loss)) {
            if (rec.steps.empty() || rec.steps.back().t != t) rec.steps.push_back(st.record(t, opts.record_ntk));
            rec.diverged = true;
            break;
        }
        if (t < steps) st.step();
    }
    return rec;
}

CompareResult train_compare(const Mlp& net, const Dataset& data, double eta, long long steps,
                            const TrainOptions& opts) {
    check_train_args(net, data, eta, steps);
    const auto sched = record_schedule(steps, opts.record_every);
    GdState gd{net, net.theta, data, opts, eta};
    LinState lin = make_lin(net, data, eta, opts);
    const Matrix theta0 = empirical_ntk(net, data.X);
    CompareResult r;
    std::size_t next = 0;
    for (long long t = 0; t <= steps; ++t) {
        const Vector f = gd.outputs();
        double diff = (f - lin.f).cwiseAbs().maxCoeff();
        if (opts.probe.size()) {
            const Vector fp = forward(gd.net, opts.probe).output().row(0).transpose();
            diff = std::max(diff, (fp - lin.fp).cwiseAbs().maxCoeff());
        }
        r.sup_f_diff = std::max(r.sup_f_diff, diff);
        r.sup_ntk_change = std::max(r.sup_ntk_change, (empirical_ntk(gd.net, data.X) - theta0).norm());
        const double loss = mse_loss(f, data.y), loss_lin = mse_loss(lin.f, data.y);
        r.final_loss = loss;
        r.final_loss_lin = loss_lin;
        if (next < sched.size() && sched[next] == t) {
            r.gd.steps.push_back(gd.record(t, f));
            r.lin.steps.push_back(lin.record(t, opts.record_ntk));
            ++next;
        }
        if (diverged(loss) || diverged(loss_lin)) {
            r.gd.diverged = diverged(loss);
            r.lin.diverged = diverged(loss_lin);
            break;
        }
        if (t < steps) {
            gd.step(f);
            lin.step();
        }
    }
    return r;
}

CatapultTrajectory catapult_map(double f0, double lambda0, double n, double eta, long long steps) {
    if (!(n >= 1.0)) fail(Errc::InvalidArgument, "n must be >= 1");
    CatapultTrajectory tr;
    double f = f0, lam = lambda0;
    for (long long t = 0;; ++t) {
        tr.f.push_back(f);
        tr.lambda.push_back(lam);
        tr.loss.push_back(0.5 * f * f);
        if (diverged(0.5 * f * f) || !std::isfinite(lam)) {
            tr.diverged = true;
            break;
        }
        if (t == steps) break;
        const double g = eta * f * f / n;
        const double fn = f * (1.0 - eta * lam + eta * g);
        lam = lam + g * (eta * lam - 4.0);
        f = fn;
    }
    return tr;
}

const char* to_string(CatapultRegime r) {
    switch (r) {
    case CatapultRegime::ntk: return "ntk";
    case CatapultRegime::catapult: return "catapult";
    case CatapultRegime::divergent: return "divergent";
    }
    return "?";
}

CatapultRegime catapult_regime(double eta, double lambda0) {
    if (!(lambda0 > 0.0)) fail(Errc::InvalidArgument, "lambda0 must be > 0");
    const double x = eta * lambda0;
    if (x < 2.0) return CatapultRegime::ntk;
    if (x < 4.0) return CatapultRegime::catapult;
    return CatapultRegime::divergent;
}

std::vector<TEpsilonRow> t_epsilon_scan(double lambda0, double n, double epsilon, const std::vector<double>& etas,
                                        double f0, long long max_steps) {
    if (!(epsilon > 0.0)) fail(Errc::InvalidArgument, "epsilon must be > 0");
    if (!(n >= 1.0)) fail(Errc::InvalidArgument, "n must be >= 1");
    std::vector<TEpsilonRow> rows;
    for (double eta : etas) {
        TEpsilonRow row{eta, -1, "step_limit"};
        double f = f0, lam = lambda0;
        for (long long t = 0; t <= max_steps; ++t) {
            const double loss = 0.5 * f * f;
            if (loss < epsilon) {
                row.steps = t;
                row.flag = "converged";
                break;
            }
            if (diverged(loss) || !std::isfinite(lam)) {
                row.flag = "diverged";
                break;
            }
            const double g = eta * f * f / n;
            const double fn = f * (1.0 - eta * lam + eta * g);
            lam = lam + g * (eta * lam - 4.0);
            f = fn;
        }
        rows.push_back(row);
    }
    return rows;
}

UvRecord uv_model_train(Matrix u, Vector v, const Matrix& X, const Vector& y, double eta, long long steps) {
    const Eigen::Index n = u.rows(), m = X.rows();
    if (v.size() != n || X.cols() != u.cols() || y.size() != m || m == 0)
        fail(Errc::ShapeMismatch, "uv model shapes (n x n0, n, m x n0, m)");
    if (!(eta > 0.0)) fail(Errc::InvalidArgument, "eta must be > 0");
    const double sn = std::sqrt(double(n)), md = double(m);
    const Matrix G = X * X.transpose();
    UvRecord rec;
    for (long long t = 0; t <= steps; ++t) {
        UvStep s;
        s.t = t;
        const Matrix UX = u * X.transpose(); // n x m
        s.f = UX.transpose() * v / sn;
        s.R = s.f - y;
        s.loss = 0.5 * s.R.squaredNorm() / md;
        s.theta = (v.squaredNorm() * G + UX.transpose() * UX) / (double(n) * md);
        s.r_theta_r = s.R.dot(s.theta * s.R);
        Eigen::SelfAdjointEigenSolver<Matrix> es(s.theta);
        s.lambda_top = es.eigenvalues()[m - 1];
        const double rn = s.R.norm();
        s.alignment = rn > 0 ? std::abs(es.eigenvectors().col(m - 1).dot(s.R)) / rn : 1.0;
        const bool bad = diverged(s.loss) || !std::isfinite(s.lambda_top);
        rec.steps.push_back(std::move(s));
        if (bad) {
            rec.diverged = true;
            break;
        }
        if (t == steps) break;
        const Vector& R = rec.steps.back().R;
        const double c = eta / (md * sn);
        const Vector XR = X.transpose() * R; // n0
        const Vector UXR = UX * R;           // n
        u -= c * v * XR.transpose();
        v -= c * UXR;
    }
    return rec;
}

} // namespace widthlab

#include "widthlab/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "parallel.hpp"
#include "widthlab/errors.hpp"

namespace widthlab {

const char* to_string(FixedPointStatus s) {
    switch (s) {
    case FixedPointStatus::converged: return "converged";
    case FixedPointStatus::every_point_fixed: return "every_point_fixed";
    case FixedPointStatus::not_converged: return "not_converged";
    }
    return "?";
}

const char* to_string(Phase p) {
    switch (p) {
    case Phase::ordered: return "ordered";
    case Phase::chaotic: return "chaotic";
    case Phase::critical: return "critical";
    case Phase::no_fixed_point: return "no_fixed_point";
    }
    return "?";
}

namespace {

void check_q(double q) {
    if (!std::isfinite(q)) fail(Errc::NonFiniteInput, "q is not finite");
    if (q < 0.0) fail(Errc::NegativeQ, "q = " + std::to_string(q));
}

double mean_phi2(const Nonlinearity& phi, double q, const GaussOptions& quad) {
    switch (phi.kind) {
    case PhiKind::relu: return 0.5 * q;
    case PhiKind::linear: return q;
    default: return gauss1d([&](double x) { double v = phi.value(x); return v * v; }, q, quad);
    }
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

FixedPoint iterate(const std::function<double(double)>& map, const std::function<double(double)>& deriv, double x0,
                   double lo, const CriticalityOptions& opts) {
    double x = x0;
    for (int k = 1; k <= opts.max_iter; ++k) {
        const double next = x + opts.damping * (map(x) - x);
        if (!std::isfinite(next) || std::abs(next) > 1e300) return {x, FixedPointStatus::not_converged, k};
        const double step = std::abs(next - x);
        x = std::max(next, lo);
        if (step < opts.tol) return {x, FixedPointStatus::converged, k};
    }
    // Newton on g(x) = map(x) - x; handles double roots such as tanh at q* = 0.
    double y = x;
    for (int k = 1; k <= 200; ++k) {
        const double g = map(y) - y;
        const double dg = deriv(y) - 1.0;
        if (dg == 0.0 || !std::isfinite(g)) break;
        const double next = std::max(y - g / dg, lo);
        if (!std::isfinite(next)) break;
        const double step = std::abs(next - y);
        y = next;
        if (step < opts.tol) return {y, FixedPointStatus::converged, opts.max_iter + k};
    }
    return {x, FixedPointStatus::not_converged, opts.max_iter};
}

} // namespace

double q_map(const Nonlinearity& phi, double q, double sigma_b2, double sigma_w2, const GaussOptions& quad) {
    check_q(q);
    return sigma_b2 + sigma_w2 * mean_phi2(phi, q, quad);
}

double c_map(const Nonlinearity& phi, double c, double q, double sigma_b2, double sigma_w2, const GaussOptions& quad) {
    check_q(q);
    if (q == 0.0) fail(Errc::DegenerateCovariance, "correlation map at q = 0");
    return (sigma_b2 + sigma_w2 * f_phi(Cov2{q, c * q, q}, phi, quad)) / q;
}

double chi1(const Nonlinearity& phi, double q, double sigma_w2, const GaussOptions& quad) {
    check_q(q);
    switch (phi.kind) {
    case PhiKind::relu: return q > 0.0 ? 0.5 * sigma_w2 : 0.0;
    case PhiKind::linear: return sigma_w2;
    default:
        return sigma_w2 * gauss1d([&](double x) { double d = phi.deriv(x); return d * d; }, q, quad);
    }
}

double chi_parallel(const Nonlinearity& phi, double q, double sigma_w2, const GaussOptions& quad) {
    const double c1 = chi1(phi, q, sigma_w2, quad);
    if (phi.kind == PhiKind::relu || phi.kind == PhiKind::linear) return c1;
    return c1 + sigma_w2 * gauss1d([&](double x) { return phi.value(x) * phi.deriv2(x); }, q, quad);
}

FixedPoint find_qstar(const Nonlinearity& phi, double sigma_b2, double sigma_w2, const CriticalityOptions& opts) {
    if (!(sigma_b2 >= 0.0) || !(sigma_w2 > 0.0)) fail(Errc::InvalidArgument, "need sigma_b2 >= 0, sigma_w2 > 0");
    const double q0 = sigma_b2 + sigma_w2;
    auto map = [&](double q) { return q_map(phi, q, sigma_b2, sigma_w2, opts.quad); };
    const double probe = 2.0 * q0 + 1.0;
    if (near(map(q0), q0, opts.tol) && near(map(probe), probe, opts.tol))
        return {q0, FixedPointStatus::every_point_fixed, 0};
    auto deriv = [&](double q) { return chi_parallel(phi, q, sigma_w2, opts.quad); };
    return iterate(map, deriv, q0, 0.0, opts);
}

FixedPoint find_cstar(const Nonlinearity& phi, double q, double sigma_w2, double sigma_b2,
                      const CriticalityOptions& opts) {
    check_q(q);
    if (q == 0.0) return {1.0, FixedPointStatus::every_point_fixed, 0};
    auto map = [&](double c) { return c_map(phi, c, q, sigma_b2, sigma_w2, opts.quad); };
    if (near(map(0.3), 0.3, opts.tol) && near(map(0.7), 0.7, opts.tol))
        return {1.0, FixedPointStatus::every_point_fixed, 0};
    if (chi1(phi, q, sigma_w2, opts.quad) <= 1.0 + opts.crit_band) return {1.0, FixedPointStatus::converged, 0};
    auto deriv = [&](double c) { return sigma_w2 * f_phi_prime(Cov2{q, c * q, q}, phi, opts.quad); };
    auto clamped = [&](double c) { return std::min(map(std::clamp(c, -1.0, 1.0)), 1.0); };
    FixedPoint r = iterate(clamped, deriv, 0.5, -1.0, opts);
    r.value = std::clamp(r.value, -1.0, 1.0);
    return r;
}

namespace {

double depth_scale(double factor, double band) {
    if (!std::isfinite(factor)) fail(Errc::NonFiniteInput, "depth-scale factor is not finite");
    if (factor <= 0.0) fail(Errc::LogOfNonPositive, "depth-scale factor " + std::to_string(factor));
    if (std::abs(factor - 1.0) <= band) return std::numeric_limits<double>::infinity();
    if (factor > 1.0) return std::numeric_limits<double>::quiet_NaN();
    return -1.0 / std::log(factor);
}

} // namespace

DepthScales depth_scales(const Nonlinearity& phi, double q, double c, double sigma_w2, const CriticalityOptions& opts) {
    check_q(q);
    const double fq = chi_parallel(phi, q, sigma_w2, opts.quad);
    const double fc = sigma_w2 * f_phi_prime(Cov2{q, c * q, q}, phi, opts.quad);
    return {depth_scale(fq, opts.crit_band), depth_scale(fc, opts.crit_band)};
}

PhasePoint phase_classify(const Nonlinearity& phi, double sigma_b2, double sigma_w2, const CriticalityOptions& opts) {
    PhasePoint p;
    p.sigma_b2 = sigma_b2;
    p.sigma_w2 = sigma_w2;
    const FixedPoint q = find_qstar(phi, sigma_b2, sigma_w2, opts);
    p.q_star = q.value;
    if (q.status == FixedPointStatus::not_converged) {
        p.phase = Phase::no_fixed_point;
        p.status = "q_star not converged";
        p.xi_q = p.xi_c = std::numeric_limits<double>::quiet_NaN();
        p.chi1 = std::numeric_limits<double>::quiet_NaN();
        return p;
    }
    if (q.status == FixedPointStatus::every_point_fixed) p.status = "every q is fixed";
    p.chi1 = chi1(phi, p.q_star, sigma_w2, opts.quad);
    if (std::abs(p.chi1 - 1.0) <= opts.crit_band) p.phase = Phase::critical;
    else p.phase = p.chi1 < 1.0 ? Phase::ordered : Phase::chaotic;
    if (p.q_star <= 0.0) {
        p.c_star = 1.0;
        p.xi_q = depth_scale(chi_parallel(phi, 0.0, sigma_w2, opts.quad), opts.crit_band);
        p.xi_c = depth_scale(p.chi1, opts.crit_band);
        return p;
    }
    const FixedPoint c = find_cstar(phi, p.q_star, sigma_w2, sigma_b2, opts);
    p.c_star = c.value;
    if (c.status == FixedPointStatus::not_converged) p.status = "c_star not converged";
    const DepthScales s = depth_scales(phi, p.q_star, p.c_star, sigma_w2, opts);
    p.xi_q = s.xi_q;
    p.xi_c = s.xi_c;
    return p;
}

std::vector<PhasePoint> phase_diagram(const Nonlinearity& phi, const std::vector<double>& grid_b,
                                      const std::vector<double>& grid_w, const CriticalityOptions& opts, Exec exec) {
    const std::size_t nb = grid_b.size(), nw = grid_w.size();
    std::vector<PhasePoint> out(nb * nw);
    detail::parallel_for(std::int64_t(out.size()), exec == Exec::parallel, [&](std::int64_t i) {
        const double b = grid_b[i / nw], w = grid_w[i % nw];
        try {
            out[i] = phase_classify(phi, b, w, opts);
        } catch (const Error& e) {
            out[i].sigma_b2 = b;
            out[i].sigma_w2 = w;
            out[i].phase = Phase::no_fixed_point;
            out[i].status = e.what();
            out[i].q_star = out[i].chi1 = out[i].xi_q = out[i].xi_c = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return out;
}

} // namespace widthlab

#include "widthlab/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "parallel.hpp"
#include "widthlab/criticality.hpp"
#include "widthlab/dynamics.hpp"
#include "widthlab/errors.hpp"
#include "widthlab/estimators.hpp"
#include "widthlab/finite_width.hpp"
#include "widthlab/gp.hpp"
#include "widthlab/os_measure.hpp"
#include "widthlab/stats.hpp"

namespace widthlab {

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Checks {
    CriterionResult& r;
    void operator()(bool ok, const std::string& msg) {
        r.details.push_back(std::string(ok ? "ok   " : "FAIL ") + msg);
        r.pass = r.pass && ok;
    }
};

ArchSpec fc(Nonlinearity phi, int depth, int n0, double b2, double w2) {
    ArchSpec a;
    a.kind = ArchKind::fc;
    a.depth = depth;
    a.input_dim = n0;
    a.sigma_b2 = b2;
    a.sigma_w2 = w2;
    a.phi = std::move(phi);
    return a;
}

WidthProfile uniform(int n, int depth, int n0) { return {std::vector<int>(depth, n), n0}; }

double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

// Stream purposes private to the validation suite.
enum : std::uint64_t {
    kInitStream = 0x76616c69,
    kDropStream = 0x76616c64,
    kChiStream = 0x76616c63,
    kUvStream = 0x76616c75,
};

// 1. NNGP agreement
void nngp_agreement(const ValidationOptions& o, Checks& check) {
    const ArchSpec a = fc(Nonlinearity::tanh(), 3, 4, 0.05, 1.5);
    Matrix X(3, 4);
    X << 1.0, 0.5, -0.3, 0.8,
         0.9, 0.7, -0.1, 0.6,
         1.3, 0.2, -0.5, 1.1;
    const Matrix K = nngp_fc(a, X, o.exec).back().values;
    const auto est = empirical_nngp(a, uniform(2048, 3, 4), X, 100000, RngPlan(o.seed).derive(1),
                                    NngpSampler::layerwise, Parameterization::ntk, o.exec);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double d = std::abs(est.estimate(i, j) - K(i, j));
            const double se = est.std_error(i, j);
            check(d <= 3.0 * se && d <= 0.02 * std::abs(K(i, j)),
                  fmt("K(%d,%d): analytic %.6f, MC %.6f +- %.6f (%.2f se, %.2f%%)", i, j, K(i, j),
                      est.estimate(i, j), se, d / se, 100.0 * d / std::abs(K(i, j))));
        }
}

// 2. NTK agreement
void ntk_agreement(const ValidationOptions& o, Checks& check) {
    const ArchSpec a = fc(Nonlinearity::tanh(), 3, 4, 0.05, 1.5);
    Matrix X(3, 4);
    X << 1.0, 0.5, -0.3, 0.8,
         0.9, 0.7, -0.1, 0.6,
         1.3, 0.2, -0.5, 1.1;
    const Matrix T = ntk_fc(a, X, o.exec).ntk.back().values;
    const WidthProfile wp = uniform(1024, 3, 4);
    const RngPlan plan = RngPlan(o.seed).derive(2);
    const int draws = 200;
    std::vector<Matrix> per(draws);
    detail::parallel_for(draws, o.exec == Exec::parallel, [&](std::int64_t d) {
        PhiloxEngine eng = plan.stream(kInitStream, std::uint64_t(d));
        per[d] = empirical_ntk(init_network(a, wp, Parameterization::ntk, eng), X);
    });
    Matrix mean = Matrix::Zero(3, 3);
    for (const auto& M : per) mean += M;
    mean /= double(draws);
    const double rel = rel_frobenius(mean, T);
    check(rel < 0.05, fmt("relative Frobenius distance %.4f (analytic |T|_F = %.4f)", rel, T.norm()));
}

// 3. Linearization scaling
void linearization_scaling(const ValidationOptions& o, Checks& check) {
    const int m = 10, seeds = 4;
    Dataset data{Matrix(m, 1), Vector(m)};
    for (int i = 0; i < m; ++i) {
        const double x = -1.0 + 2.0 * i / (m - 1);
        data.X(i, 0) = x;
        data.y[i] = std::sin(std::numbers::pi * x);
    }
    const std::vector<int> widths = {128, 512, 2048};
    // Smooth and piecewise-linear activations; both must show the law.
    const std::vector<ArchSpec> archs = {fc(Nonlinearity::tanh(), 1, 1, 0.1, 1.0), fc(Nonlinearity::relu(), 1, 1, 0.1, 2.0)};
    for (std::size_t ai = 0; ai < archs.size(); ++ai) {
        const ArchSpec& a = archs[ai];
        const RngPlan plan = RngPlan(o.seed).derive(3).derive(ai);
        std::vector<double> ns, fdiff, tdiff;
        std::vector<CompareResult> runs(widths.size() * seeds);
        detail::parallel_for(std::int64_t(runs.size()), o.exec == Exec::parallel, [&](std::int64_t k) {
            PhiloxEngine eng = plan.stream(kInitStream, std::uint64_t(k));
            const Mlp net = init_network(a, uniform(widths[k / seeds], 1, 1), Parameterization::ntk, eng);
            const double eta = 0.5 * critical_learning_rate(empirical_ntk(net, data.X), m);
            TrainOptions opts;
            opts.record_every = 1000;
            runs[k] = train_compare(net, data, eta, 2000, opts);
            runs[k].gd.steps.clear();
            runs[k].lin.steps.clear();
        });
        for (std::size_t w = 0; w < widths.size(); ++w) {
            double f = 0, t = 0;
            for (int s = 0; s < seeds; ++s) {
                f += runs[w * seeds + s].sup_f_diff / seeds;
                t += runs[w * seeds + s].sup_ntk_change / seeds;
            }
            ns.push_back(widths[w]);
            fdiff.push_back(f);
            tdiff.push_back(t);
            check(true, fmt("%s n = %d: sup|f - f_lin| = %.4e, sup|T_t - T_0|_F = %.4e", a.phi.name.c_str(), widths[w], f, t));
        }
        const auto pf = fit_power_law(ns, fdiff), pt = fit_power_law(ns, tdiff);
        check(pf.exponent >= -0.7 && pf.exponent <= -0.3,
              fmt("%s sup|f - f_lin| exponent %.3f (r2 %.3f)", a.phi.name.c_str(), pf.exponent, pf.r2));
        check(pt.exponent >= -0.7 && pt.exponent <= -0.3,
              fmt("%s sup|T_t - T_0|_F exponent %.3f (r2 %.3f)", a.phi.name.c_str(), pt.exponent, pt.r2));
    }
}

// 4. kappa4 for critical ReLU
void kappa4_relu(const ValidationOptions& o, Checks& check) {
    const ArchSpec a = fc(Nonlinearity::relu(), 3, 4, 0.0, 2.0);
    const WidthProfile wp = uniform(256, 3, 4);
    Vector x(4);
    x << 1.0, -0.5, 0.25, 2.0;
    const double K = 2.0 * x.squaredNorm() / 4.0;
    const auto moments = empirical_kappa4(a, wp, x, 100000, RngPlan(o.seed).derive(4), 0, o.exec);
    double inv = 0.0;
    for (const auto& lm : moments) {
        const double target = 5.0 * inv * K * K;
        const auto& s = lm.kappa_single;
        const auto& c = lm.kappa_cross;
        if (lm.layer == 1) {
            check(std::abs(s.mean) <= 4 * s.se && std::abs(c.mean) <= 4 * c.se,
                  fmt("layer 1: single %.4e +- %.1e, cross %.4e +- %.1e (Gaussian)", s.mean, s.se, c.mean, c.se));
        } else if (lm.layer == int(moments.size())) {
            check(std::abs(s.mean - target) <= 4 * s.se,
                  fmt("layer %d single: %.5f +- %.5f vs %.5f (%.2f se)", lm.layer, s.mean, s.se, target,
                      std::abs(s.mean - target) / s.se));
            check(std::abs(c.mean - target) <= 4 * c.se,
                  fmt("layer %d cross:  %.5f +- %.5f vs %.5f (%.2f se)", lm.layer, c.mean, c.se, target,
                      std::abs(c.mean - target) / c.se));
            const double joint = std::sqrt(s.se * s.se + c.se * c.se);
            check(std::abs(s.mean - c.mean) <= 4 * joint,
                  fmt("estimators agree: |single - cross| = %.2e, joint se %.2e", std::abs(s.mean - c.mean), joint));
        }
        inv += 1.0 / lm.width;
    }
}

// 5. Deep linear G4
void deep_linear_g4_check(const ValidationOptions& o, Checks& check) {
    const int n = 64, L = 4;
    const ArchSpec a = fc(Nonlinearity::linear(), L, 4, 0.0, 1.0);
    Vector x(4);
    x << 0.7, -1.2, 0.4, 1.0;
    const double g2 = x.squaredNorm() / 4.0;
    const auto moments = empirical_layer_moments(a, uniform(n, L, 4), x, 100000, RngPlan(o.seed).derive(5), n, o.exec);
    const auto& out = moments.back();
    const double target = deep_linear_g4(L, n, 1.0, g2);
    check(std::abs(target - std::pow(1.0 + 2.0 / n, L) * g2 * g2) < 1e-12 * target,
          fmt("closed form (1 + 2/64)^4 G2^2 = %.6f", target));
    const double est = out.m4.mean / 3.0, se = out.m4.se / 3.0;
    check(std::abs(est - target) <= 4 * se,
          fmt("E[z^4]/3 = %.6f +- %.6f vs %.6f (%.2f se); Gaussian value %.6f", est, se, target,
              std::abs(est - target) / se, g2 * g2));
    check(std::abs(out.cross.mean - target) <= 4 * out.cross.se,
          fmt("E[z_i^2 z_j^2] = %.6f +- %.6f vs %.6f", out.cross.mean, out.cross.se, target));
}

// 6. Jacobian moments
void jacobian(const ValidationOptions& o, Checks& check) {
    const ArchSpec a = fc(Nonlinearity::relu(), 2, 4, 0.0, 2.0);
    const WidthProfile wp{{64, 64}, 4};
    Vector x(4);
    x << 0.3, -1.0, 2.0, 0.5;
    const auto jm = empirical_jacobian_moments(a, wp, x, 400000, RngPlan(o.seed).derive(6), 0, 0, false, o.exec);
    check(std::abs(jm.m2.mean - 0.5) <= 3 * jm.m2.se, fmt("E J^2 = %.5f +- %.5f vs 0.5", jm.m2.mean, jm.m2.se));
    const double m4 = 0.75 * std::exp(5.0 * 2.0 / 64.0);
    check(std::abs(jm.m4.mean - m4) <= 0.1 * m4,
          fmt("E J^4 = %.5f +- %.5f vs %.5f (%.2f%%)", jm.m4.mean, jm.m4.se, m4, 100.0 * std::abs(jm.m4.mean / m4 - 1.0)));

    const ArchSpec small = fc(Nonlinearity::relu(), 2, 2, 0.0, 2.0);
    const WidthProfile swp{{3, 3}, 2};
    Vector xs(2);
    xs << 0.8, -0.6;
    const double oracle = path_moment_bruteforce(swp, 4, 3.0);
    const auto sm = empirical_jacobian_moments(small, swp, xs, 1000000, RngPlan(o.seed).derive(61), 0, 0, false, o.exec);
    check(std::abs(sm.m4.mean - oracle) <= 4 * sm.m4.se,
          fmt("n0 = 2, widths [3,3]: path sum %.5f, MC %.5f +- %.5f (%.2f se)", oracle, sm.m4.mean, sm.m4.se,
              std::abs(sm.m4.mean - oracle) / sm.m4.se));
}

// 7. Dropout-linear equivalence
void dropout_linear(const ValidationOptions& o, Checks& check) {
    const int n0 = 8, out = 8;
    const long long N = 100000;
    const ArchSpec a = fc(Nonlinearity::relu(), 2, n0, 0.0, 2.0);
    const WidthProfile wp{{8, 8}, n0};
    Vector x(n0);
    x << 1.0, -0.4, 0.3, 0.9, -1.1, 0.2, 0.5, -0.7;
    const NetworkSpec spec = make_spec(a, wp, Parameterization::standard, out);
    const RngPlan plan = RngPlan(o.seed).derive(7);
    std::vector<double> relu_norms(N), drop_norms(N);
    const long long blocks = (N + kSamplesPerBlock - 1) / kSamplesPerBlock;
    detail::parallel_for(blocks, o.exec == Exec::parallel, [&](std::int64_t b) {
        PhiloxEngine e1 = plan.stream(kInitStream, std::uint64_t(b));
        PhiloxEngine e2 = plan.stream(kDropStream, std::uint64_t(b));
        Mlp net(spec);
        const long long end = std::min(N, (b + 1) * kSamplesPerBlock);
        for (long long i = b * kSamplesPerBlock; i < end; ++i) {
            redraw(net, e1);
            relu_norms[i] = forward(net, x).norm();
            drop_norms[i] = sample_dropout_linear(wp, x, e2, out).norm();
        }
    });
    const double D = ks_statistic(relu_norms, drop_norms);
    check(D < 0.01, fmt("KS distance %.5f (5%% critical value %.5f)", D, ks_critical(N, N, 0.05)));
}

// 8. Catapult regimes
void catapult(const ValidationOptions&, Checks& check) {
    const double lam0 = 2.0, n = 1e6;
    const auto ntk = catapult_map(1.0, lam0, n, 0.9, 2000);
    const double dl = std::abs(ntk.lambda.back() - lam0) / lam0;
    check(!ntk.diverged && std::abs(ntk.f.back()) < 1e-8 && dl < 1e-4,
          fmt("eta = 0.9: final |f| = %.2e, |dlambda|/lambda0 = %.2e", std::abs(ntk.f.back()), dl));

    const auto cat = catapult_map(1.0, lam0, n, 1.5, 5000);
    double peak = 0.0, peak_loss = 0.0;
    for (std::size_t t = 0; t < cat.f.size(); ++t) {
        peak = std::max(peak, std::abs(cat.f[t]));
        peak_loss = std::max(peak_loss, cat.loss[t]);
    }
    const double final_el = 1.5 * cat.lambda.back();
    check(!cat.diverged && peak_loss > cat.loss.front() && cat.loss.back() < 1e-10 && final_el < 2.0 &&
              peak >= 0.1 * std::sqrt(n),
          fmt("eta = 1.5: peak |f| = %.1f (0.1 sqrt(n) = %.1f), final loss %.2e, final eta*lambda = %.4f", peak,
              0.1 * std::sqrt(n), cat.loss.back(), final_el));

    const auto div = catapult_map(1.0, lam0, n, 2.1, 5000);
    check(div.diverged, fmt("eta = 2.1: diverged after %zu steps", div.f.size() - 1));

    const double eta_c = 2.0 / lam0;
    const auto rows = t_epsilon_scan(lam0, n, 1e-6, {0.99 * eta_c, 0.995 * eta_c, 0.999 * eta_c});
    std::vector<double> prod;
    for (const auto& r : rows) prod.push_back(double(r.steps) * std::abs(eta_c - r.eta));
    double mean = 0.0;
    for (double p : prod) mean += p / prod.size();
    bool ok = true;
    for (const auto& r : rows) ok = ok && r.flag == "converged";
    for (double p : prod) ok = ok && std::abs(p / mean - 1.0) <= 0.5;
    check(ok, fmt("t_eps * |eta_c - eta| = %.4f, %.4f, %.4f (steps %lld, %lld, %lld)", prod[0], prod[1], prod[2],
                  rows[0].steps, rows[1].steps, rows[2].steps));
}

// 9. uv-model reduction
void uv_reduction(const ValidationOptions& o, Checks& check) {
    const int n = 1000;
    PhiloxEngine eng = RngPlan(o.seed).derive(9).stream(kUvStream, 0);
    NormalSampler normal;
    Matrix u(n, 1);
    Vector v(n);
    for (int i = 0; i < n; ++i) u(i, 0) = normal(eng);
    for (int i = 0; i < n; ++i) v[i] = normal(eng);
    const Matrix X = Matrix::Ones(1, 1);
    const Vector y = Vector::Zero(1);
    const double lam0 = (u.squaredNorm() + v.squaredNorm()) / n;
    const double f0 = v.dot(u.col(0)) / std::sqrt(double(n));
    for (double factor : {0.9, 1.5}) {
        const double eta = factor * 2.0 / lam0;
        const auto uv = uv_model_train(u, v, X, y, eta, 500);
        const auto cm = catapult_map(f0, lam0, n, eta, 500);
        double err = 0.0;
        const std::size_t T = std::min(uv.steps.size(), cm.f.size());
        for (std::size_t t = 0; t < T; ++t) {
            err = std::max(err, std::abs(uv.steps[t].f[0] - cm.f[t]) / std::max(1.0, std::abs(cm.f[t])));
            err = std::max(err, std::abs(uv.steps[t].lambda_top - cm.lambda[t]) / std::max(1.0, cm.lambda[t]));
        }
        check(T == 501 && err <= 1e-10, fmt("eta = %.1f * 2/lambda0: max relative deviation %.2e over %zu steps",
                                            factor, err, T ? T - 1 : 0));
    }
}

// 10. O_s scaling and the perturbative prediction
void os_scaling(const ValidationOptions& o, Checks& check) {
    const ArchSpec a = fc(Nonlinearity::tanh(), 1, 1, 0.1, 1.0);
    const Matrix x = Matrix::Constant(1, 1, 1.0);
    const std::vector<int> widths = {64, 256, 1024};
    const int draws = 2000;
    const RngPlan plan = RngPlan(o.seed).derive(10);
    std::vector<double> ns, o3f, o4;
    for (std::size_t w = 0; w < widths.size(); ++w) {
        std::vector<double> a3(draws), a4(draws);
        detail::parallel_for(draws, o.exec == Exec::parallel, [&](std::int64_t d) {
            PhiloxEngine eng = plan.stream(kInitStream, std::uint64_t(w * draws + d));
            const Mlp net = init_network(a, uniform(widths[w], 1, 1), Parameterization::ntk, eng);
            const auto os = measure_Os(net, x, 4);
            a3[d] = os.O3(0, 0, 0) * forward(net, x).output()(0, 0);
            a4[d] = os.O4(0, 0, 0, 0);
        });
        const MeanSe s3 = mean_se(a3), s4 = mean_se(a4);
        ns.push_back(widths[w]);
        o3f.push_back(std::abs(s3.mean));
        o4.push_back(std::abs(s4.mean));
        check(true, fmt("n = %d: E[O3 f] = %.4e +- %.1e, E[O4] = %.4e +- %.1e", widths[w], s3.mean, s3.se, s4.mean,
                        s4.se));
    }
    const auto p3 = fit_power_law(ns, o3f), p4 = fit_power_law(ns, o4);
    check(-p3.exponent >= 0.7 && -p3.exponent <= 1.3, fmt("|E[O3 f]| decay exponent %.3f", -p3.exponent));
    check(-p4.exponent >= 0.7 && -p4.exponent <= 1.3, fmt("|E[O4]| decay exponent %.3f", -p4.exponent));

    // Two training points, gradient descent with a small step as the gradient-flow reference.
    Dataset data{Matrix(2, 1), Vector(2)};
    data.X << 0.5, -0.8;
    data.y << 0.4, -0.3;
    const int seeds = 50;
    std::vector<double> err_pert(seeds), err_plain(seeds);
    detail::parallel_for(seeds, o.exec == Exec::parallel, [&](std::int64_t s) {
        PhiloxEngine eng = plan.stream(kInitStream, std::uint64_t(1000000 + s));
        const Mlp net = init_network(a, uniform(512, 1, 1), Parameterization::ntk, eng);
        const Matrix theta0 = empirical_ntk(net, data.X);
        const Vector f0 = forward(net, data.X).output().row(0).transpose();
        const auto os = measure_Os(net, data.X, 4);
        const double lmax = spectral_decompose(theta0).eigenvalues.maxCoeff();
        const double lmin = spectral_decompose(theta0).eigenvalues.minCoeff();
        const double tau = 2.0 / lmin;
        const double eta = 2e-4 * 2.0 / lmax; // eta lambda / m = 2e-4
        const long long steps = (long long)std::ceil(tau * 2.0 / eta);
        const double t = eta * double(steps) / 2.0;
        TrainOptions opts;
        opts.record_every = steps;
        const auto tr = train_gd(net, data, eta, steps, opts);
        const Vector f_gd = tr.steps.back().f;
        const Vector pert = perturbative_train_prediction(theta0, f0, data.y, os.O3, os.O4, t);
        const Vector plain = ntk_gd_train_evolution(theta0, f0, data.y, {t})[0];
        err_pert[s] = (pert - f_gd).squaredNorm();
        err_plain[s] = (plain - f_gd).squaredNorm();
    });
    const MeanSe ep = mean_se(err_pert), eu = mean_se(err_plain);
    check(ep.mean < eu.mean, fmt("width 512, %d seeds: MSE corrected %.3e, uncorrected %.3e", seeds, ep.mean, eu.mean));
}

// 11. Criticality landmarks
void criticality(const ValidationOptions&, Checks& check) {
    CriticalityOptions co;
    const auto t = phase_classify(Nonlinearity::tanh(), 0.0, 1.0, co);
    check(t.phase == Phase::critical, fmt("tanh (0, 1): %s, chi1 = %.6f", to_string(t.phase), t.chi1));
    const auto r = phase_classify(Nonlinearity::relu(), 0.0, 2.0, co);
    const double chi_par = chi_parallel(Nonlinearity::relu(), 1.0, 2.0);
    check(r.phase == Phase::critical && std::abs(chi_par - 1.0) <= co.crit_band,
          fmt("relu (0, 2): %s, chi1 = %.6f, chi_par = %.6f", to_string(r.phase), r.chi1, chi_par));

    const Nonlinearity phi = Nonlinearity::tanh();
    for (auto [b2, w2] : {std::pair{0.05, 0.9}, std::pair{0.3, 1.4}}) {
        const auto p = phase_classify(phi, b2, w2, co);
        std::vector<double> ls, logs;
        double c = 0.2;
        for (int l = 1; l <= 60; ++l) {
            c = c_map(phi, c, p.q_star, b2, w2, co.quad);
            if (l >= 20) {
                ls.push_back(l);
                logs.push_back(std::log(std::abs(c - p.c_star)));
            }
        }
        const double xi = -1.0 / linear_fit(ls, logs).second;
        const double rel = std::abs(xi / p.xi_c - 1.0);
        check(p.phase == Phase::ordered && rel < 0.05,
              fmt("tanh (%.2f, %.2f): chi1 = %.4f, xi_c predicted %.4f, measured %.4f (%.2f%%)", b2, w2, p.chi1,
                  p.xi_c, xi, 100.0 * rel));
    }
}

// 12. GP inference
void gp_inference(const ValidationOptions&, Checks& check) {
    const ArchSpec a = fc(Nonlinearity::relu(), 2, 1, 0.1, 2.0);
    Matrix Xall(7, 1);
    Xall << -1.0, -0.6, -0.1, 0.3, 0.8, 0.2, -0.35;
    const Matrix K = nngp_fc(a, Xall).back().values;
    const Matrix Kt = K.topLeftCorner(5, 5);
    Vector y(5);
    y << 0.3, -0.2, 0.5, 0.1, -0.4;
    const auto post = gp_posterior(Kt, Kt, Kt.diagonal(), y, 0.0);
    const double err = (post.mean - y).cwiseAbs().maxCoeff();
    const double var = post.variance.cwiseAbs().maxCoeff();
    check(err < 1e-8 && var < 1e-8, fmt("noiseless interpolation: max |mean - y| = %.2e, max variance = %.2e", err, var));

    const auto one = gp_posterior(Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0),
                                  Vector::Constant(1, 1.0), Vector::Constant(1, 2.0), 0.0);
    check(one.mean[0] == 1.0 && one.variance[0] == 0.5,
          fmt("K = 2, k = 1, k** = 1, y = 2: posterior (%.17g, %.17g)", one.mean[0], one.variance[0]));

    const Matrix T = ntk_fc(a, Xall).ntk.back().values;
    const auto mv = ntk_gd_mean_var(T.topLeftCorner(5, 5), T.topLeftCorner(5, 5), Kt, Kt, Kt.diagonal(), y);
    const double v = mv.variance.cwiseAbs().maxCoeff();
    const double me = (mv.mean - y).cwiseAbs().maxCoeff();
    check(v < 1e-8 && me < 1e-8, fmt("trained-network GP at training points: max variance %.2e, max |mean - y| %.2e", v, me));
}

// 13. chi-square log moments
void chi_square(const ValidationOptions& o, Checks& check) {
    const RngPlan plan = RngPlan(o.seed).derive(13);
    const long long N = 200000;
    for (int k : {2, 8, 64}) {
        const auto exact = chi_square_log_stats(k);
        std::vector<double> xs(N);
        const long long blocks = (N + kSamplesPerBlock - 1) / kSamplesPerBlock;
        detail::parallel_for(blocks, o.exec == Exec::parallel, [&](std::int64_t b) {
            PhiloxEngine eng = plan.stream(kChiStream, std::uint64_t(k) << 32 | std::uint64_t(b));
            NormalSampler normal;
            const long long end = std::min(N, (b + 1) * kSamplesPerBlock);
            for (long long i = b * kSamplesPerBlock; i < end; ++i) {
                double s = 0.0;
                for (int j = 0; j < k; ++j) {
                    const double z = normal(eng);
                    s += z * z;
                }
                xs[i] = 0.5 * std::log(s / k);
            }
        });
        const MeanSe m = mean_se(xs);
        std::vector<double> sq(N);
        for (long long i = 0; i < N; ++i) sq[i] = (xs[i] - m.mean) * (xs[i] - m.mean);
        const MeanSe v = mean_se(sq);
        check(std::abs(m.mean - exact.mean) <= 4 * m.se && std::abs(v.mean - exact.variance) <= 4 * v.se,
              fmt("k = %d: mean %.6f vs MC %.6f +- %.6f; variance %.6f vs MC %.6f +- %.6f", k, exact.mean, m.mean,
                  m.se, exact.variance, v.mean, v.se));
    }
    const double k = 1e4;
    const auto s = chi_square_log_stats(k);
    const double rel = std::abs(s.mean / s.mean_leading - 1.0);
    check(rel <= 0.01, fmt("k = 1e4: exact mean %.6e vs -1/(4k) = %.6e (%.1f%% off; -1/(2k) = %.6e)", s.mean,
                           s.mean_leading, 100.0 * rel, -1.0 / (2.0 * k)));
}

using Fn = void (*)(const ValidationOptions&, Checks&);

struct Entry {
    CriterionInfo info;
    Fn fn;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> r = {
        {{1, "nngp", "NNGP agreement"}, nngp_agreement},
        {{2, "ntk", "NTK agreement"}, ntk_agreement},
        {{3, "linearization", "linearization scaling"}, linearization_scaling},
        {{4, "kappa4-relu", "kappa4 ReLU closed form"}, kappa4_relu},
        {{5, "deep-linear-g4", "deep-linear exact G4"}, deep_linear_g4_check},
        {{6, "jacobian", "Jacobian moments"}, jacobian},
        {{7, "dropout-linear", "dropout-linear equivalence"}, dropout_linear},
        {{8, "catapult", "catapult regimes"}, catapult},
        {{9, "uv-reduction", "uv-model reduction"}, uv_reduction},
        {{10, "os-scaling", "O_s scaling"}, os_scaling},
        {{11, "criticality", "criticality landmarks"}, criticality},
        {{12, "gp-inference", "GP inference"}, gp_inference},
        {{13, "chi-square", "chi-square log moments"}, chi_square},
    };
    return r;
}

} // namespace

const std::vector<CriterionInfo>& criteria() {
    static const std::vector<CriterionInfo> c = [] {
        std::vector<CriterionInfo> v;
        for (const auto& e : registry()) v.push_back(e.info);
        return v;
    }();
    return c;
}

CriterionResult run_criterion(int id, const ValidationOptions& opts) {
    const auto& reg = registry();
    const auto it = std::find_if(reg.begin(), reg.end(), [id](const Entry& e) { return e.info.id == id; });
    if (it == reg.end()) fail(Errc::InvalidArgument, "no criterion " + std::to_string(id));
    CriterionResult r;
    r.id = id;
    r.slug = it->info.slug;
    r.name = it->info.name;
    r.pass = true;
    Checks check{r};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        it->fn(opts, check);
    } catch (const std::exception& e) {
        check(false, std::string("error: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<int> suite_ids(const std::string& slug) {
    std::vector<int> ids;
    for (const auto& c : criteria())
        if (slug == "all" || slug == c.slug || slug == std::to_string(c.id)) ids.push_back(c.id);
    if (ids.empty()) fail(Errc::ConfigInvalid, "unknown suite '" + slug + "'");
    return ids;
}

std::string summary_line(const CriterionResult& r) {
    return fmt("[%s] %2d %-15s %s (%.1f s)", r.pass ? "PASS" : "FAIL", r.id, r.slug.c_str(), r.name.c_str(), r.seconds);
}

} // namespace widthlab

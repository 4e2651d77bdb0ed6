#include "widthlab/commands.hpp"

#include <filesystem>
#include <ostream>

#include <omp.h>

#include "widthlab/criticality.hpp"
#include "widthlab/dynamics.hpp"
#include "widthlab/errors.hpp"
#include "widthlab/gp.hpp"
#include "widthlab/io.hpp"
#include "widthlab/validation.hpp"

namespace widthlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double x) { return format_double(x); }
std::string num(long long x) { return std::to_string(x); }

struct Out {
    const RunConfig& c;
    std::ostream& log;
    std::uint64_t seed() const { return c.seed.value_or(0); }
    void csv(const std::string& name, const CsvTable& t) const {
        write_atomic(fs::path(c.out) / name, to_csv(t, seed()));
        log << "wrote " << (fs::path(c.out) / name).string() << "\n";
    }
    void js(const std::string& name, const json& j) const {
        write_atomic(fs::path(c.out) / name, j.dump(2) + "\n");
        log << "wrote " << (fs::path(c.out) / name).string() << "\n";
    }
};

Dataset read_dataset(const std::string& path, int n0) {
    const CsvData d = read_csv(path);
    if (int(d.header.size()) != n0 + 1 || d.header.back() != "y")
        fail(Errc::ConfigInvalid, path + ": expected columns x_0..x_" + std::to_string(n0 - 1) + ", y");
    if (d.values.rows() == 0) fail(Errc::ConfigInvalid, path + ": no rows");
    return {d.values.leftCols(n0), d.values.col(n0)};
}

Matrix read_query(const std::string& path, int n0) {
    const CsvData d = read_csv(path);
    if (int(d.header.size()) != n0) fail(Errc::ConfigInvalid, path + ": expected columns x_0..x_" + std::to_string(n0 - 1));
    return d.values;
}

Matrix inputs_of(const RunConfig& c) {
    if (c.inputs.size()) return c.inputs;
    return read_dataset(c.dataset, c.arch.input_dim).X;
}

void kernel_rows(CsvTable& t, int layer, const Matrix& K) {
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < K.cols(); ++j)
            t.add_row({std::to_string(layer), std::to_string(i), std::to_string(j), num(K(i, j))});
}

int cmd_kernel(const Out& o) {
    const RunConfig& c = o.c;
    CsvTable t{{"layer", "i", "j", "value"}, {}};
    json j = {{"layers", json::array()}};
    if (c.arch.kind == ArchKind::conv1d) {
        const auto ks = nngp_conv1d(c.arch, c.conv_inputs);
        for (const auto& k : ks) j["layers"].push_back({{"layer", k.layer}, {"values", matrix_to_json(k.values)}});
        const Matrix R = c.readout_h.size() ? readout_spatial_aggregation(c.arch, ks.back(), c.readout_h)
                                            : readout_vectorize(c.arch, ks.back());
        kernel_rows(t, c.arch.depth + 1, R);
        j["readout"] = matrix_to_json(R);
    } else {
        const Matrix X = inputs_of(c);
        const auto ks = c.arch.kind == ArchKind::fc ? nngp_fc(c.arch, X) : nngp_residual(c.arch, X);
        for (const auto& k : ks) {
            kernel_rows(t, k.layer, k.values);
            j["layers"].push_back({{"layer", k.layer}, {"values", matrix_to_json(k.values)}});
        }
    }
    o.csv("kernel.csv", t);
    o.js("kernel.json", j);
    return kExitOk;
}

int cmd_ntk(const Out& o) {
    const Matrix X = inputs_of(o.c);
    const NtkResult r = ntk_fc(o.c.arch, X);
    CsvTable t{{"layer", "i", "j", "nngp", "ntk"}, {}};
    json j = {{"layers", json::array()}};
    for (std::size_t l = 0; l < r.ntk.size(); ++l) {
        const Matrix& K = r.nngp[l].values;
        const Matrix& T = r.ntk[l].values;
        for (Eigen::Index a = 0; a < K.rows(); ++a)
            for (Eigen::Index b = 0; b < K.cols(); ++b)
                t.add_row({std::to_string(l), std::to_string(a), std::to_string(b), num(K(a, b)), num(T(a, b))});
        j["layers"].push_back({{"layer", l}, {"nngp", matrix_to_json(K)}, {"ntk", matrix_to_json(T)}});
    }
    o.csv("ntk.csv", t);
    o.js("ntk.json", j);
    return kExitOk;
}

std::string sanitize(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n') ch = ';';
    return s;
}

int cmd_phase(const Out& o) {
    const auto pts = phase_diagram(o.c.arch.phi, o.c.grid_b, o.c.grid_w);
    CsvTable t{{"sigma_b2", "sigma_w2", "q_star", "chi1", "xi_q", "xi_c", "phase", "status"}, {}};
    for (const auto& p : pts)
        t.add_row({num(p.sigma_b2), num(p.sigma_w2), num(p.q_star), num(p.chi1), num(p.xi_q), num(p.xi_c),
                   to_string(p.phase), sanitize(p.status)});
    o.csv("phase_diagram.csv", t);
    return kExitOk;
}

int cmd_gp(const Out& o) {
    const RunConfig& c = o.c;
    const Dataset d = read_dataset(c.dataset, c.arch.input_dim);
    const Matrix Q = read_query(c.query, c.arch.input_dim);
    const Eigen::Index m = d.X.rows(), q = Q.rows();
    Matrix all(m + q, c.arch.input_dim);
    all << d.X, Q;
    Posterior p;
    if (c.gp_kernel == "nngp") {
        const Matrix K = nngp_fc(c.arch, all).back().values;
        p = gp_posterior(K.topLeftCorner(m, m), K.topRightCorner(m, q), K.bottomRightCorner(q, q).diagonal(), d.y,
                         c.noise, c.jitter);
    } else {
        const NtkResult r = ntk_fc(c.arch, all);
        const Matrix& K = r.nngp.back().values;
        const Matrix& T = r.ntk.back().values;
        p = ntk_gd_mean_var(T.topLeftCorner(m, m), T.topRightCorner(m, q), K.topLeftCorner(m, m),
                            K.topRightCorner(m, q), K.bottomRightCorner(q, q).diagonal(), d.y);
    }
    CsvTable t{{"query_id", "mean", "variance"}, {}};
    for (Eigen::Index i = 0; i < q; ++i) t.add_row({std::to_string(i), num(p.mean[i]), num(p.variance[i])});
    o.csv("predictions.csv", t);
    return kExitOk;
}

CsvTable trajectory_csv(const TrajectoryRecord& r, Eigen::Index m) {
    CsvTable t;
    t.header = {"t", "loss"};
    for (Eigen::Index a = 0; a < m; ++a) t.header.push_back("f_" + std::to_string(a));
    t.header.push_back("lambda_top");
    for (const auto& s : r.steps) {
        std::vector<std::string> row = {num(s.t), num(s.loss)};
        for (Eigen::Index a = 0; a < m; ++a) row.push_back(num(s.f[a]));
        row.push_back(num(s.lambda_top));
        t.add_row(std::move(row));
    }
    return t;
}

json snapshots_json(const TrajectoryRecord& r) {
    json j = json::array();
    for (const auto& s : r.steps)
        if (s.theta) j.push_back({{"t", s.t}, {"theta", matrix_to_json(*s.theta)}});
    return j;
}

int cmd_train(const Out& o) {
    const RunConfig& c = o.c;
    if (c.arch.kind != ArchKind::fc) fail(Errc::ConfigInvalid, "/arch/kind: train-compare supports fc only");
    const Dataset d = read_dataset(c.dataset, c.arch.input_dim);
    PhiloxEngine eng = RngPlan(*c.seed).stream(0x696e6974, 0);
    const Mlp net = init_network(c.arch, c.widths, c.param, eng);
    const double eta_crit = critical_learning_rate(empirical_ntk(net, d.X), d.X.rows());
    const double eta = c.eta > 0 ? c.eta : c.eta_factor * eta_crit;
    TrainOptions opts;
    opts.record_every = c.record_every;
    opts.record_ntk = c.record_ntk;
    const CompareResult r = train_compare(net, d, eta, c.steps, opts);
    o.csv("gd_trajectory.csv", trajectory_csv(r.gd, d.X.rows()));
    o.csv("lin_trajectory.csv", trajectory_csv(r.lin, d.X.rows()));
    json s = {{"eta", eta},
              {"eta_crit", eta_crit},
              {"sup_f_diff", r.sup_f_diff},
              {"sup_ntk_change", r.sup_ntk_change},
              {"final_loss", r.final_loss},
              {"final_loss_lin", r.final_loss_lin},
              {"diverged", r.gd.diverged || r.lin.diverged}};
    o.js("summary.json", s);
    if (c.record_ntk) o.js("ntk_snapshots.json", {{"gd", snapshots_json(r.gd)}, {"lin", snapshots_json(r.lin)}});
    o.log << "sup|f - f_lin| = " << r.sup_f_diff << ", sup|T_t - T_0|_F = " << r.sup_ntk_change << "\n";
    return kExitOk;
}

int cmd_finite_width(const Out& o) {
    const RunConfig& c = o.c;
    const Vector x = c.inputs.row(0).transpose();
    const auto ks = kappa4_recursion(c.arch, c.widths, x);
    CsvTable t{{"layer", "K_diag", "kappa4", "ratio"}, {}};
    for (const auto& k : ks) t.add_row({std::to_string(k.layer), num(k.K), num(k.kappa4), num(k.ratio())});
    o.csv("kappa4.csv", t);
    return kExitOk;
}

int cmd_catapult(const Out& o) {
    const RunConfig& c = o.c;
    CsvTable t{{"eta", "t", "f", "lambda", "loss"}, {}};
    CsvTable regimes{{"eta", "regime", "diverged", "final_lambda"}, {}};
    for (double eta : c.etas) {
        const auto tr = catapult_map(c.f0, c.lambda0, c.catapult_n, eta, c.catapult_steps);
        for (std::size_t s = 0; s < tr.f.size(); ++s)
            t.add_row({num(eta), std::to_string(s), num(tr.f[s]), num(tr.lambda[s]), num(tr.loss[s])});
        regimes.add_row({num(eta), to_string(catapult_regime(eta, c.lambda0)), tr.diverged ? "1" : "0",
                         num(tr.lambda.back())});
    }
    o.csv("catapult.csv", t);
    o.csv("regimes.csv", regimes);
    if (c.epsilon > 0) {
        CsvTable te{{"eta", "steps", "flag"}, {}};
        for (const auto& r : t_epsilon_scan(c.lambda0, c.catapult_n, c.epsilon, c.etas, c.f0, c.max_steps))
            te.add_row({num(r.eta), std::to_string(r.steps), r.flag});
        o.csv("t_epsilon.csv", te);
    }
    return kExitOk;
}

int cmd_validate(const Out& o) {
    ValidationOptions vo;
    vo.seed = *o.c.seed;
    CsvTable t{{"id", "slug", "pass"}, {}}; // timings stay out: the table is deterministic
    bool ok = true;
    for (int id : suite_ids(o.c.suite)) {
        const CriterionResult r = run_criterion(id, vo);
        o.log << summary_line(r) << "\n";
        for (const auto& d : r.details) o.log << "       " << d << "\n";
        o.log.flush();
        ok = ok && r.pass;
        t.add_row({std::to_string(r.id), r.slug, r.pass ? "1" : "0"});
    }
    o.csv("validate.csv", t);
    return ok ? kExitOk : kExitFailure;
}

} // namespace

int run_command(const RunConfig& config, std::ostream& log) {
    check_config(config);
    if (config.workers > 0) omp_set_num_threads(config.workers);
    const Out o{config, log};
    fs::create_directories(config.out);
    o.js("resolved_config.json", config.to_json());
    const std::string& cmd = config.command;
    try {
        if (cmd == "kernel") return cmd_kernel(o);
        if (cmd == "ntk") return cmd_ntk(o);
        if (cmd == "phase-diagram") return cmd_phase(o);
        if (cmd == "gp-predict") return cmd_gp(o);
        if (cmd == "train-compare") return cmd_train(o);
        if (cmd == "finite-width") return cmd_finite_width(o);
        if (cmd == "catapult") return cmd_catapult(o);
        if (cmd == "validate") return cmd_validate(o);
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigInvalid) throw;
        throw Error(e.code(), cmd + ": " + e.what());
    }
    fail(Errc::ConfigInvalid, "/command: unknown command '" + cmd + "'");
}

} // namespace widthlab

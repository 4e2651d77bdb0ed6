#include "widthlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "widthlab/errors.hpp"
#include "widthlab/io.hpp"
#include "widthlab/validation.hpp"

namespace widthlab {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
    fail(Errc::ConfigInvalid, (path.empty() ? std::string("/") : path) + ": " + msg);
}

// Typed accessors that report the schema path of the offending field.
struct Node {
    const json& j;
    std::string path;

    Node at(const std::string& key) const { return {j.at(key), path + "/" + key}; }
    bool has(const std::string& key) const { return j.contains(key); }

    void object(const std::set<std::string>& allowed) const {
        if (!j.is_object()) invalid(path, "expected an object");
        for (const auto& [k, v] : j.items())
            if (!allowed.count(k)) invalid(path + "/" + k, "unknown field");
    }
    double number() const {
        if (!j.is_number()) invalid(path, "expected a number");
        return j.get<double>();
    }
    long long integer(long long lo) const {
        if (!j.is_number_integer()) invalid(path, "expected an integer");
        const long long v = j.get<long long>();
        if (v < lo) invalid(path, "must be >= " + std::to_string(lo));
        return v;
    }
    std::string string(const std::vector<std::string>& choices = {}) const {
        if (!j.is_string()) invalid(path, "expected a string");
        auto s = j.get<std::string>();
        if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end())
            invalid(path, "unexpected value '" + s + "'");
        return s;
    }
    bool boolean() const {
        if (!j.is_boolean()) invalid(path, "expected a boolean");
        return j.get<bool>();
    }
    std::vector<double> numbers() const {
        if (!j.is_array()) invalid(path, "expected an array of numbers");
        std::vector<double> v;
        for (std::size_t i = 0; i < j.size(); ++i) v.push_back(Node{j[i], path + "/" + std::to_string(i)}.number());
        return v;
    }
    Matrix matrix() const {
        if (!j.is_array() || j.empty()) invalid(path, "expected a nonempty array of rows");
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(Node{j[i], path + "/" + std::to_string(i)}.numbers());
        const std::size_t c = rows[0].size();
        if (c == 0) invalid(path + "/0", "rows must be nonempty");
        Matrix M(rows.size(), c);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != c) invalid(path + "/" + std::to_string(i), "ragged row");
            for (std::size_t k = 0; k < c; ++k) M(i, k) = rows[i][k];
        }
        return M;
    }
};

void parse_arch(const Node& n, RunConfig& c) {
    n.object({"kind", "depth", "input_dim", "sigma_b2", "sigma_w2", "phi", "gamma2", "conv", "quadrature_order"});
    ArchSpec& a = c.arch;
    if (n.has("kind")) {
        const auto k = n.at("kind").string({"fc", "residual", "conv1d"});
        a.kind = k == "fc" ? ArchKind::fc : k == "residual" ? ArchKind::residual : ArchKind::conv1d;
    }
    if (n.has("depth")) a.depth = int(n.at("depth").integer(1));
    if (n.has("input_dim")) a.input_dim = int(n.at("input_dim").integer(1));
    if (n.has("sigma_b2")) {
        a.sigma_b2 = n.at("sigma_b2").number();
        if (a.sigma_b2 < 0) invalid(n.path + "/sigma_b2", "must be >= 0");
    }
    if (n.has("sigma_w2")) {
        a.sigma_w2 = n.at("sigma_w2").number();
        if (a.sigma_w2 <= 0) invalid(n.path + "/sigma_w2", "must be > 0");
    }
    if (n.has("phi")) a.phi = Nonlinearity::from_name(n.at("phi").string({"relu", "tanh", "linear", "erf"}));
    if (n.has("gamma2")) a.gamma2 = n.at("gamma2").numbers();
    if (n.has("quadrature_order")) a.quad.order = int(n.at("quadrature_order").integer(2));
    if (n.has("conv")) {
        const Node cv = n.at("conv");
        cv.object({"half_width", "spatial_dim", "weights"});
        if (cv.has("half_width")) a.conv.half_width = int(cv.at("half_width").integer(0));
        if (cv.has("spatial_dim")) a.conv.spatial_dim = int(cv.at("spatial_dim").integer(1));
        if (cv.has("weights")) a.conv.weights = cv.at("weights").numbers();
        else a.conv.weights.assign(2 * a.conv.half_width + 1, 1.0 / (2 * a.conv.half_width + 1));
    }
    try {
        a.validate();
    } catch (const Error& e) {
        invalid(n.path, e.what());
    }
}

json arch_json(const ArchSpec& a) {
    json j = {{"kind", a.kind == ArchKind::fc ? "fc" : a.kind == ArchKind::residual ? "residual" : "conv1d"},
              {"depth", a.depth},
              {"input_dim", a.input_dim},
              {"sigma_b2", a.sigma_b2},
              {"sigma_w2", a.sigma_w2},
              {"phi", a.phi.name},
              {"quadrature_order", a.quad.order}};
    if (a.kind == ArchKind::residual) j["gamma2"] = a.gamma2;
    if (a.kind == ArchKind::conv1d)
        j["conv"] = {{"half_width", a.conv.half_width}, {"spatial_dim", a.conv.spatial_dim}, {"weights", a.conv.weights}};
    return j;
}

} // namespace

RunConfig parse_config(const json& j) {
    const Node root{j, ""};
    root.object({"command", "seed", "workers", "out", "arch", "widths", "parameterization", "dataset", "query",
                 "inputs", "conv_inputs", "readout_h", "grid", "train", "catapult", "gp", "suite", "tolerances",
                 "$schema"});
    RunConfig c;
    if (root.has("command")) c.command = root.at("command").string(kCommands);
    if (root.has("seed")) c.seed = std::uint64_t(root.at("seed").integer(0));
    if (root.has("workers")) c.workers = int(root.at("workers").integer(0));
    if (root.has("out")) c.out = root.at("out").string();
    if (root.has("arch")) parse_arch(root.at("arch"), c);
    c.widths.input_dim = c.arch.input_dim;
    if (root.has("widths")) {
        const Node w = root.at("widths");
        if (!w.j.is_array()) invalid(w.path, "expected an array of integers");
        for (std::size_t i = 0; i < w.j.size(); ++i)
            c.widths.widths.push_back(int(Node{w.j[i], w.path + "/" + std::to_string(i)}.integer(1)));
        if (int(c.widths.widths.size()) != c.arch.depth)
            invalid(w.path, "needs one width per hidden layer (arch.depth = " + std::to_string(c.arch.depth) + ")");
    } else {
        c.widths.widths.assign(c.arch.depth, 512);
    }
    if (root.has("parameterization"))
        c.param = root.at("parameterization").string({"ntk", "standard"}) == "ntk" ? Parameterization::ntk
                                                                                   : Parameterization::standard;
    if (root.has("dataset")) c.dataset = root.at("dataset").string();
    if (root.has("query")) c.query = root.at("query").string();
    if (root.has("inputs")) {
        c.inputs = root.at("inputs").matrix();
        if (c.inputs.cols() != c.arch.input_dim) invalid("/inputs", "rows need arch.input_dim entries");
    }
    if (root.has("conv_inputs")) {
        const Node ci = root.at("conv_inputs");
        if (!ci.j.is_array() || ci.j.empty()) invalid(ci.path, "expected a nonempty array of matrices");
        for (std::size_t i = 0; i < ci.j.size(); ++i)
            c.conv_inputs.push_back(Node{ci.j[i], ci.path + "/" + std::to_string(i)}.matrix());
    }
    if (root.has("readout_h")) {
        const auto h = root.at("readout_h").numbers();
        c.readout_h = Eigen::Map<const Vector>(h.data(), Eigen::Index(h.size()));
    }
    if (root.has("grid")) {
        const Node g = root.at("grid");
        g.object({"sigma_b2", "sigma_w2"});
        if (g.has("sigma_b2")) c.grid_b = g.at("sigma_b2").numbers();
        if (g.has("sigma_w2")) c.grid_w = g.at("sigma_w2").numbers();
    }
    if (root.has("train")) {
        const Node t = root.at("train");
        t.object({"eta", "eta_factor", "steps", "record_every", "record_ntk"});
        if (t.has("eta")) c.eta = t.at("eta").number();
        if (t.has("eta_factor")) c.eta_factor = t.at("eta_factor").number();
        if (t.has("steps")) c.steps = t.at("steps").integer(0);
        if (t.has("record_every")) c.record_every = t.at("record_every").integer(1);
        if (t.has("record_ntk")) c.record_ntk = t.at("record_ntk").boolean();
        if (c.eta < 0) invalid("/train/eta", "must be >= 0");
        if (c.eta_factor <= 0) invalid("/train/eta_factor", "must be > 0");
    }
    if (root.has("catapult")) {
        const Node k = root.at("catapult");
        k.object({"lambda0", "n", "f0", "etas", "steps", "epsilon", "max_steps"});
        if (k.has("lambda0")) c.lambda0 = k.at("lambda0").number();
        if (k.has("n")) c.catapult_n = k.at("n").number();
        if (k.has("f0")) c.f0 = k.at("f0").number();
        if (k.has("etas")) c.etas = k.at("etas").numbers();
        if (k.has("steps")) c.catapult_steps = k.at("steps").integer(0);
        if (k.has("epsilon")) c.epsilon = k.at("epsilon").number();
        if (k.has("max_steps")) c.max_steps = k.at("max_steps").integer(1);
        if (c.lambda0 <= 0) invalid("/catapult/lambda0", "must be > 0");
        if (c.catapult_n < 1) invalid("/catapult/n", "must be >= 1");
        if (c.epsilon < 0) invalid("/catapult/epsilon", "must be >= 0");
    }
    if (root.has("gp")) {
        const Node g = root.at("gp");
        g.object({"noise", "jitter", "kernel"});
        if (g.has("noise")) c.noise = g.at("noise").number();
        if (g.has("jitter")) c.jitter = g.at("jitter").number();
        if (g.has("kernel")) c.gp_kernel = g.at("kernel").string({"nngp", "ntk-gd"});
        if (c.noise < 0) invalid("/gp/noise", "must be >= 0");
        if (c.jitter < 0) invalid("/gp/jitter", "must be >= 0");
    }
    if (root.has("suite")) c.suite = root.at("suite").string();
    if (root.has("tolerances")) {
        const Node t = root.at("tolerances");
        if (!t.j.is_object()) invalid(t.path, "expected an object");
        for (const auto& [k, v] : t.j.items()) Node{v, t.path + "/" + k}.number();
        c.tolerances = t.j;
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(Errc::ConfigInvalid, "cannot read config " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        fail(Errc::ConfigInvalid, path.string() + ": " + e.what());
    }
    return parse_config(j);
}

void check_config(const RunConfig& c) {
    if (c.command.empty()) invalid("/command", "missing");
    const auto need_file = [](const std::string& p, const char* field) {
        if (p.empty()) invalid(std::string("/") + field, "required for this command");
        if (!std::filesystem::is_regular_file(p)) invalid(std::string("/") + field, "file not found: " + p);
    };
    const std::string& cmd = c.command;
    if (cmd == "gp-predict") {
        need_file(c.dataset, "dataset");
        need_file(c.query, "query");
    }
    if (cmd == "train-compare") need_file(c.dataset, "dataset");
    if (cmd == "phase-diagram" && (c.grid_b.empty() || c.grid_w.empty()))
        invalid("/grid", "sigma_b2 and sigma_w2 grids must be nonempty");
    if (cmd == "catapult" && c.etas.empty()) invalid("/catapult/etas", "must be nonempty");
    if ((cmd == "train-compare" || cmd == "validate") && !c.seed) invalid("/seed", "required for a stochastic command");
    if (cmd == "kernel" || cmd == "ntk") {
        if (c.arch.kind == ArchKind::conv1d) {
            if (cmd == "ntk") invalid("/arch/kind", "ntk supports fc architectures only");
            if (c.conv_inputs.empty()) invalid("/conv_inputs", "required for conv1d");
        } else if (c.inputs.size() == 0 && c.dataset.empty()) {
            invalid("/inputs", "inputs or dataset required");
        }
        if (!c.dataset.empty()) need_file(c.dataset, "dataset");
        if (cmd == "ntk" && c.arch.kind != ArchKind::fc) invalid("/arch/kind", "ntk supports fc architectures only");
    }
    if (cmd == "finite-width") {
        if (c.arch.kind != ArchKind::fc) invalid("/arch/kind", "finite-width supports fc architectures only");
        if (c.inputs.size() == 0) invalid("/inputs", "one input row required");
    }
    if (cmd == "validate") suite_ids(c.suite);
}

json RunConfig::to_json() const {
    json j = {{"command", command},
              {"workers", workers},
              {"out", out},
              {"arch", arch_json(arch)},
              {"widths", widths.widths},
              {"parameterization", param == Parameterization::ntk ? "ntk" : "standard"}};
    if (seed) j["seed"] = *seed;
    if (!dataset.empty()) j["dataset"] = dataset;
    if (!query.empty()) j["query"] = query;
    if (inputs.size()) j["inputs"] = matrix_to_json(inputs);
    if (!conv_inputs.empty()) {
        j["conv_inputs"] = json::array();
        for (const auto& m : conv_inputs) j["conv_inputs"].push_back(matrix_to_json(m));
    }
    if (readout_h.size()) j["readout_h"] = std::vector<double>(readout_h.data(), readout_h.data() + readout_h.size());
    if (!grid_b.empty() || !grid_w.empty()) j["grid"] = {{"sigma_b2", grid_b}, {"sigma_w2", grid_w}};
    j["train"] = {{"eta", eta}, {"eta_factor", eta_factor}, {"steps", steps}, {"record_every", record_every},
                  {"record_ntk", record_ntk}};
    j["catapult"] = {{"lambda0", lambda0}, {"n", catapult_n},         {"f0", f0},          {"etas", etas},
                     {"steps", catapult_steps}, {"epsilon", epsilon}, {"max_steps", max_steps}};
    j["gp"] = {{"noise", noise}, {"jitter", jitter}, {"kernel", gp_kernel}};
    j["suite"] = suite;
    j["tolerances"] = tolerances;
    return j;
}

} // namespace widthlab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "widthlab/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir() {
    static const fs::path d = [] {
        const fs::path p = fs::temp_directory_path() / "widthlab_test_cli";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

void put(const fs::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = work_dir() / (name + ".json");
    put(p, j.dump(2));
    return p;
}

// Exit status of `widthlab <args>` with output directory out.
int run(const std::string& args, const fs::path& out) {
    const char* bin = std::getenv("WIDTHLAB_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string(bin) + " " + args + " --out " + out.string() + " > " +
                            (work_dir() / "last.log").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

} // namespace

TEST_CASE("phase diagram output") {
    const auto cfg = write_config("phase", {{"arch", {{"phi", "tanh"}}},
                                            {"grid", {{"sigma_b2", {0.0, 0.05, 0.2}}, {"sigma_w2", {0.5, 1.0, 2.5}}}},
                                            {"seed", 3}});
    const fs::path a = work_dir() / "phase_a", b = work_dir() / "phase_b";
    REQUIRE(run("phase-diagram --config " + cfg.string(), a) == 0);
    REQUIRE(run("phase-diagram --config " + cfg.string() + " --workers 1", b) == 0);
    const std::string text = slurp(a / "phase_diagram.csv");
    const auto ls = lines(text);
    REQUIRE(ls.size() == 11);
    CHECK(ls[0] == "# widthlab 0.1.0 seed=3");
    CHECK(ls[1] == "sigma_b2,sigma_w2,q_star,chi1,xi_q,xi_c,phase,status");
    CHECK(text == slurp(b / "phase_diagram.csv"));
    CHECK(fs::exists(a / "resolved_config.json"));
    const widthlab::CsvData d = [&] {
        // phase and status columns are text; check the numeric prefix only.
        std::string num = ls[0] + "\nsigma_b2,sigma_w2,q_star,chi1\n";
        for (std::size_t i = 2; i < ls.size(); ++i) {
            std::stringstream ss(ls[i]);
            std::string f[4];
            for (auto& x : f) std::getline(ss, x, ',');
            num += f[0] + "," + f[1] + "," + f[2] + "," + f[3] + "\n";
        }
        put(work_dir() / "phase_num.csv", num);
        return widthlab::read_csv(work_dir() / "phase_num.csv");
    }();
    CHECK(d.values.rows() == 9);
    CHECK(text.find(",critical,") != std::string::npos);
    CHECK(text.find(",ordered,") != std::string::npos);
    CHECK(text.find(",chaotic,") != std::string::npos);
}

TEST_CASE("configuration errors exit with status 2") {
    const fs::path out = work_dir() / "bad";
    CHECK(run("gp-predict --config " + write_config("missing", {{"dataset", "/nonexistent.csv"},
                                                                {"query", "/nonexistent.csv"}}).string(),
              out) == 2);
    CHECK(run("kernel --config " + write_config("unknown", {{"colour", "blue"}}).string(), out) == 2);
    CHECK(run("frobnicate", out) == 2);
    CHECK(run("kernel --config /does/not/exist.json", out) == 2);
    CHECK(run("validate --suite nope --seed 1", out) == 2);
    CHECK(run("train-compare", out) == 2);
}

TEST_CASE("kernel, ntk and finite-width outputs") {
    const json base = {{"arch", {{"depth", 2}, {"input_dim", 2}, {"sigma_b2", 0.1}, {"sigma_w2", 2.0}}},
                       {"widths", {64, 64}},
                       {"inputs", {{1.0, 0.0}, {0.6, 0.8}}}};
    const fs::path k = work_dir() / "kernel", n = work_dir() / "ntk", f = work_dir() / "fw";
    REQUIRE(run("kernel --config " + write_config("kernel", base).string(), k) == 0);
    const auto kc = widthlab::read_csv(k / "kernel.csv");
    CHECK(kc.header == std::vector<std::string>{"layer", "i", "j", "value"});
    CHECK(kc.values.rows() == 3 * 4);
    const json kj = json::parse(slurp(k / "kernel.json"));
    CHECK(!kj.empty());

    REQUIRE(run("ntk --config " + write_config("ntk", base).string(), n) == 0);
    CHECK(fs::exists(n / "ntk.csv"));
    CHECK(fs::exists(n / "ntk.json"));

    REQUIRE(run("finite-width --config " + write_config("fw", base).string(), f) == 0);
    const auto fc = widthlab::read_csv(f / "kappa4.csv");
    CHECK(fc.header == std::vector<std::string>{"layer", "K_diag", "kappa4", "ratio"});
    CHECK(fc.values.rows() == 3);
    CHECK(fc.values(0, 2) == 0.0);
}

TEST_CASE("gp-predict and train-compare") {
    put(work_dir() / "train.csv", "x_0,y\n-1,0.5\n0,0\n1,-0.5\n");
    put(work_dir() / "query.csv", "x_0\n-1\n0.5\n");
    const json base = {{"arch", {{"depth", 1}, {"input_dim", 1}, {"sigma_b2", 0.1}, {"sigma_w2", 2.0}}},
                       {"widths", {128}},
                       {"dataset", (work_dir() / "train.csv").string()},
                       {"query", (work_dir() / "query.csv").string()},
                       {"train", {{"steps", 200}, {"record_ntk", true}}},
                       {"seed", 11}};
    const fs::path g = work_dir() / "gp";
    REQUIRE(run("gp-predict --config " + write_config("gp", base).string(), g) == 0);
    const auto p = widthlab::read_csv(g / "predictions.csv");
    REQUIRE(p.values.rows() == 2);
    CHECK(std::abs(p.values(0, 1) - 0.5) < 1e-8); // training point is interpolated
    CHECK(std::abs(p.values(0, 2)) < 1e-8);
    CHECK(p.values(1, 2) > 0.0);

    const fs::path t1 = work_dir() / "train1", t2 = work_dir() / "train2";
    REQUIRE(run("train-compare --config " + write_config("train", base).string(), t1) == 0);
    REQUIRE(run("train-compare --config " + write_config("train", base).string() + " --workers 1", t2) == 0);
    for (const char* name : {"gd_trajectory.csv", "lin_trajectory.csv", "summary.json", "ntk_snapshots.json"}) {
        CAPTURE(name);
        CHECK(fs::exists(t1 / name));
        CHECK(slurp(t1 / name) == slurp(t2 / name));
    }
    const auto gd = widthlab::read_csv(t1 / "gd_trajectory.csv");
    CHECK(gd.header == std::vector<std::string>{"t", "loss", "f_0", "f_1", "f_2", "lambda_top"});
    CHECK(gd.values(gd.values.rows() - 1, 0) == 200);
    const json s = json::parse(slurp(t1 / "summary.json"));
    CHECK(s["diverged"] == false);
    CHECK(s["final_loss"].get<double>() < gd.values(0, 1));

    REQUIRE(run("train-compare --config " + write_config("train", base).string() + " --seed 12", t2) == 0);
    CHECK(slurp(t1 / "gd_trajectory.csv") != slurp(t2 / "gd_trajectory.csv"));
}

TEST_CASE("catapult tables") {
    const json cfg = {{"catapult", {{"lambda0", 2.0}, {"etas", {0.5, 1.5, 2.5}}, {"steps", 300}, {"epsilon", 1e-6}}}};
    const fs::path c = work_dir() / "cat";
    REQUIRE(run("catapult --config " + write_config("cat", cfg).string(), c) == 0);
    const std::string r = slurp(c / "regimes.csv");
    CHECK(r.find("ntk") != std::string::npos);
    CHECK(r.find("catapult") != std::string::npos);
    CHECK(r.find("divergent") != std::string::npos);
    CHECK(fs::exists(c / "catapult.csv"));
    CHECK(fs::exists(c / "t_epsilon.csv"));
}

TEST_CASE("validate runs a single criterion") {
    const fs::path v = work_dir() / "validate";
    REQUIRE(run("validate --suite catapult --seed 5", v) == 0);
    const std::string log = slurp(work_dir() / "last.log");
    CHECK(log.find("[PASS]") != std::string::npos);
    const auto t = lines(slurp(v / "validate.csv"));
    REQUIRE(t.size() == 3);
    CHECK(t[1] == "id,slug,pass");
}

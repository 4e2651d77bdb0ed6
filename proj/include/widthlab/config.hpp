#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "widthlab/finite_width.hpp"
#include "widthlab/kernels.hpp"
#include "widthlab/mlp.hpp"

namespace widthlab {

inline const std::vector<std::string> kCommands = {"kernel",       "ntk",           "phase-diagram", "gp-predict",
                                                   "train-compare", "finite-width", "catapult",      "validate"};

struct RunConfig {
    std::string command;
    ArchSpec arch;
    WidthProfile widths;
    Parameterization param = Parameterization::ntk;
    std::string dataset; // CSV: x_0..x_{n0-1}, y
    std::string query;   // CSV: x_0..x_{n0-1}
    Matrix inputs;       // explicit inputs for kernel / ntk / finite-width (m x n0)
    std::vector<Matrix> conv_inputs; // conv1d: one n0 x D matrix per sample
    Vector readout_h;                // conv1d spatial aggregation weights (empty: vectorize)
    std::vector<double> grid_b, grid_w;
    std::optional<std::uint64_t> seed;
    int workers = 0; // 0: machine parallelism
    std::string out = "widthlab-out";
    std::string suite = "all";

    double eta = 0.0;        // train-compare: explicit step size, else eta_factor * eta_crit
    double eta_factor = 0.5;
    long long steps = 1000;
    long long record_every = 1;
    bool record_ntk = false;

    double lambda0 = 2.0, catapult_n = 1e6, f0 = 1.0;
    std::vector<double> etas;
    long long catapult_steps = 1000;
    double epsilon = 0.0; // > 0 adds the t_epsilon table
    long long max_steps = 1000000;

    double noise = 0.0, jitter = 0.0;
    std::string gp_kernel = "nngp"; // nngp | ntk-gd

    nlohmann::json tolerances = nlohmann::json::object();

    nlohmann::json to_json() const; // fully resolved, defaults filled in
};

// Validates against the published schema; ConfigInvalid names the offending path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Cross-field checks that depend on the command (files exist, grids nonempty, seed present).
void check_config(const RunConfig& c);

} // namespace widthlab

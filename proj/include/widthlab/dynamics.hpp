#pragma once

#include <optional>
#include <string>
#include <vector>

#include "widthlab/mlp.hpp"

namespace widthlab {

struct Dataset {
    Matrix X; // m x n0
    Vector y; // m
};

// Loss convention: L = (1/2m) sum_a (f(x_a) - y_a)^2, residual R = f - y.
double mse_loss(const Vector& f, const Vector& y);

struct TrajectoryStep {
    long long t = 0;
    double loss = 0.0;
    Vector f;                     // training-set outputs
    Vector f_probe;               // outputs at probe points (may be empty)
    double lambda_top = 0.0;      // top eigenvalue of the empirical NTK when recorded, else NaN
    double param_distance = 0.0;  // |theta_t - theta_0|
    std::optional<Matrix> theta;  // NTK snapshot
};

struct TrajectoryRecord {
    std::vector<TrajectoryStep> steps;
    bool diverged = false;
};

// Every step for t < 100 * record_every (at that stride), then t doubling, plus the last step.
std::vector<long long> record_schedule(long long steps, long long record_every = 1);

struct TrainOptions {
    long long record_every = 1;
    Matrix probe;            // optional extra inputs whose outputs are tracked
    bool record_ntk = false; // store Theta_t and lambda_top at recorded steps
};

// Step size at which the slowest and fastest NTK modes contract equally:
// 2 / (lambda_min + lambda_max) of Theta / m.
double critical_learning_rate(const Matrix& theta, long long m);

TrajectoryRecord train_gd(Mlp net, const Dataset& data, double eta, long long steps, const TrainOptions& opts = {});

// Gradient descent on the first-order Taylor model around net, run in function
// space with the frozen Theta_0.
TrajectoryRecord linearized_train(const Mlp& net, const Dataset& data, double eta, long long steps,
                                  const TrainOptions& opts = {});

struct CompareResult {
    double sup_f_diff = 0.0;     // sup_t max_a |f_t(x_a) - f^lin_t(x_a)| over train and probe points
    double sup_ntk_change = 0.0; // sup_t |Theta_t - Theta_0|_F
    double final_loss = 0.0;
    double final_loss_lin = 0.0;
    TrajectoryRecord gd, lin;
};

// Runs both trajectories in lockstep; the sups are taken over every step.
CompareResult train_compare(const Mlp& net, const Dataset& data, double eta, long long steps,
                            const TrainOptions& opts = {});

struct CatapultTrajectory {
    std::vector<double> f, lambda, loss; // index t = 0..steps (shorter if diverged)
    bool diverged = false;
};

// f <- f (1 - eta lambda + eta^2 f^2 / n), lambda <- lambda + (eta f^2 / n)(eta lambda - 4).
CatapultTrajectory catapult_map(double f0, double lambda0, double n, double eta, long long steps);

enum class CatapultRegime { ntk, catapult, divergent };
const char* to_string(CatapultRegime r);
CatapultRegime catapult_regime(double eta, double lambda0);

struct TEpsilonRow {
    double eta = 0.0;
    long long steps = -1; // first t with loss < epsilon, -1 if never
    std::string flag;     // "converged" | "step_limit" | "diverged"
};

std::vector<TEpsilonRow> t_epsilon_scan(double lambda0, double n, double epsilon, const std::vector<double>& etas,
                                        double f0 = 1.0, long long max_steps = 1000000);

struct UvStep {
    long long t = 0;
    Vector f, R;
    Matrix theta;
    double r_theta_r = 0.0;
    double lambda_top = 0.0;
    double alignment = 0.0; // |cos| between R_t and the top NTK eigenvector
    double loss = 0.0;
};

struct UvRecord {
    std::vector<UvStep> steps;
    bool diverged = false;
};

// GD on f(x) = v^T u x / sqrt(n); u is n x n0, v has n entries, X is m x n0.
UvRecord uv_model_train(Matrix u, Vector v, const Matrix& X, const Vector& y, double eta, long long steps);

} // namespace widthlab

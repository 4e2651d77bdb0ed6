#pragma once

#include <string>
#include <vector>

#include "widthlab/gauss.hpp"
#include "widthlab/kernels.hpp"

namespace widthlab {

struct CriticalityOptions {
    double tol = 1e-12;
    int max_iter = 10000;
    double damping = 0.5;
    double crit_band = 1e-3;
    GaussOptions quad;
};

enum class FixedPointStatus { converged, every_point_fixed, not_converged };
const char* to_string(FixedPointStatus s);

struct FixedPoint {
    double value = 0.0;
    FixedPointStatus status = FixedPointStatus::not_converged;
    int iterations = 0;
};

// q -> sigma_b^2 + sigma_w^2 E[phi(sqrt(q) s)^2]
double q_map(const Nonlinearity& phi, double q, double sigma_b2, double sigma_w2, const GaussOptions& quad = {});
// c -> (sigma_b^2 + sigma_w^2 F(q, c q, q)) / q
double c_map(const Nonlinearity& phi, double c, double q, double sigma_b2, double sigma_w2,
             const GaussOptions& quad = {});

// Damped iteration from q0 = sigma_b^2 + sigma_w^2, Newton polish when the
// damped phase stalls (algebraic approach to q* = 0).
FixedPoint find_qstar(const Nonlinearity& phi, double sigma_b2, double sigma_w2, const CriticalityOptions& opts = {});

double chi1(const Nonlinearity& phi, double q, double sigma_w2, const GaussOptions& quad = {});
// Derivative of the variance map: chi1 + sigma_w^2 E[phi phi''].
double chi_parallel(const Nonlinearity& phi, double q, double sigma_w2, const GaussOptions& quad = {});

// Stable correlation fixed point at variance q (1 when chi1 <= 1 + crit_band).
FixedPoint find_cstar(const Nonlinearity& phi, double q, double sigma_w2, double sigma_b2,
                      const CriticalityOptions& opts = {});

struct DepthScales {
    double xi_q = 0.0; // +inf inside the critical band, NaN if the fixed point is unstable
    double xi_c = 0.0;
};

DepthScales depth_scales(const Nonlinearity& phi, double q, double c, double sigma_w2,
                         const CriticalityOptions& opts = {});

enum class Phase { ordered, chaotic, critical, no_fixed_point };
const char* to_string(Phase p);

struct PhasePoint {
    double sigma_b2 = 0.0, sigma_w2 = 0.0;
    double q_star = 0.0, c_star = 1.0;
    double chi1 = 0.0;
    double xi_q = 0.0, xi_c = 0.0;
    Phase phase = Phase::no_fixed_point;
    std::string status = "ok";
};

PhasePoint phase_classify(const Nonlinearity& phi, double sigma_b2, double sigma_w2,
                          const CriticalityOptions& opts = {});

// Row-major over (grid_b, grid_w). Per-point failures land in PhasePoint::status.
std::vector<PhasePoint> phase_diagram(const Nonlinearity& phi, const std::vector<double>& grid_b,
                                      const std::vector<double>& grid_w, const CriticalityOptions& opts = {},
                                      Exec exec = Exec::parallel);

} // namespace widthlab

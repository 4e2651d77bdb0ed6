#pragma once

#include "widthlab/mlp.hpp"

namespace widthlab {

struct OsResult {
    Tensor3 O3;
    Tensor4 O4;              // empty (m = 0) when s_max = 3
    double richardson = 0.0; // relative change of O3 when the step is halved
};

// O3(a, b, c): centered difference of empirical_ntk(a, b) along grad f(x_c).
// O4(a, b, c, d): centered difference of O3(a, b, c) along grad f(x_d).
// Step h = fd_step (1 + |theta|) / |direction|. StepTooSmall when halving h
// moves O3 by more than 1%.
OsResult measure_Os(const Mlp& net, const Matrix& X, int s_max = 4, double fd_step = 1e-4);

} // namespace widthlab

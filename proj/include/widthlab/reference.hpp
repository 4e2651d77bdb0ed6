#pragma once

// Serial reference implementations. Same mathematics as the OpenMP paths, plain
// loops; used by the tests and the benchmark to pin the parallel results.

#include <vector>

#include "widthlab/kernels.hpp"

namespace widthlab::reference {

std::vector<KernelMatrix> nngp_fc(const ArchSpec& arch, const Matrix& X);
NtkResult ntk_fc(const ArchSpec& arch, const Matrix& X);
std::vector<ConvKernel> nngp_conv1d(const ArchSpec& arch, const std::vector<Matrix>& X);

} // namespace widthlab::reference

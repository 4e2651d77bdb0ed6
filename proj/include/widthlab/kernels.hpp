#pragma once

#include <vector>

#include "widthlab/gauss.hpp"
#include "widthlab/types.hpp"

namespace widthlab {

enum class ArchKind { fc, residual, conv1d };

struct ConvGeometry {
    int half_width = 0;          // filter covers beta in [-k, k]
    int spatial_dim = 1;         // D, circular
    std::vector<double> weights; // v_beta, length 2k+1, nonnegative, sums to 1
};

struct ArchSpec {
    ArchKind kind = ArchKind::fc;
    int depth = 1; // hidden layers L; kernels are produced for layers 0..L
    int input_dim = 1;
    double sigma_b2 = 0.0;
    double sigma_w2 = 1.0;
    Nonlinearity phi = Nonlinearity::relu();
    std::vector<double> gamma2; // residual only: gamma_l^2 for l = 1..L
    ConvGeometry conv;          // conv1d only
    GaussOptions quad;

    void validate() const;
};

enum class Exec { parallel, serial };

struct KernelMatrix {
    int layer = 0;
    Matrix values;
    std::vector<int> sample_ids;
};

struct NtkResult {
    std::vector<KernelMatrix> nngp;
    std::vector<KernelMatrix> ntk;
};

// Conv kernels over (sample, site) pairs: row s*D + a, column s'*D + a'.
struct ConvKernel {
    int layer = 0;
    int samples = 0;
    int spatial = 0;
    Matrix values;
    double at(int s, int a, int s2, int a2) const { return values(s * spatial + a, s2 * spatial + a2); }
};

// sigma_b^2 + sigma_w^2 x.x'/n0 for the rows of X (m x n0).
Matrix input_kernel(const ArchSpec& arch, const Matrix& X);

// Entrywise F(K_aa, K_ab, K_bb) and Ftilde(...).
Matrix kernel_map(const Matrix& K, const Nonlinearity& phi, const GaussOptions& opts, Exec exec = Exec::parallel);
Matrix kernel_map_prime(const Matrix& K, const Nonlinearity& phi, const GaussOptions& opts,
                        Exec exec = Exec::parallel);

// Symmetrize and clip negative eigenvalues; NotPSD below -1e-9 * trace.
Matrix psd_repair(const Matrix& K, int layer);

std::vector<KernelMatrix> nngp_fc(const ArchSpec& arch, const Matrix& X, Exec exec = Exec::parallel);
NtkResult ntk_fc(const ArchSpec& arch, const Matrix& X, Exec exec = Exec::parallel);
std::vector<KernelMatrix> nngp_residual(const ArchSpec& arch, const Matrix& X, Exec exec = Exec::parallel);

// Inputs: one n0 x D matrix per sample.
std::vector<ConvKernel> nngp_conv1d(const ArchSpec& arch, const std::vector<Matrix>& X, Exec exec = Exec::parallel);
Matrix readout_vectorize(const ArchSpec& arch, const ConvKernel& last, Exec exec = Exec::parallel);
Matrix readout_spatial_aggregation(const ArchSpec& arch, const ConvKernel& last, const Vector& h,
                                   Exec exec = Exec::parallel);

} // namespace widthlab

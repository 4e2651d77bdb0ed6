#pragma once

#include <cmath>
#include <vector>

#include "widthlab/mlp.hpp"
#include "widthlab/stats.hpp"

namespace widthlab {

struct EstimatorResult {
    Matrix estimate;
    Matrix std_error;
    long long n_samples = 0;
};

// Samples per RNG block. Block b always uses substream b, so estimates do not
// depend on the number of workers and prefixes of longer runs are shared.
inline constexpr long long kSamplesPerBlock = 512;

// Exact finite-width sampler that skips the weights: conditioned on layer l-1,
// the preactivations of layer l are iid across neurons with covariance
// sigma_b2 + sigma_w2 A^T A / fan_in over the m inputs.
class LayerwiseSampler {
public:
    LayerwiseSampler(NetworkSpec spec, const Matrix& X);

    // visit(l, Z) for l = 0..L with Z of shape fan_out(l) x m.
    template <class Visit>
    void draw(PhiloxEngine& eng, Visit&& visit) {
        Matrix F = base_factor_;
        for (int l = 0; l < spec_.num_layers(); ++l) {
            const int n = spec_.fan_out(l);
            xi_.resize(n, m_);
            for (Eigen::Index j = 0; j < m_; ++j)
                for (int i = 0; i < n; ++i) xi_(i, j) = normal_(eng);
            z_.noalias() = xi_ * F.transpose();
            visit(l, static_cast<const Matrix&>(z_));
            if (l + 1 < spec_.num_layers()) {
                a_ = z_.unaryExpr([this](double v) { return spec_.phi.value(v); });
                Matrix C = (a_.transpose() * a_) * (spec_.sigma_w2 / double(n));
                C.array() += spec_.sigma_b2;
                F = factor(C);
            }
        }
        normal_.reset();
    }

    static Matrix factor(const Matrix& C);

private:
    NetworkSpec spec_;
    Eigen::Index m_;
    Matrix base_factor_;
    Matrix xi_, z_, a_;
    NormalSampler normal_;
};

enum class NngpSampler { layerwise, explicit_weights };

// E[f(x) f(x')] over initializations of a scalar-output network.
EstimatorResult empirical_nngp(const ArchSpec& arch, const WidthProfile& widths, const Matrix& X,
                               long long n_samples, const RngPlan& plan,
                               NngpSampler sampler = NngpSampler::layerwise,
                               Parameterization param = Parameterization::ntk, Exec exec = Exec::parallel);

// Per-layer neuron moments at a single input; layer 1 is the first preactivation.
struct LayerMoments {
    int layer = 1;
    int width = 1;
    MeanSe m2;            // E[z^2]
    MeanSe m4;            // E[z^4]
    MeanSe cross;         // E[z_i^2 z_j^2], i != j
    MeanSe kappa_single;  // (E z^4 - 3 (E z^2)^2) / 3
    MeanSe kappa_cross;   // E[z_i^2 z_j^2] - (E z^2)^2
};

std::vector<LayerMoments> empirical_layer_moments(const ArchSpec& arch, const WidthProfile& widths, const Vector& x,
                                                  long long n_samples, const RngPlan& plan, int output_width = 0,
                                                  Exec exec = Exec::parallel);

// kappa4 per layer from both estimators (output layer width defaults to the
// last hidden width).
std::vector<LayerMoments> empirical_kappa4(const ArchSpec& arch, const WidthProfile& widths, const Vector& x,
                                           long long n_samples, const RngPlan& plan, int output_width = 0,
                                           Exec exec = Exec::parallel);

struct JacobianMoments {
    MeanSe m2, m4;
    long long n_samples = 0;
    std::vector<double> samples; // filled when requested
};

// Moments of d f_q / d x_p for a bias-free network with explicit weights.
JacobianMoments empirical_jacobian_moments(const ArchSpec& arch, const WidthProfile& widths, const Vector& x,
                                           long long n_samples, const RngPlan& plan, int output_index = 0,
                                           int input_index = 0, bool keep_samples = false,
                                           Exec exec = Exec::parallel);

// W^{L+1} D^L W^L ... D^1 W^1 x with W^l ~ N(0, 2/n_{l-1}) and iid Bernoulli(1/2) masks.
Vector sample_dropout_linear(const WidthProfile& widths, const Vector& x, PhiloxEngine& rng, int output_dim = 1,
                             bool no_masks = false); // no_masks: plain deep linear net

} // namespace widthlab

#pragma once

#include <vector>

#include "widthlab/finite_width.hpp"
#include "widthlab/gauss.hpp"
#include "widthlab/kernels.hpp"
#include "widthlab/rng.hpp"
#include "widthlab/types.hpp"

namespace widthlab {

enum class Parameterization { standard, ntk };

struct NetworkSpec {
    int input_dim = 1;
    std::vector<int> widths; // hidden layers; may be empty (a single affine map)
    int output_dim = 1;
    Parameterization param = Parameterization::ntk;
    double sigma_b2 = 0.0;
    double sigma_w2 = 1.0;
    Nonlinearity phi = Nonlinearity::relu();

    int num_layers() const { return int(widths.size()) + 1; }
    int fan_in(int l) const { return l == 0 ? input_dim : widths[l - 1]; }
    int fan_out(int l) const { return l == int(widths.size()) ? output_dim : widths[l]; }
    void validate() const;
};

NetworkSpec make_spec(const ArchSpec& arch, const WidthProfile& widths, Parameterization param, int output_dim = 1);

// Parameters live in one flat vector: per layer the column-major weight
// matrix (fan_out x fan_in) followed by the bias vector.
class Mlp {
public:
    explicit Mlp(NetworkSpec spec);

    const NetworkSpec& spec() const { return spec_; }
    Eigen::Index num_params() const { return theta.size(); }

    Eigen::Map<Matrix> W(int l);
    Eigen::Map<const Matrix> W(int l) const;
    Eigen::Map<Vector> b(int l);
    Eigen::Map<const Vector> b(int l) const;
    Eigen::Index weight_offset(int l) const { return offsets_[l]; }
    Eigen::Index bias_offset(int l) const { return offsets_[l] + Eigen::Index(spec_.fan_out(l)) * spec_.fan_in(l); }

    // Factors applied in the forward map: z = bias_scale * b + weight_scale * W a.
    double weight_scale(int l) const { return wscale_[l]; }
    double bias_scale(int l) const { return bscale_[l]; }

    Vector theta;

private:
    NetworkSpec spec_;
    std::vector<Eigen::Index> offsets_;
    std::vector<double> wscale_, bscale_;
};

// ntk: unit-variance draws; standard: W ~ N(0, sigma_w2 / fan_in), b ~ N(0, sigma_b2).
Mlp init_network(const NetworkSpec& spec, PhiloxEngine& rng);
Mlp init_network(const ArchSpec& arch, const WidthProfile& widths, Parameterization param, PhiloxEngine& rng,
                 int output_dim = 1);
void redraw(Mlp& net, PhiloxEngine& rng);

// Batched pass over the rows of X. post[0] = X^T, post[l] = phi(pre[l-1]);
// pre[l] has shape fan_out(l) x m.
struct ForwardPass {
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
    const Matrix& output() const { return pre.back(); }
};

ForwardPass forward(const Mlp& net, const Matrix& X);
Vector forward(const Mlp& net, const Vector& x); // output vector for one input

// d output[k] / d pre[l] for every sample; shapes match pass.pre.
std::vector<Matrix> backward(const Mlp& net, const ForwardPass& pass, int output_index = 0);

// Gradient of output[k] at x with respect to every parameter (flat layout).
Vector backprop_grads(const Mlp& net, const Vector& x, int output_index = 0);
// sum_a w_a grad f(x_a); the full-batch descent direction for residual weights w.
Vector weighted_grad(const Mlp& net, const Matrix& X, const Vector& w, int output_index = 0);
// m x P matrix of per-sample gradients.
Matrix per_sample_grads(const Mlp& net, const Matrix& X, int output_index = 0);
// d output[k] / d x.
Vector input_gradient(const Mlp& net, const Vector& x, int output_index = 0);

// Gram matrix of parameter gradients, assembled layer by layer; the standard
// parameterization divides by the first hidden width.
Matrix empirical_ntk(const Mlp& net, const Matrix& X, int output_index = 0);
// Gram of the samples' gradients against another set: m x q.
Matrix empirical_ntk_cross(const Mlp& net, const Matrix& X, const Matrix& Xq, int output_index = 0);
double ntk_normalizer(const NetworkSpec& spec);

} // namespace widthlab

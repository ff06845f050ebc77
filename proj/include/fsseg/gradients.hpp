#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fsseg/embedding.hpp"
#include "fsseg/head.hpp"

namespace fsseg {

enum class Wrt { class_vector, params, both };

// Exact analytic gradients of the episode loss
//   cross_entropy(head_forward(weighted_cosine_map(f, F, r), F), target)
// with respect to the class vector and/or the head parameters. Gradient
// tensors are filled only for the requested leaves.
struct GradBundle {
    Tensor d_class_vector;  // [d]
    HeadParams d_params;    // same shapes as the primal params
    double loss = 0.0;
};

// The relevance vector is a constant during differentiation: it is computed
// from support features and masks only, so no gradient flows into it.
// Internally the forward pass is recomputed in double precision; the cosine
// backward accounts for the epsilon-guarded denominator and the elementwise
// relevance weighting on both arguments.
GradBundle backward(const HeadParams& params, const Tensor& f,
                    const Tensor& features, const RelevanceVector& r,
                    const BinaryMask& target, Wrt wrt);

// Double-precision evaluation of the same episode loss.
double pipeline_loss(const HeadParams& params, const Tensor& f,
                     const Tensor& features, const RelevanceVector& r,
                     const BinaryMask& target);

// Central differences (L(x+h e_i) - L(x-h e_i)) / 2h per coordinate,
// evaluated in double precision.
std::vector<double> finite_diff_oracle(
    const std::function<double(const std::vector<double>&)>& loss_fn,
    const std::vector<double>& point, double step);

// A frozen pipeline instance whose differentiable leaves are held as double
// vectors, so finite differences can perturb them without float
// quantization. The primal here is the same function backward()
// differentiates; the oracle only ever evaluates it, never the analytic
// gradient path.
class PipelinePoint {
public:
    PipelinePoint(const HeadParams& params, const Tensor& f,
                  const Tensor& features, const RelevanceVector& r,
                  const BinaryMask& target);

    std::vector<double> class_vector() const;
    // Flattened parameters in declaration order:
    // conv1_weights | conv1_bias | conv2_weights | conv2_bias.
    std::vector<double> params_flat() const;

    double loss_with_class_vector(const std::vector<double>& f_values) const;
    double loss_with_params(const std::vector<double>& params_flat) const;

    // Pre-ReLU activations of the hidden layer at the frozen point; lets
    // callers verify (or establish) a margin away from the ReLU kinks,
    // where central differences are invalid.
    std::vector<double> conv1_preactivations() const;

private:
    int d_, h_, w_, hidden_;
    std::vector<double> w1_, b1_, w2_, b2_, f_, features_, r_;
    std::vector<std::uint8_t> target_;
};

}  // namespace fsseg

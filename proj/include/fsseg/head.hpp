#pragma once

#include <cstdint>
#include <vector>

#include "fsseg/episode.hpp"
#include "fsseg/mask.hpp"
#include "fsseg/similarity.hpp"
#include "fsseg/tensor.hpp"

namespace fsseg {

inline constexpr int kHiddenChannels = 128;
inline constexpr int kHeadKernel = 3;

// Parameters of the two-layer prediction network: a 3x3 convolution with
// ReLU and 128 channels over the (similarity, features) stack, then a 1x1
// convolution with 2 output channels (background, foreground).
struct HeadParams {
    Tensor conv1_weights;  // [128, d+1, 3, 3]
    Tensor conv1_bias;     // [128]
    Tensor conv2_weights;  // [2, 128, 1, 1]
    Tensor conv2_bias;     // [2]

    // Feature dimensionality d the head was built for.
    int feature_dim() const { return conv1_weights.dim(1) - 1; }
};

void validate_head_params(const HeadParams& params);

// Kaiming-style fan-in scaled Gaussian weights, zero biases.
HeadParams init_head_params(int d, Rng& rng);

// Segmentation output: logits [2, h, w], probs = softmax2(logits), binary
// cell = 1 iff foreground probability > 0.5.
struct PredictedMask {
    Tensor logits;
    Tensor probs;
    BinaryMask binary;
};

// conv1x1(relu(conv3x3(concat(sim, features)))) with the similarity map as
// channel 0. Output spatial size equals input spatial size.
PredictedMask head_forward(const HeadParams& params, const SimilarityMap& sim,
                           const Tensor& features);

// Mean over positions of -log p(target class), computed from logits with the
// log-sum-exp trick.
double cross_entropy(const PredictedMask& pred, const BinaryMask& target);

struct TrainConfig {
    double learning_rate = 7e-3;
    int iterations = 2000;
    int batch_size = 8;
    std::uint64_t seed = 0;
};

void validate_config(const TrainConfig& config);

struct TrainResult {
    HeadParams params;
    std::vector<double> loss_trace;  // mean batch loss per iteration
};

// Episodic SGD on the head parameters only: sample a train episode, pool the
// support class vector, estimate relevance (or use uniform weights), build
// the weighted similarity map, predict, and take a mean-reduction gradient
// step against the downsampled query mask. Deterministic per config.seed.
TrainResult train_head(const std::vector<LabeledExample>& dataset,
                       const FoldSplit& split, const TrainConfig& config,
                       bool use_relevance);

}  // namespace fsseg

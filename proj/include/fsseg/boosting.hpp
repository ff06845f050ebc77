#pragma once

#include <vector>

#include "fsseg/embedding.hpp"
#include "fsseg/gradients.hpp"
#include "fsseg/head.hpp"

namespace fsseg {

// One iterate of the gradient-guided class-vector update, together with its
// confidence (mean IoU of its support prediction against the support ground
// truth) and the summed support loss it incurred.
struct Expert {
    Tensor f;                  // class vector iterate
    double confidence = 0.0;   // in [0, 1]
    double support_loss = 0.0;
};

enum class ExpertOptimizer { adam, sgd };

struct BoostConfig {
    int num_experts = 10;
    double step_size = 1e-2;
    ExpertOptimizer optimizer = ExpertOptimizer::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

void validate_config(const BoostConfig& config);

struct EnsembleResult {
    Tensor fused_probs;        // [2, h, w], channels sum to 1
    BinaryMask fused_binary;   // foreground probability > 0.5
    std::vector<Expert> experts;
    std::vector<Tensor> per_expert_query_probs;  // foreground maps, [h, w]
};

// Inference prediction for a single class vector (no ensemble): weighted
// cosine map against the query features, then the frozen head.
PredictedMask predict_single(const HeadParams& params, const Tensor& f,
                             const Tensor& query_features,
                             const RelevanceVector& r);

// Generates the expert sequence f^1..f^N at test time with the head frozen.
// f^1 is the mean of the supports' pooled class vectors; each step predicts
// every support's mask, records the mean IoU as the expert's confidence and
// the summed cross-entropy as its support loss, then takes one optimizer
// step on that summed loss. If a loss turns non-finite at step n the
// ensemble truncates to the first n-1 experts with a warning on stderr.
std::vector<Expert> build_ensemble(const HeadParams& params,
                                   const std::vector<SupportExample>& supports,
                                   const RelevanceVector& r,
                                   const BoostConfig& config);

// Confidence-weighted fusion of the experts' query predictions: fused
// foreground probability = sum_n rho^n p^n / sum_n rho^n (plain average when
// the confidences sum below 1e-8), thresholded at 0.5.
EnsembleResult fuse(const std::vector<Expert>& experts,
                    const Tensor& query_features, const RelevanceVector& r,
                    const HeadParams& params);

// K-shot baseline: every support predicts the query independently (its own
// pooled class vector and, when use_relevance, its own relevance estimated
// from that support alone); the probability maps are averaged uniformly.
EnsembleResult kshot_average_baseline(const HeadParams& params,
                                      const std::vector<SupportExample>& supports,
                                      const Tensor& query_features,
                                      bool use_relevance);

}  // namespace fsseg

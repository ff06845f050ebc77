#include "fsseg/boosting.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "fsseg/metrics.hpp"
#include "fsseg/similarity.hpp"

namespace fsseg {

void validate_config(const BoostConfig& config) {
    if (config.num_experts < 1) {
        throw DataError("boost config: num_experts must be >= 1");
    }
    if (config.step_size <= 0.0 || !std::isfinite(config.step_size)) {
        throw DataError("boost config: step_size must be positive and finite");
    }
}

PredictedMask predict_single(const HeadParams& params, const Tensor& f,
                             const Tensor& query_features,
                             const RelevanceVector& r) {
    return head_forward(params, weighted_cosine_map(f, query_features, r),
                        query_features);
}

namespace {

void check_supports(const std::vector<SupportExample>& supports) {
    if (supports.empty()) {
        throw DataError("build_ensemble: need at least one support");
    }
    for (std::size_t k = 0; k < supports.size(); ++k) {
        const std::int64_t fg = supports[k].mask.foreground_count();
        if (fg == 0 || fg == supports[k].mask.size()) {
            throw DegenerateMaskError("support " + std::to_string(k) +
                                          ": mask is all-" +
                                          (fg == 0 ? "background" : "foreground"),
                                      static_cast<int>(k));
        }
    }
}

// Mean of the supports' pooled class vectors.
Tensor initial_class_vector(const std::vector<SupportExample>& supports) {
    Tensor acc;
    for (std::size_t k = 0; k < supports.size(); ++k) {
        Tensor pooled = masked_pool(supports[k].features, supports[k].mask);
        acc = k == 0 ? std::move(pooled) : add(acc, pooled);
    }
    return scale(acc, 1.0 / static_cast<double>(supports.size()));
}

}  // namespace

std::vector<Expert> build_ensemble(const HeadParams& params,
                                   const std::vector<SupportExample>& supports,
                                   const RelevanceVector& r,
                                   const BoostConfig& config) {
    validate_config(config);
    check_supports(supports);

    const int d = supports.front().features.dim(0);
    Tensor f = initial_class_vector(supports);

    // Adam moment state, used only when configured.
    std::vector<double> m(static_cast<std::size_t>(d), 0.0);
    std::vector<double> v(static_cast<std::size_t>(d), 0.0);

    std::vector<Expert> experts;
    experts.reserve(static_cast<std::size_t>(config.num_experts));

    for (int n = 0; n < config.num_experts; ++n) {
        Expert expert;
        expert.f = f;

        double loss_sum = 0.0;
        double iou_sum = 0.0;
        Tensor grad_sum({d});
        const bool need_update = n + 1 < config.num_experts;
        bool non_finite = false;

        for (const SupportExample& support : supports) {
            try {
                const PredictedMask pred =
                    predict_single(params, f, support.features, r);
                iou_sum += iou(pred.binary, support.mask);
                loss_sum += cross_entropy(pred, support.mask);
                if (need_update) {
                    const GradBundle g = backward(params, f, support.features, r,
                                                  support.mask, Wrt::class_vector);
                    grad_sum = add(grad_sum, g.d_class_vector);
                }
            } catch (const NonFiniteError&) {
                non_finite = true;
                break;
            }
        }
        if (non_finite || !std::isfinite(loss_sum)) {
            std::cerr << "build_ensemble: non-finite support loss at expert "
                      << (n + 1) << "; truncating ensemble to " << experts.size()
                      << " expert(s)\n";
            break;
        }

        expert.confidence = iou_sum / static_cast<double>(supports.size());
        expert.support_loss = loss_sum;
        experts.push_back(std::move(expert));

        if (!need_update) break;
        if (config.optimizer == ExpertOptimizer::sgd) {
            f = sub(f, scale(grad_sum, config.step_size));
        } else {
            const double t = static_cast<double>(n + 1);
            Tensor next({d});
            for (int c = 0; c < d; ++c) {
                const double g = grad_sum(c);
                m[static_cast<std::size_t>(c)] =
                    config.adam_beta1 * m[static_cast<std::size_t>(c)] +
                    (1.0 - config.adam_beta1) * g;
                v[static_cast<std::size_t>(c)] =
                    config.adam_beta2 * v[static_cast<std::size_t>(c)] +
                    (1.0 - config.adam_beta2) * g * g;
                const double m_hat = m[static_cast<std::size_t>(c)] /
                                     (1.0 - std::pow(config.adam_beta1, t));
                const double v_hat = v[static_cast<std::size_t>(c)] /
                                     (1.0 - std::pow(config.adam_beta2, t));
                next(c) = static_cast<float>(
                    f(c) - config.step_size * m_hat /
                               (std::sqrt(v_hat) + config.adam_epsilon));
            }
            f = std::move(next);
        }
    }
    return experts;
}

EnsembleResult fuse(const std::vector<Expert>& experts,
                    const Tensor& query_features, const RelevanceVector& r,
                    const HeadParams& params) {
    if (experts.empty()) {
        throw DataError("fuse: need at least one expert");
    }
    if (query_features.rank() != 3) {
        throw ShapeError("fuse: query features must be rank-3 [d,h,w]");
    }
    const int h = query_features.dim(1), w = query_features.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    EnsembleResult out;
    out.experts = experts;
    out.per_expert_query_probs.reserve(experts.size());

    double weight_sum = 0.0;
    for (const Expert& e : experts) weight_sum += e.confidence;
    const bool uniform = weight_sum < 1e-8;

    // Double accumulation keeps single-expert fusion bit-exact after the
    // final cast back to float.
    std::vector<double> fused(plane, 0.0);
    for (const Expert& e : experts) {
        const PredictedMask pred = predict_single(params, e.f, query_features, r);
        Tensor fg({h, w});
        std::copy(pred.probs.data().begin() + static_cast<std::ptrdiff_t>(plane),
                  pred.probs.data().end(), fg.data().begin());
        const double weight = uniform
                                  ? 1.0 / static_cast<double>(experts.size())
                                  : e.confidence / weight_sum;
        for (std::size_t p = 0; p < plane; ++p) {
            fused[p] += weight * fg.data()[p];
        }
        out.per_expert_query_probs.push_back(std::move(fg));
    }

    out.fused_probs = Tensor({2, h, w});
    out.fused_binary = BinaryMask(h, w);
    for (std::size_t p = 0; p < plane; ++p) {
        const float fg = static_cast<float>(fused[p]);
        out.fused_probs.data()[p] = 1.0f - fg;
        out.fused_probs.data()[plane + p] = fg;
        out.fused_binary.values[p] = fg > 0.5f ? 1 : 0;
    }
    ensure_finite(out.fused_probs, "fuse");
    return out;
}

EnsembleResult kshot_average_baseline(const HeadParams& params,
                                      const std::vector<SupportExample>& supports,
                                      const Tensor& query_features,
                                      bool use_relevance) {
    check_supports(supports);
    const int d = supports.front().features.dim(0);
    const int h = query_features.dim(1), w = query_features.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    EnsembleResult out;
    out.per_expert_query_probs.reserve(supports.size());
    std::vector<double> fused(plane, 0.0);
    const double weight = 1.0 / static_cast<double>(supports.size());

    for (const SupportExample& support : supports) {
        const Tensor f = masked_pool(support.features, support.mask);
        const RelevanceVector r =
            use_relevance
                ? relevance(feature_difference(support.features, support.mask))
                : RelevanceVector::uniform(d);
        const PredictedMask pred = predict_single(params, f, query_features, r);
        Tensor fg({h, w});
        std::copy(pred.probs.data().begin() + static_cast<std::ptrdiff_t>(plane),
                  pred.probs.data().end(), fg.data().begin());
        for (std::size_t p = 0; p < plane; ++p) {
            fused[p] += weight * fg.data()[p];
        }
        out.per_expert_query_probs.push_back(std::move(fg));
    }

    out.fused_probs = Tensor({2, h, w});
    out.fused_binary = BinaryMask(h, w);
    for (std::size_t p = 0; p < plane; ++p) {
        const float fg = static_cast<float>(fused[p]);
        out.fused_probs.data()[p] = 1.0f - fg;
        out.fused_probs.data()[plane + p] = fg;
        out.fused_binary.values[p] = fg > 0.5f ? 1 : 0;
    }
    ensure_finite(out.fused_probs, "kshot_average_baseline");
    return out;
}

}  // namespace fsseg

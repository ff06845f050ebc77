#include "fsseg/eval.hpp"

#include <algorithm>
#include <map>

#include "fsseg/similarity.hpp"

namespace fsseg {

namespace {

SupportExample to_feature_resolution(const LabeledExample& ex) {
    SupportExample s;
    s.features = ex.features;
    s.mask = downsample_mask(ex.mask, ex.features.dim(1), ex.features.dim(2));
    return s;
}

// One full prediction with a shared class vector and relevance: either the
// expert ensemble or the plain single-vector path.
EnsembleResult predict_joint(const HeadParams& params,
                             const std::vector<SupportExample>& supports,
                             const Tensor& query_features,
                             const EvalOptions& opts) {
    const int d = query_features.dim(0);
    const RelevanceVector r =
        opts.use_relevance ? relevance(feature_difference_kshot(supports))
                           : RelevanceVector::uniform(d);
    if (opts.use_boosting) {
        const std::vector<Expert> experts =
            build_ensemble(params, supports, r, opts.boost);
        return fuse(experts, query_features, r, params);
    }

    Tensor acc;
    for (std::size_t k = 0; k < supports.size(); ++k) {
        Tensor pooled = masked_pool(supports[k].features, supports[k].mask);
        acc = k == 0 ? std::move(pooled) : add(acc, pooled);
    }
    const Tensor f = scale(acc, 1.0 / static_cast<double>(supports.size()));
    const PredictedMask pred = predict_single(params, f, query_features, r);

    EnsembleResult out;
    out.fused_probs = pred.probs;
    out.fused_binary = pred.binary;
    return out;
}

// Per-support independent predictions averaged uniformly. With boosting the
// full single-support pipeline (own relevance, own ensemble) runs per
// support; without it this is the plain averaged baseline.
EnsembleResult predict_average(const HeadParams& params,
                               const std::vector<SupportExample>& supports,
                               const Tensor& query_features,
                               const EvalOptions& opts) {
    if (!opts.use_boosting) {
        return kshot_average_baseline(params, supports, query_features,
                                      opts.use_relevance);
    }
    const int d = query_features.dim(0);
    const int h = query_features.dim(1), w = query_features.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    EnsembleResult out;
    std::vector<double> fused(plane, 0.0);
    const double weight = 1.0 / static_cast<double>(supports.size());
    for (const SupportExample& support : supports) {
        const std::vector<SupportExample> single{support};
        const RelevanceVector r =
            opts.use_relevance
                ? relevance(feature_difference(support.features, support.mask))
                : RelevanceVector::uniform(d);
        const std::vector<Expert> experts =
            build_ensemble(params, single, r, opts.boost);
        const EnsembleResult sub = fuse(experts, query_features, r, params);
        for (std::size_t p = 0; p < plane; ++p) {
            fused[p] += weight * sub.fused_probs.data()[plane + p];
        }
        out.per_expert_query_probs.push_back(Tensor(
            {h, w}, {sub.fused_probs.data().begin() + static_cast<std::ptrdiff_t>(plane),
                     sub.fused_probs.data().end()}));
    }
    out.fused_probs = Tensor({2, h, w});
    out.fused_binary = BinaryMask(h, w);
    for (std::size_t p = 0; p < plane; ++p) {
        const float fg = static_cast<float>(fused[p]);
        out.fused_probs.data()[p] = 1.0f - fg;
        out.fused_probs.data()[plane + p] = fg;
        out.fused_binary.values[p] = fg > 0.5f ? 1 : 0;
    }
    return out;
}

}  // namespace

EnsembleResult run_episode(const HeadParams& params, const Episode& episode,
                           const EvalOptions& opts) {
    std::vector<SupportExample> supports;
    supports.reserve(episode.supports.size());
    for (const LabeledExample& ex : episode.supports) {
        supports.push_back(to_feature_resolution(ex));
    }
    if (opts.kshot_mode == KshotMode::average) {
        return predict_average(params, supports, episode.query.features, opts);
    }
    return predict_joint(params, supports, episode.query.features, opts);
}

FoldResult evaluate_fold(const std::vector<LabeledExample>& dataset,
                         const FoldSplit& split, const HeadParams& params,
                         const EvalOptions& opts) {
    validate_dataset(dataset);
    validate_fold(split);
    if (opts.episodes_per_fold < 1) {
        throw DataError("evaluate_fold: episodes_per_fold must be >= 1");
    }

    FoldResult result;
    result.fold_index = split.fold_index;
    result.episodes.reserve(static_cast<std::size_t>(opts.episodes_per_fold));

    std::map<int, ClassScore> scores;
    double iou_sum = 0.0;

    for (int e = 0; e < opts.episodes_per_fold; ++e) {
        Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(split.fold_index),
                            static_cast<std::uint64_t>(e)));
        const Episode episode =
            sample_episode(dataset, split, opts.k, Phase::test, rng);
        const EnsembleResult pred = run_episode(params, episode, opts);
        const BinaryMask query_mask =
            downsample_mask(episode.query.mask, episode.query.features.dim(1),
                            episode.query.features.dim(2));

        EpisodeOutcome outcome;
        outcome.episode_index = e;
        outcome.class_id = episode.class_id;
        outcome.iou = iou(pred.fused_binary, query_mask);
        if (opts.collect_traces) outcome.experts = pred.experts;

        ClassScore& score = scores[episode.class_id];
        score.class_id = episode.class_id;
        score.accumulate(pred.fused_binary, query_mask);

        iou_sum += outcome.iou;
        result.episodes.push_back(std::move(outcome));
    }

    result.per_class.reserve(scores.size());
    for (const auto& [cls, score] : scores) {
        result.per_class.push_back(score);
    }
    result.miou_pooled = miou(result.per_class);
    result.miou_episode_mean = iou_sum / static_cast<double>(opts.episodes_per_fold);
    return result;
}

}  // namespace fsseg

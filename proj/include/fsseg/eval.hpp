#pragma once

#include <cstdint>
#include <vector>

#include "fsseg/boosting.hpp"
#include "fsseg/episode.hpp"
#include "fsseg/head.hpp"
#include "fsseg/metrics.hpp"

namespace fsseg {

// How K-shot episodes are handled: "joint" pools all supports into one
// class vector, shares one relevance estimate and one expert ensemble;
// "average" predicts independently per support and averages the maps.
enum class KshotMode { average, joint };

struct EvalOptions {
    int k = 1;
    bool use_relevance = true;
    bool use_boosting = true;
    KshotMode kshot_mode = KshotMode::joint;
    BoostConfig boost;
    int episodes_per_fold = 200;
    std::uint64_t seed = 0;
    bool collect_traces = false;  // keep per-expert stats per episode
};

struct EpisodeOutcome {
    int episode_index = 0;
    int class_id = 0;
    double iou = 0.0;
    std::vector<Expert> experts;  // filled when collect_traces
};

struct FoldResult {
    int fold_index = 0;
    std::vector<ClassScore> per_class;      // sorted by class id
    double miou_pooled = 0.0;               // from pooled tp/fp/fn counts
    double miou_episode_mean = 0.0;         // mean of per-episode IoUs
    std::vector<EpisodeOutcome> episodes;   // in episode-index order
};

// Predicts the query mask of one episode under the configured ablation.
// Masks are downsampled to feature resolution internally; the returned
// prediction lives at feature resolution.
EnsembleResult run_episode(const HeadParams& params, const Episode& episode,
                           const EvalOptions& opts);

// Samples opts.episodes_per_fold test episodes, each from its own derived
// seed (base seed, fold index, episode index), so ablations sharing a seed
// compare on identical episode sets. Per-class counts pool over episodes.
FoldResult evaluate_fold(const std::vector<LabeledExample>& dataset,
                         const FoldSplit& split, const HeadParams& params,
                         const EvalOptions& opts);

}  // namespace fsseg

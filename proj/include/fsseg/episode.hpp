#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "fsseg/mask.hpp"
#include "fsseg/rng.hpp"
#include "fsseg/tensor.hpp"

namespace fsseg {

// One dataset entry: a feature map [d, h, w] and its segmentation mask at
// the original resolution [H, W], where H/h and W/w are equal integers (the
// stride between mask and feature resolution is carried by the data).
struct LabeledExample {
    int class_id = 0;
    Tensor features;
    BinaryMask mask;
};

// Throws unless masks are {0,1}, feature dims agree across examples and the
// mask/feature stride is a consistent integer per example.
void validate_dataset(const std::vector<LabeledExample>& dataset);

// One few-shot task: K >= 1 supports plus a distinct query, same class.
struct Episode {
    int class_id = 0;
    std::vector<LabeledExample> supports;
    LabeledExample query;
};

enum class Phase { train, test };

// Disjoint train/test class partition for one cross-validation fold.
struct FoldSplit {
    int fold_index = 0;
    std::set<int> test_classes;
    std::set<int> train_classes;
};

void validate_fold(const FoldSplit& fold);

// Uniformly picks an eligible class (>= k+1 examples) from the phase's class
// set, then k+1 distinct examples of it: first k as supports, last as query.
// Throws DataError when no class is eligible.
Episode sample_episode(const std::vector<LabeledExample>& dataset,
                       const FoldSplit& split, int k, Phase phase, Rng& rng);

// Configuration of the synthetic class-conditional feature generator that
// stands in for a backbone. Masks are produced at twice the feature
// resolution (stride 2) from disc-shaped foreground blobs. Foreground
// feature columns are drawn around a per-class prototype, background columns
// around a per-class distractor prototype; the first num_shared_dims
// dimensions are pinned to a high constant on both regions so they carry no
// class signal.
struct SyntheticConfig {
    int d = 16;
    int h = 8;
    int w = 8;
    int num_classes = 8;
    double noise_sigma = 0.7;
    int num_shared_dims = 0;
    int blob_count_max = 3;
    int blob_radius_min = 2;
    int blob_radius_max = 5;
    std::uint64_t seed = 0;
};

void validate_config(const SyntheticConfig& config);

// Activation level planted on shared (non-discriminative) dimensions.
inline constexpr float kSharedDimValue = 2.0f;

struct SyntheticDataset {
    std::vector<LabeledExample> examples;
    std::vector<Tensor> fg_prototypes;  // one per class
    std::vector<Tensor> bg_prototypes;  // one per class
};

// Deterministic per config.seed; every example's mask has at least one
// foreground and one background cell at feature resolution.
SyntheticDataset generate_synthetic(const SyntheticConfig& config,
                                    int examples_per_class);

}  // namespace fsseg

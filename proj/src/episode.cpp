#include "fsseg/episode.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace fsseg {

void validate_dataset(const std::vector<LabeledExample>& dataset) {
    if (dataset.empty()) {
        throw DataError("dataset is empty");
    }
    const int d = dataset.front().features.dim(0);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const LabeledExample& ex = dataset[i];
        const std::string where = "dataset example " + std::to_string(i);
        if (ex.class_id < 0) {
            throw DataError(where + ": negative class id");
        }
        if (ex.features.rank() != 3) {
            throw ShapeError(where + ": features must be rank-3 [d,h,w]");
        }
        if (ex.features.dim(0) != d) {
            throw ShapeError(where + ": feature dim " +
                             std::to_string(ex.features.dim(0)) +
                             " differs from dataset dim " + std::to_string(d));
        }
        validate_mask(ex.mask, where.c_str());
        const int h = ex.features.dim(1), w = ex.features.dim(2);
        if (ex.mask.height % h != 0 || ex.mask.width % w != 0 ||
            ex.mask.height / h != ex.mask.width / w) {
            throw ShapeError(where + ": mask " + std::to_string(ex.mask.height) +
                             "x" + std::to_string(ex.mask.width) +
                             " is not an integer common stride above features " +
                             std::to_string(h) + "x" + std::to_string(w));
        }
    }
}

void validate_fold(const FoldSplit& fold) {
    for (int c : fold.test_classes) {
        if (fold.train_classes.count(c)) {
            throw DataError("fold " + std::to_string(fold.fold_index) + ": class " +
                            std::to_string(c) + " appears in both test and train");
        }
    }
}

Episode sample_episode(const std::vector<LabeledExample>& dataset,
                       const FoldSplit& split, int k, Phase phase, Rng& rng) {
    if (k < 1) {
        throw DataError("sample_episode: k must be >= 1");
    }
    validate_fold(split);
    const std::set<int>& classes =
        phase == Phase::test ? split.test_classes : split.train_classes;

    std::map<int, std::vector<int>> by_class;  // ordered for determinism
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (classes.count(dataset[i].class_id)) {
            by_class[dataset[i].class_id].push_back(static_cast<int>(i));
        }
    }
    std::vector<int> eligible;
    for (const auto& [cls, idx] : by_class) {
        if (static_cast<int>(idx.size()) >= k + 1) eligible.push_back(cls);
    }
    if (eligible.empty()) {
        throw DataError("sample_episode: no class in the " +
                        std::string(phase == Phase::test ? "test" : "train") +
                        " split has at least " + std::to_string(k + 1) +
                        " examples");
    }

    const int cls = eligible[rng.uniform_int(static_cast<std::uint32_t>(eligible.size()))];
    std::vector<int> pool = by_class[cls];
    // Partial Fisher-Yates: the first k+1 slots become a uniform random
    // draw of distinct examples; order randomizes the support/query roles.
    for (int i = 0; i <= k; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(
                              static_cast<std::uint32_t>(pool.size() - i)));
        std::swap(pool[i], pool[j]);
    }

    Episode ep;
    ep.class_id = cls;
    ep.supports.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        ep.supports.push_back(dataset[static_cast<std::size_t>(pool[i])]);
    }
    ep.query = dataset[static_cast<std::size_t>(pool[k])];
    return ep;
}

void validate_config(const SyntheticConfig& config) {
    if (config.d <= 0 || config.h <= 0 || config.w <= 0 || config.num_classes <= 0) {
        throw DataError("synthetic config: dimensions and class count must be positive");
    }
    if (config.noise_sigma <= 0.0) {
        throw DataError("synthetic config: noise_sigma must be > 0");
    }
    if (config.num_shared_dims < 0 || config.num_shared_dims >= config.d) {
        throw DataError("synthetic config: need 0 <= num_shared_dims < d");
    }
    if (config.blob_count_max < 1 || config.blob_radius_min < 1 ||
        config.blob_radius_max < config.blob_radius_min) {
        throw DataError("synthetic config: invalid blob count/radius ranges");
    }
}

namespace {

constexpr int kMaskStride = 2;

BinaryMask random_blob_mask(const SyntheticConfig& config, Rng& rng) {
    const int mask_h = config.h * kMaskStride;
    const int mask_w = config.w * kMaskStride;
    // Rejection until the downsampled mask keeps both regions non-empty.
    for (int attempt = 0; attempt < 1000; ++attempt) {
        BinaryMask mask(mask_h, mask_w);
        const int blobs = 1 + static_cast<int>(rng.uniform_int(
                                  static_cast<std::uint32_t>(config.blob_count_max)));
        for (int b = 0; b < blobs; ++b) {
            const int cy = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(mask_h)));
            const int cx = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(mask_w)));
            const int r = config.blob_radius_min +
                          static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(
                              config.blob_radius_max - config.blob_radius_min + 1)));
            for (int y = std::max(0, cy - r); y <= std::min(mask_h - 1, cy + r); ++y) {
                for (int x = std::max(0, cx - r); x <= std::min(mask_w - 1, cx + r); ++x) {
                    const int dy = y - cy, dx = x - cx;
                    if (dy * dy + dx * dx <= r * r) mask.at(y, x) = 1;
                }
            }
        }
        const BinaryMask down = downsample_mask(mask, config.h, config.w);
        const std::int64_t fg = down.foreground_count();
        if (fg > 0 && fg < down.size()) return mask;
    }
    throw DataError("generate_synthetic: could not place blobs leaving both "
                    "foreground and background at feature resolution; relax "
                    "blob ranges");
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& config,
                                    int examples_per_class) {
    validate_config(config);
    if (examples_per_class < 1) {
        throw DataError("generate_synthetic: examples_per_class must be >= 1");
    }

    Rng rng(config.seed);
    SyntheticDataset out;
    out.fg_prototypes.reserve(static_cast<std::size_t>(config.num_classes));
    out.bg_prototypes.reserve(static_cast<std::size_t>(config.num_classes));
    out.examples.reserve(static_cast<std::size_t>(config.num_classes) *
                         examples_per_class);

    for (int cls = 0; cls < config.num_classes; ++cls) {
        const Tensor fg_proto = Tensor::randn({config.d}, rng);
        const Tensor bg_proto = Tensor::randn({config.d}, rng);
        out.fg_prototypes.push_back(fg_proto);
        out.bg_prototypes.push_back(bg_proto);

        for (int e = 0; e < examples_per_class; ++e) {
            LabeledExample ex;
            ex.class_id = cls;
            ex.mask = random_blob_mask(config, rng);
            const BinaryMask down = downsample_mask(ex.mask, config.h, config.w);

            ex.features = Tensor({config.d, config.h, config.w});
            for (int y = 0; y < config.h; ++y) {
                for (int x = 0; x < config.w; ++x) {
                    const Tensor& proto = down.at(y, x) ? fg_proto : bg_proto;
                    for (int c = 0; c < config.d; ++c) {
                        ex.features(c, y, x) = static_cast<float>(
                            proto(c) + config.noise_sigma * rng.normal());
                    }
                    for (int c = 0; c < config.num_shared_dims; ++c) {
                        ex.features(c, y, x) = kSharedDimValue;
                    }
                }
            }
            out.examples.push_back(std::move(ex));
        }
    }
    validate_dataset(out.examples);
    return out;
}

}  // namespace fsseg

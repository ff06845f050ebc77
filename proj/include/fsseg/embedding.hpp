#pragma once

#include <vector>

#include "fsseg/mask.hpp"
#include "fsseg/tensor.hpp"

namespace fsseg {

// A support at feature resolution: features [d, h, w] and the mask already
// downsampled to [h, w].
struct SupportExample {
    Tensor features;
    BinaryMask mask;
};

// Unit-L2-norm feature relevance weights. Construct via relevance() or
// uniform().
class RelevanceVector {
public:
    explicit RelevanceVector(Tensor values);
    static RelevanceVector uniform(int d);

    const Tensor& values() const { return values_; }
    int dim() const { return values_.dim(0); }

private:
    RelevanceVector() = default;
    Tensor values_;
};

// Mean feature column over the mask's foreground cells. Throws
// EmptyMaskError when the mask has no foreground.
Tensor masked_pool(const Tensor& features, const BinaryMask& mask);

// Per-channel (foreground mean) - (background mean). Throws
// DegenerateMaskError when either region is empty.
Tensor feature_difference(const Tensor& features, const BinaryMask& mask);

// Sum of per-support foreground-minus-background means; the resulting
// relevance is shared across all supports. DegenerateMaskError carries the
// offending support index.
Tensor feature_difference_kshot(const std::vector<SupportExample>& supports);

// Closed-form maximizer of phi^T r over unit vectors: phi / ||phi||. Falls
// back to the uniform unit vector when ||phi|| < 1e-8, which makes the
// weighted similarity degrade to the plain cosine.
RelevanceVector relevance(const Tensor& phi);

}  // namespace fsseg

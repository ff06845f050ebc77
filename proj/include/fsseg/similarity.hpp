#pragma once

#include "fsseg/embedding.hpp"
#include "fsseg/tensor.hpp"

namespace fsseg {

// Per-position cosine similarity grid; every value lies in [-1, 1] (small
// slack for rounding).
class SimilarityMap {
public:
    explicit SimilarityMap(Tensor values);

    const Tensor& values() const { return values_; }
    int height() const { return values_.dim(0); }
    int width() const { return values_.dim(1); }
    float at(int y, int x) const { return values_(y, x); }

private:
    Tensor values_;
};

// Denominator guard shared by both similarity maps and their gradients;
// added (not clamped) so the map stays differentiable at zero columns.
inline constexpr double kCosineEpsilon = 1e-8;

// Per position i: f.F_i / (||f|| * ||F_i|| + eps).
SimilarityMap cosine_map(const Tensor& f, const Tensor& features);

// Cosine between (f .* r) and (F_i .* r); the relevance weight enters on
// both arguments, equivalent to a diagonal-metric cosine with weights r^2.
SimilarityMap weighted_cosine_map(const Tensor& f, const Tensor& features,
                                  const RelevanceVector& r);

}  // namespace fsseg

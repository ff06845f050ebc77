#include "fsseg/similarity.hpp"

#include <cmath>
#include <string>

namespace fsseg {

SimilarityMap::SimilarityMap(Tensor values) : values_(std::move(values)) {
    if (values_.rank() != 2) {
        throw ShapeError("SimilarityMap: values must be rank-2");
    }
    for (float v : values_.data()) {
        if (v < -1.0f - 1e-6f || v > 1.0f + 1e-6f) {
            throw DataError("SimilarityMap: value " + std::to_string(v) +
                            " outside [-1, 1]");
        }
    }
}

namespace {

SimilarityMap cosine_map_impl(const Tensor& f, const Tensor& features,
                              const float* weights) {
    if (f.rank() != 1 || features.rank() != 3 || f.dim(0) != features.dim(0)) {
        throw ShapeError("cosine_map: class vector dim " +
                         std::to_string(f.rank() == 1 ? f.dim(0) : -1) +
                         " does not match features");
    }
    ensure_finite(f, "cosine_map");
    ensure_finite(features, "cosine_map");

    const int d = features.dim(0), h = features.dim(1), w = features.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const float* in = features.data().data();

    std::vector<double> a(static_cast<std::size_t>(d));
    double a_sq = 0.0;
    for (int c = 0; c < d; ++c) {
        a[static_cast<std::size_t>(c)] =
            weights ? static_cast<double>(f(c)) * weights[c] : f(c);
        a_sq += a[static_cast<std::size_t>(c)] * a[static_cast<std::size_t>(c)];
    }
    const double a_norm = std::sqrt(a_sq);

    Tensor out({h, w});
    for (std::size_t p = 0; p < plane; ++p) {
        double num = 0.0, b_sq = 0.0;
        for (int c = 0; c < d; ++c) {
            const double b = weights
                                 ? static_cast<double>(in[c * plane + p]) * weights[c]
                                 : in[c * plane + p];
            num += a[static_cast<std::size_t>(c)] * b;
            b_sq += b * b;
        }
        out.data()[p] = static_cast<float>(
            num / (a_norm * std::sqrt(b_sq) + kCosineEpsilon));
    }
    ensure_finite(out, "cosine_map");
    return SimilarityMap(std::move(out));
}

}  // namespace

SimilarityMap cosine_map(const Tensor& f, const Tensor& features) {
    return cosine_map_impl(f, features, nullptr);
}

SimilarityMap weighted_cosine_map(const Tensor& f, const Tensor& features,
                                  const RelevanceVector& r) {
    if (r.dim() != f.dim(0)) {
        throw ShapeError("weighted_cosine_map: relevance dim " +
                         std::to_string(r.dim()) + " vs class vector dim " +
                         std::to_string(f.dim(0)));
    }
    return cosine_map_impl(f, features, r.values().data().data());
}

}  // namespace fsseg

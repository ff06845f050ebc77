#include "fsseg/embedding.hpp"

#include <cmath>
#include <string>

namespace fsseg {

namespace {

void require_feature_mask_match(const Tensor& features, const BinaryMask& mask,
                                const char* op) {
    if (features.rank() != 3) {
        throw ShapeError(std::string(op) + ": features must be rank-3 [d,h,w]");
    }
    if (features.dim(1) != mask.height || features.dim(2) != mask.width) {
        throw ShapeError(std::string(op) + ": feature grid " +
                         std::to_string(features.dim(1)) + "x" +
                         std::to_string(features.dim(2)) + " vs mask " +
                         std::to_string(mask.height) + "x" +
                         std::to_string(mask.width));
    }
    validate_mask(mask, op);
}

}  // namespace

RelevanceVector::RelevanceVector(Tensor values) : values_(std::move(values)) {
    if (values_.rank() != 1) {
        throw ShapeError("RelevanceVector: values must be rank-1");
    }
    const double n = l2_norm(values_);
    if (std::abs(n - 1.0) > 1e-6) {
        throw DataError("RelevanceVector: L2 norm " + std::to_string(n) +
                        " is not 1 within 1e-6");
    }
}

RelevanceVector RelevanceVector::uniform(int d) {
    if (d <= 0) {
        throw ShapeError("RelevanceVector::uniform: d must be positive");
    }
    const float v = static_cast<float>(1.0 / std::sqrt(static_cast<double>(d)));
    return RelevanceVector(Tensor::full({d}, v));
}

Tensor masked_pool(const Tensor& features, const BinaryMask& mask) {
    require_feature_mask_match(features, mask, "masked_pool");
    const std::int64_t fg = mask.foreground_count();
    if (fg == 0) {
        throw EmptyMaskError("masked_pool: mask has no foreground cell");
    }
    const int d = features.dim(0), h = features.dim(1), w = features.dim(2);
    Tensor out({d});
    for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (mask.at(y, x)) acc += features(c, y, x);
            }
        }
        out(c) = static_cast<float>(acc / static_cast<double>(fg));
    }
    ensure_finite(out, "masked_pool");
    return out;
}

Tensor feature_difference(const Tensor& features, const BinaryMask& mask) {
    require_feature_mask_match(features, mask, "feature_difference");
    const std::int64_t fg = mask.foreground_count();
    const std::int64_t bg = mask.size() - fg;
    if (fg == 0 || bg == 0) {
        throw DegenerateMaskError(
            "feature_difference: mask must have both foreground and background "
            "cells (foreground count " + std::to_string(fg) + " of " +
            std::to_string(mask.size()) + ")");
    }
    const int d = features.dim(0), h = features.dim(1), w = features.dim(2);
    Tensor out({d});
    for (int c = 0; c < d; ++c) {
        double fg_acc = 0.0, bg_acc = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (mask.at(y, x)) {
                    fg_acc += features(c, y, x);
                } else {
                    bg_acc += features(c, y, x);
                }
            }
        }
        out(c) = static_cast<float>(fg_acc / static_cast<double>(fg) -
                                    bg_acc / static_cast<double>(bg));
    }
    ensure_finite(out, "feature_difference");
    return out;
}

Tensor feature_difference_kshot(const std::vector<SupportExample>& supports) {
    if (supports.empty()) {
        throw DataError("feature_difference_kshot: need at least one support");
    }
    Tensor acc;
    for (std::size_t k = 0; k < supports.size(); ++k) {
        Tensor phi_k;
        try {
            phi_k = feature_difference(supports[k].features, supports[k].mask);
        } catch (const DegenerateMaskError& e) {
            throw DegenerateMaskError("support " + std::to_string(k) + ": " +
                                      e.what(), static_cast<int>(k));
        }
        acc = k == 0 ? std::move(phi_k) : add(acc, phi_k);
    }
    return acc;
}

RelevanceVector relevance(const Tensor& phi) {
    if (phi.rank() != 1) {
        throw ShapeError("relevance: phi must be rank-1");
    }
    ensure_finite(phi, "relevance");
    const double n = l2_norm(phi);
    if (n < 1e-8) {
        return RelevanceVector::uniform(phi.dim(0));
    }
    return RelevanceVector(scale(phi, 1.0 / n));
}

}  // namespace fsseg

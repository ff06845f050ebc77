#pragma once

// Shared helpers for finite-difference checks of the analytic backward pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fsseg/embedding.hpp"
#include "fsseg/gradients.hpp"
#include "fsseg/head.hpp"

namespace gradcheck {

struct Instance {
    fsseg::HeadParams params;
    fsseg::Tensor f;
    fsseg::Tensor features;
    fsseg::RelevanceVector r{fsseg::RelevanceVector::uniform(1)};
    fsseg::BinaryMask target{1, 1};
};

// Relative error with an absolute floor: coordinates whose magnitudes are
// both below the floor compare absolutely, so finite-difference noise on
// near-zero entries does not explode the ratio.
inline double rel_err(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const std::vector<double>& a,
                          const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, rel_err(a[i], b[i]));
    }
    return worst;
}

// Central differences are only valid where the loss is smooth; a +/-h probe
// must not cross a ReLU kink. Shifts each hidden-channel bias by the
// smallest amount that clears every preactivation of that channel from the
// (-margin, margin) band. Returns the adjusted margin-verified parameters.
inline fsseg::HeadParams clear_relu_margin(fsseg::HeadParams params,
                                           const fsseg::Tensor& f,
                                           const fsseg::Tensor& features,
                                           const fsseg::RelevanceVector& r,
                                           const fsseg::BinaryMask& target,
                                           double margin = 0.02) {
    const fsseg::PipelinePoint point(params, f, features, r, target);
    const std::vector<double> pre = point.conv1_preactivations();
    const int hidden = params.conv1_weights.dim(0);
    const std::size_t plane = pre.size() / static_cast<std::size_t>(hidden);
    const double clear = margin * 1.25;  // leave headroom over the target band

    for (int o = 0; o < hidden; ++o) {
        const double* chan = pre.data() + static_cast<std::size_t>(o) * plane;
        auto min_gap = [&](double shift) {
            double gap = 1e300;
            for (std::size_t p = 0; p < plane; ++p) {
                gap = std::min(gap, std::abs(chan[p] + shift));
            }
            return gap;
        };
        if (min_gap(0.0) >= margin) continue;
        // Candidate shifts place some preactivation exactly at +/-clear.
        double best = 1e300;
        for (std::size_t p = 0; p < plane; ++p) {
            for (const double cand : {clear - chan[p], -clear - chan[p]}) {
                if (min_gap(cand) >= margin && std::abs(cand) < std::abs(best)) {
                    best = cand;
                }
            }
        }
        if (best == 1e300) {
            throw std::runtime_error("clear_relu_margin: no clearing shift found");
        }
        params.conv1_bias(o) += static_cast<float>(best);
    }

    const fsseg::PipelinePoint check(params, f, features, r, target);
    const std::vector<double> post = check.conv1_preactivations();
    for (double v : post) {
        if (std::abs(v) < margin) {
            throw std::runtime_error("clear_relu_margin: margin not achieved");
        }
    }
    return params;
}

// A random full-pipeline instance at a smooth point. Sizes follow the
// gradient-check grid: d in {2,3,8}, spatial in {2,4,6}.
inline Instance make_instance(std::uint64_t seed) {
    fsseg::Rng rng(seed);
    const int dims[] = {2, 3, 8};
    const int sizes[] = {2, 4, 6};
    const int d = dims[rng.uniform_int(3)];
    const int hw = sizes[rng.uniform_int(3)];

    Instance inst;
    inst.f = fsseg::Tensor::randn({d}, rng);
    inst.features = fsseg::Tensor::randn({d, hw, hw}, rng);
    inst.r = fsseg::relevance(fsseg::Tensor::randn({d}, rng));
    inst.target = fsseg::BinaryMask(hw, hw);
    for (auto& v : inst.target.values) {
        v = static_cast<std::uint8_t>(rng.uniform_int(2));
    }
    inst.params = clear_relu_margin(fsseg::init_head_params(d, rng), inst.f,
                                    inst.features, inst.r, inst.target);
    return inst;
}

}  // namespace gradcheck

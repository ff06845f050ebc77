#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "fsseg/boosting.hpp"
#include "fsseg/episode.hpp"
#include "fsseg/metrics.hpp"
#include "fsseg/similarity.hpp"

using namespace fsseg;

namespace {

struct Fixture {
    HeadParams params;
    std::vector<SupportExample> supports;
    Tensor query;
    RelevanceVector r{RelevanceVector::uniform(1)};
};

// A synthetic one-class episode with a lightly trained random head.
Fixture make_fixture(std::uint64_t seed, int k = 1) {
    SyntheticConfig config;
    config.d = 4;
    config.h = 4;
    config.w = 4;
    config.num_classes = 1;
    config.noise_sigma = 0.5;
    config.seed = seed;
    const SyntheticDataset data = generate_synthetic(config, k + 1);

    Fixture fx;
    Rng rng(seed ^ 0xabcdef);
    fx.params = init_head_params(config.d, rng);
    for (int i = 0; i < k; ++i) {
        const LabeledExample& ex = data.examples[static_cast<std::size_t>(i)];
        fx.supports.push_back(
            {ex.features, downsample_mask(ex.mask, config.h, config.w)});
    }
    fx.query = data.examples.back().features;
    fx.r = relevance(feature_difference_kshot(fx.supports));
    return fx;
}

}  // namespace

TEST_SUITE_BEGIN("boosting");

TEST_CASE("a single-expert ensemble is the pooled class vector, unmodified") {
    const Fixture fx = make_fixture(1);
    BoostConfig config;
    config.num_experts = 1;
    const std::vector<Expert> experts =
        build_ensemble(fx.params, fx.supports, fx.r, config);
    REQUIRE(experts.size() == 1);
    CHECK(experts[0].f == masked_pool(fx.supports[0].features, fx.supports[0].mask));
    CHECK(experts[0].confidence >= 0.0);
    CHECK(experts[0].confidence <= 1.0);
}

TEST_CASE("zero-step updates keep every expert identical") {
    const Fixture fx = make_fixture(2);
    BoostConfig config;
    config.num_experts = 5;
    config.step_size = 1e-30;  // effectively zero while staying positive
    config.optimizer = ExpertOptimizer::sgd;
    const std::vector<Expert> experts =
        build_ensemble(fx.params, fx.supports, fx.r, config);
    REQUIRE(experts.size() == 5);
    for (const Expert& e : experts) {
        CHECK(e.f == experts[0].f);
        CHECK(e.confidence == experts[0].confidence);
        CHECK(e.support_loss == experts[0].support_loss);
    }
}

TEST_CASE("sgd updates mostly decrease the support loss") {
    int descending = 0;
    const int trials = 20;
    for (std::uint64_t seed = 0; seed < trials; ++seed) {
        const Fixture fx = make_fixture(seed + 100);
        BoostConfig config;
        config.num_experts = 10;
        config.step_size = 1e-2;
        config.optimizer = ExpertOptimizer::sgd;
        const std::vector<Expert> experts =
            build_ensemble(fx.params, fx.supports, fx.r, config);
        REQUIRE(experts.size() == 10);
        bool monotone = true;
        for (std::size_t n = 1; n < experts.size(); ++n) {
            monotone = monotone &&
                       experts[n].support_loss <= experts[n - 1].support_loss + 1e-12;
        }
        if (monotone) ++descending;
    }
    CHECK(descending >= trials * 17 / 20);
}

TEST_CASE("expert confidences stay in [0,1]; exact prediction gives 1") {
    const Fixture fx = make_fixture(3);
    BoostConfig config;
    config.num_experts = 6;
    const std::vector<Expert> experts =
        build_ensemble(fx.params, fx.supports, fx.r, config);
    for (const Expert& e : experts) {
        CHECK(e.confidence >= 0.0);
        CHECK(e.confidence <= 1.0);
        const PredictedMask pred =
            predict_single(fx.params, e.f, fx.supports[0].features, fx.r);
        if (pred.binary == fx.supports[0].mask) {
            CHECK(e.confidence == 1.0);
        } else {
            CHECK(e.confidence < 1.0);
        }
    }
}

TEST_CASE("fusing one expert reproduces its prediction bit-for-bit") {
    const Fixture fx = make_fixture(4);
    BoostConfig config;
    config.num_experts = 1;
    const std::vector<Expert> experts =
        build_ensemble(fx.params, fx.supports, fx.r, config);
    const EnsembleResult fused = fuse(experts, fx.query, fx.r, fx.params);
    const PredictedMask single =
        predict_single(fx.params, experts[0].f, fx.query, fx.r);
    CHECK(fused.fused_probs == single.probs);
    CHECK(fused.fused_binary == single.binary);
}

TEST_CASE("experts with identical maps fuse to that map for any confidences") {
    const Fixture fx = make_fixture(5);
    const Tensor f = masked_pool(fx.supports[0].features, fx.supports[0].mask);
    std::vector<Expert> experts;
    for (double rho : {0.2, 0.9, 0.5}) {
        experts.push_back({f, rho, 0.0});
    }
    const EnsembleResult fused = fuse(experts, fx.query, fx.r, fx.params);
    const PredictedMask single = predict_single(fx.params, f, fx.query, fx.r);
    const std::size_t plane = static_cast<std::size_t>(fx.query.dim(1)) * fx.query.dim(2);
    for (std::size_t p = 0; p < plane; ++p) {
        CHECK(fused.fused_probs.data()[plane + p] ==
              doctest::Approx(single.probs.data()[plane + p]).epsilon(1e-6));
    }
}

TEST_CASE("fusion equals a direct weighted mean and ignores expert order") {
    const Fixture fx = make_fixture(6);
    BoostConfig config;
    config.num_experts = 3;
    config.step_size = 0.05;
    std::vector<Expert> experts = build_ensemble(fx.params, fx.supports, fx.r, config);
    REQUIRE(experts.size() == 3);
    experts[0].confidence = 0.7;
    experts[1].confidence = 0.2;
    experts[2].confidence = 0.35;

    const EnsembleResult fused = fuse(experts, fx.query, fx.r, fx.params);
    const int h = fx.query.dim(1), w = fx.query.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    double weight_sum = 0.0;
    for (const Expert& e : experts) weight_sum += e.confidence;
    std::vector<double> want(plane, 0.0);
    for (const Expert& e : experts) {
        const PredictedMask pred = predict_single(fx.params, e.f, fx.query, fx.r);
        for (std::size_t p = 0; p < plane; ++p) {
            want[p] += e.confidence / weight_sum * pred.probs.data()[plane + p];
        }
    }
    for (std::size_t p = 0; p < plane; ++p) {
        CHECK(fused.fused_probs.data()[plane + p] ==
              doctest::Approx(want[p]).epsilon(1e-6));
        // Convexity: fused foreground stays inside the experts' range.
        double lo = 1.0, hi = 0.0;
        for (const Tensor& probs : fused.per_expert_query_probs) {
            lo = std::min(lo, static_cast<double>(probs.data()[p]));
            hi = std::max(hi, static_cast<double>(probs.data()[p]));
        }
        CHECK(fused.fused_probs.data()[plane + p] >= lo - 1e-6);
        CHECK(fused.fused_probs.data()[plane + p] <= hi + 1e-6);
    }

    std::vector<Expert> shuffled{experts[2], experts[0], experts[1]};
    const EnsembleResult refused = fuse(shuffled, fx.query, fx.r, fx.params);
    CHECK(refused.fused_probs == fused.fused_probs);
    CHECK(refused.fused_binary == fused.fused_binary);
}

TEST_CASE("fused channels sum to one") {
    const Fixture fx = make_fixture(7);
    BoostConfig config;
    config.num_experts = 4;
    const std::vector<Expert> experts =
        build_ensemble(fx.params, fx.supports, fx.r, config);
    const EnsembleResult fused = fuse(experts, fx.query, fx.r, fx.params);
    const int h = fx.query.dim(1), w = fx.query.dim(2);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            CHECK(fused.fused_probs(0, y, x) + fused.fused_probs(1, y, x) ==
                  doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("build and fuse are deterministic") {
    const Fixture fx = make_fixture(8);
    BoostConfig config;
    config.num_experts = 5;
    const std::vector<Expert> a = build_ensemble(fx.params, fx.supports, fx.r, config);
    const std::vector<Expert> b = build_ensemble(fx.params, fx.supports, fx.r, config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].f == b[i].f);
        CHECK(a[i].confidence == b[i].confidence);
        CHECK(a[i].support_loss == b[i].support_loss);
    }
    CHECK(fuse(a, fx.query, fx.r, fx.params).fused_probs ==
          fuse(b, fx.query, fx.r, fx.params).fused_probs);
}

TEST_CASE("the k-shot average baseline reduces to one-shot at k=1") {
    const Fixture fx = make_fixture(9);
    const EnsembleResult avg =
        kshot_average_baseline(fx.params, fx.supports, fx.query, true);
    const Tensor f = masked_pool(fx.supports[0].features, fx.supports[0].mask);
    const RelevanceVector r =
        relevance(feature_difference(fx.supports[0].features, fx.supports[0].mask));
    const PredictedMask single = predict_single(fx.params, f, fx.query, r);
    CHECK(avg.fused_probs == single.probs);
    CHECK(avg.fused_binary == single.binary);
}

TEST_CASE("identical supports average to the single-support result") {
    const Fixture fx = make_fixture(10);
    std::vector<SupportExample> tripled{fx.supports[0], fx.supports[0],
                                        fx.supports[0]};
    const EnsembleResult one =
        kshot_average_baseline(fx.params, fx.supports, fx.query, true);
    const EnsembleResult three =
        kshot_average_baseline(fx.params, tripled, fx.query, true);
    const std::size_t plane = static_cast<std::size_t>(fx.query.dim(1)) * fx.query.dim(2);
    for (std::size_t p = 0; p < plane; ++p) {
        CHECK(three.fused_probs.data()[plane + p] ==
              doctest::Approx(one.fused_probs.data()[plane + p]).epsilon(1e-6));
    }
}

TEST_CASE("the k-shot average matches a mean-of-probabilities oracle") {
    const Fixture fx = make_fixture(11, 3);
    const EnsembleResult avg =
        kshot_average_baseline(fx.params, fx.supports, fx.query, true);
    const std::size_t plane = static_cast<std::size_t>(fx.query.dim(1)) * fx.query.dim(2);
    std::vector<double> want(plane, 0.0);
    for (const SupportExample& s : fx.supports) {
        const Tensor f = masked_pool(s.features, s.mask);
        const RelevanceVector r = relevance(feature_difference(s.features, s.mask));
        const PredictedMask pred = predict_single(fx.params, f, fx.query, r);
        for (std::size_t p = 0; p < plane; ++p) {
            want[p] += pred.probs.data()[plane + p] / 3.0;
        }
    }
    for (std::size_t p = 0; p < plane; ++p) {
        CHECK(avg.fused_probs.data()[plane + p] ==
              doctest::Approx(want[p]).epsilon(1e-6));
    }
}

TEST_CASE("degenerate support masks are rejected with their index") {
    const Fixture fx = make_fixture(12);
    std::vector<SupportExample> supports = fx.supports;
    SupportExample bad = supports[0];
    std::fill(bad.mask.values.begin(), bad.mask.values.end(), 1);
    supports.push_back(bad);
    BoostConfig config;
    try {
        build_ensemble(fx.params, supports, fx.r, config);
        FAIL("expected DegenerateMaskError");
    } catch (const DegenerateMaskError& e) {
        CHECK(e.support_index() == 1);
    }
}

TEST_SUITE_END();

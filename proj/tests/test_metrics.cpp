#include <algorithm>

#include <doctest.h>

#include "fsseg/metrics.hpp"
#include "fsseg/rng.hpp"

using namespace fsseg;

namespace {

BinaryMask mask_from(std::initializer_list<std::initializer_list<int>> rows) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows.begin()->size());
    BinaryMask m(h, w);
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (int v : row) m.at(y, x++) = static_cast<std::uint8_t>(v);
        ++y;
    }
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("identical non-empty masks score 1") {
    const BinaryMask m = mask_from({{1, 0}, {1, 1}});
    CHECK(iou(m, m) == 1.0);
}

TEST_CASE("half-overlapping masks score 0.5") {
    const BinaryMask pred = mask_from({{1, 1}, {0, 0}});
    const BinaryMask gt = mask_from({{1, 0}, {0, 0}});
    CHECK(iou(pred, gt) == doctest::Approx(0.5));
}

TEST_CASE("disjoint non-empty masks score 0") {
    const BinaryMask pred = mask_from({{1, 0}, {0, 0}});
    const BinaryMask gt = mask_from({{0, 0}, {0, 1}});
    CHECK(iou(pred, gt) == 0.0);
}

TEST_CASE("empty-mask conventions") {
    const BinaryMask empty(2, 2);
    const BinaryMask some = mask_from({{1, 0}, {0, 0}});
    CHECK(iou(empty, empty) == 1.0);
    CHECK(iou(empty, some) == 0.0);
    CHECK(iou(some, empty) == 0.0);
}

TEST_CASE("iou is symmetric and bounded on random masks") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        BinaryMask a(4, 4), b(4, 4);
        for (auto& v : a.values) v = static_cast<std::uint8_t>(rng.uniform_int(2));
        for (auto& v : b.values) v = static_cast<std::uint8_t>(rng.uniform_int(2));
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        if (a == b) CHECK(ab == 1.0);
    }
}

TEST_CASE("shape mismatch raises ShapeError") {
    CHECK_THROWS_AS(iou(BinaryMask(2, 2), BinaryMask(2, 3)), ShapeError);
}

TEST_CASE("miou of one class is its IoU") {
    ClassScore c;
    c.class_id = 3;
    c.tp = 6;
    c.fp = 2;
    c.fn = 4;
    CHECK(miou({c}) == doctest::Approx(0.5));
}

TEST_CASE("miou averages class IoUs without weighting") {
    ClassScore a, b;
    a.tp = 1;
    a.fp = 2;
    a.fn = 2;  // 0.2
    b.tp = 6;
    b.fp = 2;
    b.fn = 2;  // 0.6
    CHECK(miou({a, b}) == doctest::Approx(0.4));
}

TEST_CASE("pooled counts match a recount oracle and ignore episode order") {
    Rng rng(6);
    std::vector<std::pair<BinaryMask, BinaryMask>> episodes;
    for (int i = 0; i < 12; ++i) {
        BinaryMask p(3, 3), g(3, 3);
        for (auto& v : p.values) v = static_cast<std::uint8_t>(rng.uniform_int(2));
        for (auto& v : g.values) v = static_cast<std::uint8_t>(rng.uniform_int(2));
        episodes.emplace_back(std::move(p), std::move(g));
    }

    ClassScore forward;
    for (const auto& [p, g] : episodes) forward.accumulate(p, g);

    ClassScore reversed;
    for (auto it = episodes.rbegin(); it != episodes.rend(); ++it) {
        reversed.accumulate(it->first, it->second);
    }
    CHECK(forward.tp == reversed.tp);
    CHECK(forward.fp == reversed.fp);
    CHECK(forward.fn == reversed.fn);

    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (const auto& [p, g] : episodes) {
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            tp += p.values[i] && g.values[i];
            fp += p.values[i] && !g.values[i];
            fn += !p.values[i] && g.values[i];
        }
    }
    CHECK(forward.tp == tp);
    CHECK(forward.iou() ==
          doctest::Approx(static_cast<double>(tp) / (tp + fp + fn)));
}

TEST_CASE("undefined class scores are flagged, not poisoned") {
    ClassScore c;
    CHECK_FALSE(c.defined());
    CHECK(c.iou() == 0.0);
}

TEST_CASE("cross-validation report averages folds") {
    CHECK(crossval_report({0.4, 0.6}) == doctest::Approx(0.5));
    CHECK(crossval_report({0.37}) == doctest::Approx(0.37));
    Rng rng(7);
    std::vector<double> folds;
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        folds.push_back(rng.uniform());
        acc += folds.back();
    }
    CHECK(crossval_report(folds) == doctest::Approx(acc / 4.0));
    CHECK_THROWS_AS(crossval_report({}), DataError);
    CHECK_THROWS_AS(miou({}), DataError);
}

TEST_SUITE_END();

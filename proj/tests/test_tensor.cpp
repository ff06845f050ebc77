#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "fsseg/rng.hpp"
#include "fsseg/tensor.hpp"

using namespace fsseg;

namespace {

// Direct 6-nested-loop convolution, independent of the library path.
Tensor conv2d_oracle(const Tensor& input, const Tensor& weights,
                     const Tensor& bias, int padding) {
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = weights.dim(0), k = weights.dim(2);
    Tensor out({c_out, h, w});
    for (int o = 0; o < c_out; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = bias(o);
                for (int i = 0; i < c_in; ++i) {
                    for (int dy = 0; dy < k; ++dy) {
                        for (int dx = 0; dx < k; ++dx) {
                            const int sy = y + dy - padding, sx = x + dx - padding;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            acc += static_cast<double>(weights(o, i, dy, dx)) *
                                   input(i, sy, sx);
                        }
                    }
                }
                out(o, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / scale;
}

}  // namespace

TEST_SUITE_BEGIN("tensor_core");

TEST_CASE("conv2d 1x1 identity kernel reproduces the input") {
    Rng rng(11);
    const Tensor input = Tensor::randn({3, 4, 5}, rng);
    Tensor weights({3, 3, 1, 1});
    for (int o = 0; o < 3; ++o) weights(o, o, 0, 0) = 1.0f;
    const Tensor bias({3});
    const Tensor out = conv2d(input, weights, bias, 0);
    for (std::size_t i = 0; i < input.data().size(); ++i) {
        CHECK(out.data()[i] == doctest::Approx(input.data()[i]).epsilon(1e-6));
    }
}

TEST_CASE("conv2d on zero input yields the bias per channel") {
    Rng rng(12);
    const Tensor input({2, 3, 3});
    const Tensor weights = Tensor::randn({4, 2, 3, 3}, rng);
    const Tensor bias({4}, {0.5f, -1.0f, 2.0f, 0.0f});
    const Tensor out = conv2d(input, weights, bias, 1);
    for (int o = 0; o < 4; ++o) {
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 3; ++x) {
                CHECK(out(o, y, x) == doctest::Approx(bias(o)));
            }
        }
    }
}

TEST_CASE("conv2d matches the nested-loop oracle on random cases") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const Tensor input = Tensor::randn({2, 5, 4}, rng);
        const Tensor weights = Tensor::randn({2, 2, 3, 3}, rng);
        const Tensor bias = Tensor::randn({2}, rng);
        const Tensor got = conv2d(input, weights, bias, 1);
        const Tensor want = conv2d_oracle(input, weights, bias, 1);
        for (std::size_t i = 0; i < got.data().size(); ++i) {
            CHECK(rel_err(got.data()[i], want.data()[i]) < 1e-5);
        }
    }
}

TEST_CASE("conv2d is linear in its input with zero bias") {
    Rng rng(21);
    const Tensor x = Tensor::randn({2, 6, 6}, rng);
    const Tensor y = Tensor::randn({2, 6, 6}, rng);
    const Tensor weights = Tensor::randn({3, 2, 3, 3}, rng);
    const Tensor bias({3});
    const double a = 0.7, b = -1.3;
    const Tensor lhs = conv2d(add(scale(x, a), scale(y, b)), weights, bias, 1);
    const Tensor rhs =
        add(scale(conv2d(x, weights, bias, 1), a), scale(conv2d(y, weights, bias, 1), b));
    for (std::size_t i = 0; i < lhs.data().size(); ++i) {
        CHECK(rel_err(lhs.data()[i], rhs.data()[i]) < 1e-5);
    }
}

TEST_CASE("conv2d rejects bad shapes and padding") {
    const Tensor input({2, 4, 4});
    const Tensor bias({3});
    CHECK_THROWS_AS(conv2d(input, Tensor({3, 2, 2, 2}), bias, 0), ShapeError);
    CHECK_THROWS_AS(conv2d(input, Tensor({3, 2, 3, 3}), bias, 0), ShapeError);
    CHECK_THROWS_AS(conv2d(input, Tensor({3, 1, 3, 3}), bias, 1), ShapeError);
    CHECK_THROWS_AS(conv2d(input, Tensor({3, 2, 3, 3}), Tensor({2}), 1), ShapeError);
}

TEST_CASE("softmax2 is 0.5/0.5 on equal logits") {
    Tensor logits({2, 2, 2});
    const Tensor probs = softmax2(logits);
    for (std::size_t i = 0; i < probs.data().size(); ++i) {
        CHECK(probs.data()[i] == doctest::Approx(0.5));
    }
}

TEST_CASE("softmax2 matches the closed-form sigmoid at margin ln 3") {
    const float c = static_cast<float>(std::log(3.0));
    Tensor logits({2, 1, 1}, {1.0f, 1.0f + c});
    const Tensor probs = softmax2(logits);
    CHECK(probs(1, 0, 0) == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(probs(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("softmax2 is invariant to a per-position shift and sums to 1") {
    Rng rng(31);
    const Tensor logits = Tensor::randn({2, 3, 4}, rng);
    const Tensor shifted = add_scalar(logits, 123.25);
    const Tensor p0 = softmax2(logits), p1 = softmax2(shifted);
    for (std::size_t i = 0; i < p0.data().size(); ++i) {
        CHECK(p0.data()[i] == doctest::Approx(p1.data()[i]).epsilon(1e-6));
    }
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 4; ++x) {
            CHECK(p0(0, y, x) + p0(1, y, x) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("elementwise ops and reductions match brute-force loops") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        Rng rng(seed);
        const Tensor a = Tensor::randn({4, 8, 8}, rng);
        const Tensor b = Tensor::randn({4, 8, 8}, rng);

        const Tensor sum = add(a, b), diff = sub(a, b), prod = mul(a, b);
        const Tensor rl = relu(a);
        double dot_ref = 0.0, norm_ref = 0.0;
        for (std::size_t i = 0; i < a.data().size(); ++i) {
            CHECK(sum.data()[i] == a.data()[i] + b.data()[i]);
            CHECK(diff.data()[i] == a.data()[i] - b.data()[i]);
            CHECK(prod.data()[i] == a.data()[i] * b.data()[i]);
            CHECK(rl.data()[i] == (a.data()[i] > 0 ? a.data()[i] : 0.0f));
            dot_ref += static_cast<double>(a.data()[i]) * b.data()[i];
            norm_ref += static_cast<double>(a.data()[i]) * a.data()[i];
        }
        CHECK(rel_err(dot(a, b), dot_ref) < 1e-12);
        CHECK(rel_err(l2_norm(a), std::sqrt(norm_ref)) < 1e-12);
    }
}

TEST_CASE("per-position reductions match scalar loops") {
    Rng rng(41);
    const Tensor features = Tensor::randn({3, 4, 5}, rng);
    const Tensor v = Tensor::randn({3}, rng);
    const Tensor dots = per_position_dot(features, v);
    const Tensor norms = per_position_norm(features);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) {
            double dref = 0.0, nref = 0.0;
            for (int c = 0; c < 3; ++c) {
                dref += static_cast<double>(features(c, y, x)) * v(c);
                nref += static_cast<double>(features(c, y, x)) * features(c, y, x);
            }
            CHECK(rel_err(dots(y, x), dref) < 1e-6);
            CHECK(rel_err(norms(y, x), std::sqrt(nref)) < 1e-6);
        }
    }
}

TEST_CASE("concat_channels stacks in order") {
    Rng rng(51);
    const Tensor a = Tensor::randn({2, 3, 3}, rng);
    const Tensor b = Tensor::randn({1, 3, 3}, rng);
    const Tensor cat = concat_channels(a, b);
    REQUIRE(cat.dim(0) == 3);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) {
            CHECK(cat(0, y, x) == a(0, y, x));
            CHECK(cat(1, y, x) == a(1, y, x));
            CHECK(cat(2, y, x) == b(0, y, x));
        }
    }
    CHECK_THROWS_AS(concat_channels(a, Tensor({1, 2, 3})), ShapeError);
}

TEST_CASE("block_mean averages whole blocks") {
    Rng rng(61);
    const Tensor g = Tensor::randn({4, 6}, rng);
    const Tensor m = block_mean(g, 2, 3);
    REQUIRE(m.shape() == std::vector<int>{2, 2});
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            double acc = 0.0;
            for (int by = 0; by < 2; ++by) {
                for (int bx = 0; bx < 3; ++bx) acc += g(y * 2 + by, x * 3 + bx);
            }
            CHECK(m(y, x) == doctest::Approx(acc / 6.0));
        }
    }
    CHECK_THROWS_AS(block_mean(g, 3, 2), ShapeError);
}

TEST_CASE("equal seeds give identical streams, different seeds diverge") {
    Rng a(777), b(777), c(778);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 10000; ++i) {
        const double va = a.normal(), vb = b.normal();
        all_equal = all_equal && (va == vb);
        any_diff = any_diff || (va != c.normal());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform_int covers the range without escaping it") {
    Rng rng(91);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const std::uint32_t v = rng.uniform_int(7);
        REQUIRE(v < 7);
        ++hits[v];
    }
    for (int h : hits) CHECK(h > 700);
}

TEST_CASE("non-finite values are rejected, not propagated") {
    CHECK_THROWS_AS(Tensor({2}, {1.0f, std::numeric_limits<float>::infinity()}),
                    NonFiniteError);
    const Tensor big = Tensor::full({2}, 3e38f);
    CHECK_THROWS_AS(add(big, big), NonFiniteError);
}

TEST_SUITE_END();

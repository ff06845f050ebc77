#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

#include "fsseg/error.hpp"
#include "fsseg/rng.hpp"

namespace fsseg {

// Dense row-major tensor with float storage. Reductions, dot products and
// convolution inner sums accumulate in double. Public operations validate
// that their results are finite and throw NonFiniteError otherwise.
//
// Layout convention is channel-first throughout the library: feature maps
// are [d, h, w], per-position feature columns are contiguous in (h, w).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);  // zero-filled
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor full(std::vector<int> shape, float value);
    static Tensor randn(std::vector<int> shape, Rng& rng);

    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    const std::vector<int>& shape() const { return shape_; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float operator()(int i) const {
        assert(rank() == 1);
        return data_[static_cast<std::size_t>(i)];
    }
    float& operator()(int i) {
        assert(rank() == 1);
        return data_[static_cast<std::size_t>(i)];
    }
    float operator()(int i, int j) const {
        assert(rank() == 2);
        return data_[static_cast<std::size_t>(i) * shape_[1] + j];
    }
    float& operator()(int i, int j) {
        assert(rank() == 2);
        return data_[static_cast<std::size_t>(i) * shape_[1] + j];
    }
    float operator()(int i, int j, int k) const {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float& operator()(int i, int j, int k) {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float operator()(int i, int j, int k, int l) const {
        assert(rank() == 4);
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) *
                         shape_[3] + l];
    }
    float& operator()(int i, int j, int k, int l) {
        assert(rank() == 4);
        return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) *
                         shape_[3] + l];
    }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

bool same_shape(const Tensor& a, const Tensor& b);

// Throws NonFiniteError if any element of t is NaN or infinite.
void ensure_finite(const Tensor& t, const char* context);

// Elementwise arithmetic; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// Reductions accumulate in double.
double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);

Tensor relu(const Tensor& a);

// Stacks b's channels after a's; both [c, h, w] with equal h, w.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// 2-D convolution (cross-correlation) with zero padding. input [c_in, h, w],
// weights [c_out, c_in, k, k], bias [c_out]; k must be odd and padding must
// equal (k - 1) / 2 so the spatial size is preserved.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int padding);

// Two-channel softmax over the channel axis of [2, h, w], computed with
// max-subtraction per position.
Tensor softmax2(const Tensor& logits);

// Per-position channel reductions over [d, h, w].
Tensor per_position_dot(const Tensor& features, const Tensor& v);  // -> [h, w]
Tensor per_position_norm(const Tensor& features);                  // -> [h, w]

// Block-average spatial downsampling of a rank-2 grid; h % block_h == 0 and
// w % block_w == 0.
Tensor block_mean(const Tensor& grid, int block_h, int block_w);

}  // namespace fsseg

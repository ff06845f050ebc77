#include "fsseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

namespace fsseg {

namespace {

std::int64_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty()) {
        throw ShapeError("tensor shape must have at least one dimension");
    }
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) {
            throw ShapeError("tensor dimensions must be positive, got " +
                             std::to_string(d));
        }
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!same_shape(a, b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) {
    const std::int64_t n = checked_numel(shape);
    shape_ = std::move(shape);
    data_.assign(static_cast<std::size_t>(n), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data) {
    const std::int64_t n = checked_numel(shape);
    if (n != static_cast<std::int64_t>(data.size())) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
    shape_ = std::move(shape);
    data_ = std::move(data);
    ensure_finite(*this, "Tensor construction");
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    ensure_finite(t, "Tensor::full");
    return t;
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data_) {
        v = static_cast<float>(rng.normal());
    }
    return t;
}

bool same_shape(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape();
}

void ensure_finite(const Tensor& t, const char* context) {
    for (float v : t.data()) {
        if (!std::isfinite(v)) {
            throw NonFiniteError(std::string(context) +
                                 ": tensor contains a non-finite value");
        }
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    auto oa = a.data(), ob = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] + ob[i];
    ensure_finite(out, "add");
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    auto oa = a.data(), ob = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] - ob[i];
    ensure_finite(out, "sub");
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    auto oa = a.data(), ob = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] * ob[i];
    ensure_finite(out, "mul");
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out(a.shape());
    auto oa = a.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        od[i] = static_cast<float>(oa[i] * s);
    }
    ensure_finite(out, "scale");
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    Tensor out(a.shape());
    auto oa = a.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        od[i] = static_cast<float>(oa[i] + s);
    }
    ensure_finite(out, "add_scalar");
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    auto oa = a.data(), ob = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < oa.size(); ++i) {
        acc += static_cast<double>(oa[i]) * static_cast<double>(ob[i]);
    }
    if (!std::isfinite(acc)) throw NonFiniteError("dot: non-finite result");
    return acc;
}

double l2_norm(const Tensor& a) {
    auto oa = a.data();
    double acc = 0.0;
    for (float v : oa) acc += static_cast<double>(v) * static_cast<double>(v);
    const double n = std::sqrt(acc);
    if (!std::isfinite(n)) throw NonFiniteError("l2_norm: non-finite result");
    return n;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    auto oa = a.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = oa[i] > 0.0f ? oa[i] : 0.0f;
    ensure_finite(out, "relu");
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) ||
        a.dim(2) != b.dim(2)) {
        throw ShapeError("concat_channels: inputs must be [c,h,w] with equal h,w");
    }
    Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    auto od = out.data();
    std::copy(a.data().begin(), a.data().end(), od.begin());
    std::copy(b.data().begin(), b.data().end(),
              od.begin() + static_cast<std::ptrdiff_t>(a.numel()));
    ensure_finite(out, "concat_channels");
    return out;
}

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int padding) {
    if (input.rank() != 3 || weights.rank() != 4 || bias.rank() != 1) {
        throw ShapeError("conv2d: expected input [c_in,h,w], weights "
                         "[c_out,c_in,k,k], bias [c_out]");
    }
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = weights.dim(0), k = weights.dim(2);
    if (weights.dim(1) != c_in || weights.dim(3) != k || bias.dim(0) != c_out) {
        throw ShapeError("conv2d: weight/bias shapes inconsistent with input");
    }
    if (k % 2 == 0 || padding != (k - 1) / 2) {
        throw ShapeError("conv2d: kernel must be odd with padding (k-1)/2");
    }

    Tensor out({c_out, h, w});
    const float* in = input.data().data();
    const float* wt = weights.data().data();
    float* ot = out.data().data();
    std::vector<double> acc(static_cast<std::size_t>(h) * w);

    for (int o = 0; o < c_out; ++o) {
        std::fill(acc.begin(), acc.end(), static_cast<double>(bias(o)));
        for (int i = 0; i < c_in; ++i) {
            const float* plane = in + static_cast<std::size_t>(i) * h * w;
            for (int dy = 0; dy < k; ++dy) {
                for (int dx = 0; dx < k; ++dx) {
                    const double wv =
                        wt[((static_cast<std::size_t>(o) * c_in + i) * k + dy) * k + dx];
                    if (wv == 0.0) continue;
                    const int sy = dy - padding, sx = dx - padding;
                    const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
                    const int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
                    for (int y = y0; y < y1; ++y) {
                        const float* src = plane + static_cast<std::size_t>(y + sy) * w + sx;
                        double* dst = acc.data() + static_cast<std::size_t>(y) * w;
                        for (int x = x0; x < x1; ++x) {
                            dst[x] += wv * src[x];
                        }
                    }
                }
            }
        }
        float* oplane = ot + static_cast<std::size_t>(o) * h * w;
        for (std::size_t p = 0; p < acc.size(); ++p) {
            oplane[p] = static_cast<float>(acc[p]);
        }
    }
    ensure_finite(out, "conv2d");
    return out;
}

Tensor softmax2(const Tensor& logits) {
    if (logits.rank() != 3 || logits.dim(0) != 2) {
        throw ShapeError("softmax2: expected logits [2,h,w]");
    }
    ensure_finite(logits, "softmax2 input");
    const int h = logits.dim(1), w = logits.dim(2);
    Tensor out({2, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double z0 = logits(0, y, x), z1 = logits(1, y, x);
            const double m = std::max(z0, z1);
            const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
            const double sum = e0 + e1;
            out(0, y, x) = static_cast<float>(e0 / sum);
            out(1, y, x) = static_cast<float>(e1 / sum);
        }
    }
    ensure_finite(out, "softmax2");
    return out;
}

Tensor per_position_dot(const Tensor& features, const Tensor& v) {
    if (features.rank() != 3 || v.rank() != 1 || features.dim(0) != v.dim(0)) {
        throw ShapeError("per_position_dot: expected [d,h,w] features and [d] vector");
    }
    const int d = features.dim(0), h = features.dim(1), w = features.dim(2);
    Tensor out({h, w});
    const float* in = features.data().data();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            double acc = 0.0;
            for (int c = 0; c < d; ++c) {
                acc += static_cast<double>(in[c * plane + p]) * v(c);
            }
            out(y, x) = static_cast<float>(acc);
        }
    }
    ensure_finite(out, "per_position_dot");
    return out;
}

Tensor per_position_norm(const Tensor& features) {
    if (features.rank() != 3) {
        throw ShapeError("per_position_norm: expected [d,h,w] features");
    }
    const int d = features.dim(0), h = features.dim(1), w = features.dim(2);
    Tensor out({h, w});
    const float* in = features.data().data();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            double acc = 0.0;
            for (int c = 0; c < d; ++c) {
                const double fv = in[c * plane + p];
                acc += fv * fv;
            }
            out(y, x) = static_cast<float>(std::sqrt(acc));
        }
    }
    ensure_finite(out, "per_position_norm");
    return out;
}

Tensor block_mean(const Tensor& grid, int block_h, int block_w) {
    if (grid.rank() != 2) {
        throw ShapeError("block_mean: expected rank-2 grid");
    }
    const int h = grid.dim(0), w = grid.dim(1);
    if (block_h <= 0 || block_w <= 0 || h % block_h != 0 || w % block_w != 0) {
        throw ShapeError("block_mean: grid size must be divisible by block size");
    }
    const int oh = h / block_h, ow = w / block_w;
    Tensor out({oh, ow});
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int by = 0; by < block_h; ++by) {
                for (int bx = 0; bx < block_w; ++bx) {
                    acc += grid(y * block_h + by, x * block_w + bx);
                }
            }
            out(y, x) = static_cast<float>(acc / (static_cast<double>(block_h) * block_w));
        }
    }
    ensure_finite(out, "block_mean");
    return out;
}

}  // namespace fsseg

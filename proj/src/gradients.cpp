#include "fsseg/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsseg/similarity.hpp"

namespace fsseg {

namespace {

std::vector<double> to_double(const Tensor& t) {
    return {t.data().begin(), t.data().end()};
}

// Full double-precision forward record of the episode pipeline.
struct ForwardRecord {
    int d = 0, h = 0, w = 0, hidden = 0;
    std::vector<double> a;       // f .* r
    double a_norm = 0.0;
    std::vector<double> num;     // per position a . A_p
    std::vector<double> b_norm;  // per position ||A_p||
    std::vector<double> sim;     // similarity map, plane
    std::vector<double> hidden_pre;   // conv1 preactivations, hidden x plane
    std::vector<double> hidden_post;  // relu, hidden x plane
    std::vector<double> logits;       // 2 x plane
    std::vector<double> probs;        // 2 x plane
    double loss = 0.0;
};

struct Leaves {
    int d = 0, h = 0, w = 0, hidden = 0;
    const double* w1;        // [hidden][d+1][3][3]
    const double* b1;        // [hidden]
    const double* w2;        // [2][hidden]
    const double* b2;        // [2]
    const double* f;         // [d]
    const double* features;  // [d][h][w]
    const double* r;         // [d]
    const std::uint8_t* target;  // [h][w]
};

ForwardRecord run_forward(const Leaves& lv) {
    ForwardRecord fr;
    fr.d = lv.d;
    fr.h = lv.h;
    fr.w = lv.w;
    fr.hidden = lv.hidden;
    const int d = lv.d, h = lv.h, w = lv.w, hidden = lv.hidden;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int in_ch = d + 1;

    // Weighted cosine similarity map.
    fr.a.resize(static_cast<std::size_t>(d));
    double a_sq = 0.0;
    for (int c = 0; c < d; ++c) {
        fr.a[static_cast<std::size_t>(c)] = lv.f[c] * lv.r[c];
        a_sq += fr.a[static_cast<std::size_t>(c)] * fr.a[static_cast<std::size_t>(c)];
    }
    fr.a_norm = std::sqrt(a_sq);
    fr.num.resize(plane);
    fr.b_norm.resize(plane);
    fr.sim.resize(plane);
    for (std::size_t p = 0; p < plane; ++p) {
        double num = 0.0, b_sq = 0.0;
        for (int c = 0; c < d; ++c) {
            const double b = lv.features[c * plane + p] * lv.r[c];
            num += fr.a[static_cast<std::size_t>(c)] * b;
            b_sq += b * b;
        }
        fr.num[p] = num;
        fr.b_norm[p] = std::sqrt(b_sq);
        fr.sim[p] = num / (fr.a_norm * fr.b_norm[p] + kCosineEpsilon);
    }

    // 3x3 convolution over concat(sim, features), zero padding 1, then ReLU.
    fr.hidden_pre.assign(static_cast<std::size_t>(hidden) * plane, 0.0);
    auto input_at = [&](int i, int y, int x) -> double {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        return i == 0 ? fr.sim[p] : lv.features[(i - 1) * plane + p];
    };
    for (int o = 0; o < hidden; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = lv.b1[o];
                for (int i = 0; i < in_ch; ++i) {
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            acc += lv.w1[((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx] *
                                   input_at(i, y + ky - 1, x + kx - 1);
                        }
                    }
                }
                fr.hidden_pre[static_cast<std::size_t>(o) * plane +
                              static_cast<std::size_t>(y) * w + x] = acc;
            }
        }
    }
    fr.hidden_post.resize(fr.hidden_pre.size());
    for (std::size_t i = 0; i < fr.hidden_pre.size(); ++i) {
        fr.hidden_post[i] = fr.hidden_pre[i] > 0.0 ? fr.hidden_pre[i] : 0.0;
    }

    // 1x1 convolution to 2 logit channels, softmax, mean cross-entropy.
    fr.logits.assign(2 * plane, 0.0);
    for (int o = 0; o < 2; ++o) {
        for (std::size_t p = 0; p < plane; ++p) {
            double acc = lv.b2[o];
            for (int c = 0; c < hidden; ++c) {
                acc += lv.w2[o * hidden + c] * fr.hidden_post[static_cast<std::size_t>(c) * plane + p];
            }
            fr.logits[static_cast<std::size_t>(o) * plane + p] = acc;
        }
    }
    fr.probs.resize(2 * plane);
    double loss_acc = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
        const double z0 = fr.logits[p], z1 = fr.logits[plane + p];
        const double m = std::max(z0, z1);
        const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        const double sum = e0 + e1;
        fr.probs[p] = e0 / sum;
        fr.probs[plane + p] = e1 / sum;
        const double lse = m + std::log(sum);
        loss_acc += lse - (lv.target[p] ? z1 : z0);
    }
    fr.loss = loss_acc / static_cast<double>(plane);
    return fr;
}

struct Gradients {
    std::vector<double> d_f;
    std::vector<double> d_w1, d_b1, d_w2, d_b2;
};

Gradients run_backward(const Leaves& lv, const ForwardRecord& fr, Wrt wrt) {
    const int d = lv.d, h = lv.h, w = lv.w, hidden = lv.hidden;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int in_ch = d + 1;
    const bool want_params = wrt != Wrt::class_vector;
    const bool want_f = wrt != Wrt::params;

    // d loss / d logits.
    std::vector<double> d_logits(2 * plane);
    const double inv_n = 1.0 / static_cast<double>(plane);
    for (std::size_t p = 0; p < plane; ++p) {
        const int t = lv.target[p] ? 1 : 0;
        d_logits[p] = (fr.probs[p] - (t == 0 ? 1.0 : 0.0)) * inv_n;
        d_logits[plane + p] = (fr.probs[plane + p] - (t == 1 ? 1.0 : 0.0)) * inv_n;
    }

    Gradients g;
    if (want_params) {
        g.d_b2.assign(2, 0.0);
        g.d_w2.assign(2 * static_cast<std::size_t>(hidden), 0.0);
        for (int o = 0; o < 2; ++o) {
            double b_acc = 0.0;
            for (std::size_t p = 0; p < plane; ++p) {
                b_acc += d_logits[static_cast<std::size_t>(o) * plane + p];
            }
            g.d_b2[static_cast<std::size_t>(o)] = b_acc;
            for (int c = 0; c < hidden; ++c) {
                double acc = 0.0;
                for (std::size_t p = 0; p < plane; ++p) {
                    acc += d_logits[static_cast<std::size_t>(o) * plane + p] *
                           fr.hidden_post[static_cast<std::size_t>(c) * plane + p];
                }
                g.d_w2[static_cast<std::size_t>(o) * hidden + c] = acc;
            }
        }
    }

    // d loss / d hidden (post-ReLU), then gate through the ReLU mask.
    std::vector<double> d_hidden(static_cast<std::size_t>(hidden) * plane);
    for (int c = 0; c < hidden; ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
            const double dv = lv.w2[0 * hidden + c] * d_logits[p] +
                              lv.w2[1 * hidden + c] * d_logits[plane + p];
            const std::size_t idx = static_cast<std::size_t>(c) * plane + p;
            d_hidden[idx] = fr.hidden_pre[idx] > 0.0 ? dv : 0.0;
        }
    }

    auto input_at = [&](int i, int y, int x) -> double {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        return i == 0 ? fr.sim[p] : lv.features[(i - 1) * plane + p];
    };

    if (want_params) {
        g.d_b1.assign(static_cast<std::size_t>(hidden), 0.0);
        g.d_w1.assign(static_cast<std::size_t>(hidden) * in_ch * 9, 0.0);
        for (int o = 0; o < hidden; ++o) {
            double b_acc = 0.0;
            for (std::size_t p = 0; p < plane; ++p) {
                b_acc += d_hidden[static_cast<std::size_t>(o) * plane + p];
            }
            g.d_b1[static_cast<std::size_t>(o)] = b_acc;
            for (int i = 0; i < in_ch; ++i) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        double acc = 0.0;
                        for (int y = 0; y < h; ++y) {
                            for (int x = 0; x < w; ++x) {
                                acc += d_hidden[static_cast<std::size_t>(o) * plane +
                                                static_cast<std::size_t>(y) * w + x] *
                                       input_at(i, y + ky - 1, x + kx - 1);
                            }
                        }
                        g.d_w1[((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx] = acc;
                    }
                }
            }
        }
    }

    if (want_f) {
        // Only the similarity channel of the conv1 input feeds the class
        // vector, so propagate just channel 0 through the transposed conv.
        std::vector<double> d_sim(plane, 0.0);
        for (int o = 0; o < hidden; ++o) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv =
                        lv.w1[((static_cast<std::size_t>(o) * in_ch + 0) * 3 + ky) * 3 + kx];
                    if (wv == 0.0) continue;
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= h) continue;
                        for (int x = 0; x < w; ++x) {
                            const int sx = x + kx - 1;
                            if (sx < 0 || sx >= w) continue;
                            d_sim[static_cast<std::size_t>(sy) * w + sx] +=
                                wv * d_hidden[static_cast<std::size_t>(o) * plane +
                                              static_cast<std::size_t>(y) * w + x];
                        }
                    }
                }
            }
        }

        // Cosine backward: s = n / q with n = a.A_p, q = ||a|| ||A_p|| + eps,
        // a = f .* r. d s / d a = A_p / q - n ||A_p|| a / (q^2 ||a||), with
        // the second term vanishing as a -> 0 (guarded division).
        g.d_f.assign(static_cast<std::size_t>(d), 0.0);
        const double a_norm_safe = std::max(fr.a_norm, 1e-300);
        for (std::size_t p = 0; p < plane; ++p) {
            const double ds = d_sim[p];
            if (ds == 0.0) continue;
            const double q = fr.a_norm * fr.b_norm[p] + kCosineEpsilon;
            const double coef = fr.num[p] * fr.b_norm[p] / (q * q * a_norm_safe);
            for (int c = 0; c < d; ++c) {
                const double A_cp = lv.features[c * plane + p] * lv.r[c];
                const double ds_da = A_cp / q - coef * fr.a[static_cast<std::size_t>(c)];
                g.d_f[static_cast<std::size_t>(c)] += ds * ds_da * lv.r[c];
            }
        }
    }
    return g;
}

void check_grad_finite(const std::vector<double>& g, const char* what) {
    for (double v : g) {
        if (!std::isfinite(v)) {
            throw NonFiniteError(std::string("backward: non-finite gradient in ") + what);
        }
    }
}

Tensor to_tensor(std::vector<int> shape, const std::vector<double>& v) {
    std::vector<float> data(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) data[i] = static_cast<float>(v[i]);
    return Tensor(std::move(shape), std::move(data));
}

void validate_pipeline_inputs(const HeadParams& params, const Tensor& f,
                              const Tensor& features, const RelevanceVector& r,
                              const BinaryMask& target) {
    validate_head_params(params);
    if (f.rank() != 1 || features.rank() != 3 || f.dim(0) != features.dim(0) ||
        f.dim(0) != params.feature_dim() || r.dim() != f.dim(0) ||
        features.dim(1) != target.height || features.dim(2) != target.width) {
        throw ShapeError("pipeline: inconsistent class vector / features / "
                         "relevance / target shapes");
    }
    ensure_finite(f, "pipeline class vector");
    ensure_finite(features, "pipeline features");
    validate_mask(target, "pipeline");
}

}  // namespace

PipelinePoint::PipelinePoint(const HeadParams& params, const Tensor& f,
                             const Tensor& features, const RelevanceVector& r,
                             const BinaryMask& target) {
    validate_pipeline_inputs(params, f, features, r, target);

    d_ = f.dim(0);
    h_ = features.dim(1);
    w_ = features.dim(2);
    hidden_ = params.conv1_weights.dim(0);
    w1_ = to_double(params.conv1_weights);
    b1_ = to_double(params.conv1_bias);
    w2_ = to_double(params.conv2_weights);
    b2_ = to_double(params.conv2_bias);
    f_ = to_double(f);
    features_ = to_double(features);
    r_ = to_double(r.values());
    target_ = target.values;
}

std::vector<double> PipelinePoint::class_vector() const { return f_; }

std::vector<double> PipelinePoint::params_flat() const {
    std::vector<double> flat;
    flat.reserve(w1_.size() + b1_.size() + w2_.size() + b2_.size());
    flat.insert(flat.end(), w1_.begin(), w1_.end());
    flat.insert(flat.end(), b1_.begin(), b1_.end());
    flat.insert(flat.end(), w2_.begin(), w2_.end());
    flat.insert(flat.end(), b2_.begin(), b2_.end());
    return flat;
}

double PipelinePoint::loss_with_class_vector(
    const std::vector<double>& f_values) const {
    if (f_values.size() != f_.size()) {
        throw ShapeError("loss_with_class_vector: wrong vector length");
    }
    Leaves lv{d_, h_, w_, hidden_, w1_.data(), b1_.data(), w2_.data(),
              b2_.data(), f_values.data(), features_.data(), r_.data(),
              target_.data()};
    return run_forward(lv).loss;
}

double PipelinePoint::loss_with_params(
    const std::vector<double>& params_flat) const {
    const std::size_t expect = w1_.size() + b1_.size() + w2_.size() + b2_.size();
    if (params_flat.size() != expect) {
        throw ShapeError("loss_with_params: wrong vector length");
    }
    const double* base = params_flat.data();
    Leaves lv{d_, h_, w_, hidden_, base, base + w1_.size(),
              base + w1_.size() + b1_.size(),
              base + w1_.size() + b1_.size() + w2_.size(), f_.data(),
              features_.data(), r_.data(), target_.data()};
    return run_forward(lv).loss;
}

std::vector<double> PipelinePoint::conv1_preactivations() const {
    Leaves lv{d_, h_, w_, hidden_, w1_.data(), b1_.data(), w2_.data(),
              b2_.data(), f_.data(), features_.data(), r_.data(),
              target_.data()};
    return run_forward(lv).hidden_pre;
}

GradBundle backward(const HeadParams& params, const Tensor& f,
                    const Tensor& features, const RelevanceVector& r,
                    const BinaryMask& target, Wrt wrt) {
    validate_pipeline_inputs(params, f, features, r, target);

    const std::vector<double> w1 = to_double(params.conv1_weights);
    const std::vector<double> b1 = to_double(params.conv1_bias);
    const std::vector<double> w2 = to_double(params.conv2_weights);
    const std::vector<double> b2 = to_double(params.conv2_bias);
    const std::vector<double> fv = to_double(f);
    const std::vector<double> feat = to_double(features);
    const std::vector<double> rv = to_double(r.values());

    Leaves lv{f.dim(0), features.dim(1), features.dim(2),
              params.conv1_weights.dim(0), w1.data(), b1.data(), w2.data(),
              b2.data(), fv.data(), feat.data(), rv.data(),
              target.values.data()};
    const ForwardRecord fr = run_forward(lv);
    if (!std::isfinite(fr.loss)) {
        throw NonFiniteError("backward: non-finite loss");
    }
    const Gradients g = run_backward(lv, fr, wrt);

    GradBundle out;
    out.loss = fr.loss;
    if (wrt != Wrt::params) {
        check_grad_finite(g.d_f, "class vector");
        out.d_class_vector = to_tensor({f.dim(0)}, g.d_f);
    }
    if (wrt != Wrt::class_vector) {
        check_grad_finite(g.d_w1, "conv1 weights");
        check_grad_finite(g.d_b1, "conv1 bias");
        check_grad_finite(g.d_w2, "conv2 weights");
        check_grad_finite(g.d_b2, "conv2 bias");
        out.d_params.conv1_weights =
            to_tensor(params.conv1_weights.shape(), g.d_w1);
        out.d_params.conv1_bias = to_tensor(params.conv1_bias.shape(), g.d_b1);
        out.d_params.conv2_weights =
            to_tensor(params.conv2_weights.shape(), g.d_w2);
        out.d_params.conv2_bias = to_tensor(params.conv2_bias.shape(), g.d_b2);
    }
    return out;
}

double pipeline_loss(const HeadParams& params, const Tensor& f,
                     const Tensor& features, const RelevanceVector& r,
                     const BinaryMask& target) {
    const PipelinePoint point(params, f, features, r, target);
    return point.loss_with_class_vector(point.class_vector());
}

std::vector<double> finite_diff_oracle(
    const std::function<double(const std::vector<double>&)>& loss_fn,
    const std::vector<double>& point, double step) {
    if (step <= 0.0) {
        throw DataError("finite_diff_oracle: step must be positive");
    }
    std::vector<double> grad(point.size());
    std::vector<double> probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        probe[i] = point[i] + step;
        const double up = loss_fn(probe);
        probe[i] = point[i] - step;
        const double down = loss_fn(probe);
        probe[i] = point[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace fsseg

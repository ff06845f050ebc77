#include "fsseg/head.hpp"

#include <cmath>
#include <string>

#include "fsseg/embedding.hpp"
#include "fsseg/gradients.hpp"

namespace fsseg {

void validate_head_params(const HeadParams& params) {
    if (params.conv1_weights.rank() != 4 ||
        params.conv1_weights.dim(0) != kHiddenChannels ||
        params.conv1_weights.dim(2) != kHeadKernel ||
        params.conv1_weights.dim(3) != kHeadKernel) {
        throw ShapeError("head params: conv1 weights must be [128, d+1, 3, 3]");
    }
    if (params.conv1_weights.dim(1) < 2) {
        throw ShapeError("head params: conv1 input channels must be >= 2");
    }
    if (params.conv1_bias.rank() != 1 || params.conv1_bias.dim(0) != kHiddenChannels) {
        throw ShapeError("head params: conv1 bias must be [128]");
    }
    if (params.conv2_weights.rank() != 4 || params.conv2_weights.dim(0) != 2 ||
        params.conv2_weights.dim(1) != kHiddenChannels ||
        params.conv2_weights.dim(2) != 1 || params.conv2_weights.dim(3) != 1) {
        throw ShapeError("head params: conv2 weights must be [2, 128, 1, 1]");
    }
    if (params.conv2_bias.rank() != 1 || params.conv2_bias.dim(0) != 2) {
        throw ShapeError("head params: conv2 bias must be [2]");
    }
    ensure_finite(params.conv1_weights, "head params");
    ensure_finite(params.conv1_bias, "head params");
    ensure_finite(params.conv2_weights, "head params");
    ensure_finite(params.conv2_bias, "head params");
}

HeadParams init_head_params(int d, Rng& rng) {
    if (d < 1) {
        throw ShapeError("init_head_params: feature dim must be >= 1");
    }
    HeadParams p;
    const double s1 =
        std::sqrt(2.0 / (static_cast<double>(d + 1) * kHeadKernel * kHeadKernel));
    p.conv1_weights = scale(
        Tensor::randn({kHiddenChannels, d + 1, kHeadKernel, kHeadKernel}, rng), s1);
    p.conv1_bias = Tensor({kHiddenChannels});
    const double s2 = std::sqrt(2.0 / static_cast<double>(kHiddenChannels));
    p.conv2_weights = scale(Tensor::randn({2, kHiddenChannels, 1, 1}, rng), s2);
    p.conv2_bias = Tensor({2});
    return p;
}

PredictedMask head_forward(const HeadParams& params, const SimilarityMap& sim,
                           const Tensor& features) {
    validate_head_params(params);
    if (features.rank() != 3 || features.dim(1) != sim.height() ||
        features.dim(2) != sim.width()) {
        throw ShapeError("head_forward: similarity map " +
                         std::to_string(sim.height()) + "x" +
                         std::to_string(sim.width()) +
                         " does not match feature grid");
    }
    if (params.feature_dim() != features.dim(0)) {
        throw ShapeError("head_forward: head built for d=" +
                         std::to_string(params.feature_dim()) +
                         ", features have d=" + std::to_string(features.dim(0)));
    }

    const int h = sim.height(), w = sim.width();
    Tensor sim_channel({1, h, w},
                       {sim.values().data().begin(), sim.values().data().end()});
    const Tensor stacked = concat_channels(sim_channel, features);
    const Tensor hidden =
        relu(conv2d(stacked, params.conv1_weights, params.conv1_bias, 1));
    PredictedMask out;
    out.logits = conv2d(hidden, params.conv2_weights, params.conv2_bias, 0);
    out.probs = softmax2(out.logits);
    out.binary = BinaryMask(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.binary.at(y, x) = out.probs(1, y, x) > 0.5f ? 1 : 0;
        }
    }
    return out;
}

double cross_entropy(const PredictedMask& pred, const BinaryMask& target) {
    if (pred.logits.rank() != 3 || pred.logits.dim(0) != 2 ||
        pred.logits.dim(1) != target.height || pred.logits.dim(2) != target.width) {
        throw ShapeError("cross_entropy: prediction/target shape mismatch");
    }
    validate_mask(target, "cross_entropy");
    double acc = 0.0;
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            const double z0 = pred.logits(0, y, x), z1 = pred.logits(1, y, x);
            const double m = std::max(z0, z1);
            const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
            acc += lse - (target.at(y, x) ? z1 : z0);
        }
    }
    const double loss = acc / static_cast<double>(target.size());
    if (!std::isfinite(loss)) {
        throw NonFiniteError("cross_entropy: non-finite loss");
    }
    return loss;
}

void validate_config(const TrainConfig& config) {
    if (config.learning_rate <= 0.0 || config.iterations < 0 ||
        config.batch_size < 1) {
        throw DataError("train config: learning rate and batch size must be "
                        "positive, iterations non-negative");
    }
}

TrainResult train_head(const std::vector<LabeledExample>& dataset,
                       const FoldSplit& split, const TrainConfig& config,
                       bool use_relevance) {
    validate_config(config);
    validate_dataset(dataset);
    const int d = dataset.front().features.dim(0);

    Rng rng(config.seed);
    TrainResult result;
    result.params = init_head_params(d, rng);
    result.loss_trace.reserve(static_cast<std::size_t>(config.iterations));

    for (int iter = 0; iter < config.iterations; ++iter) {
        HeadParams grad_sum;
        double loss_sum = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            const Episode ep = sample_episode(dataset, split, 1, Phase::train, rng);
            const LabeledExample& support = ep.supports.front();
            const int fh = support.features.dim(1), fw = support.features.dim(2);
            const BinaryMask support_mask = downsample_mask(support.mask, fh, fw);
            const BinaryMask query_mask = downsample_mask(
                ep.query.mask, ep.query.features.dim(1), ep.query.features.dim(2));

            const Tensor f = masked_pool(support.features, support_mask);
            const RelevanceVector r =
                use_relevance
                    ? relevance(feature_difference(support.features, support_mask))
                    : RelevanceVector::uniform(d);

            const GradBundle g = backward(result.params, f, ep.query.features, r,
                                          query_mask, Wrt::params);
            loss_sum += g.loss;
            if (b == 0) {
                grad_sum = g.d_params;
            } else {
                grad_sum.conv1_weights = add(grad_sum.conv1_weights, g.d_params.conv1_weights);
                grad_sum.conv1_bias = add(grad_sum.conv1_bias, g.d_params.conv1_bias);
                grad_sum.conv2_weights = add(grad_sum.conv2_weights, g.d_params.conv2_weights);
                grad_sum.conv2_bias = add(grad_sum.conv2_bias, g.d_params.conv2_bias);
            }
        }
        const double step = config.learning_rate / config.batch_size;
        result.params.conv1_weights =
            sub(result.params.conv1_weights, scale(grad_sum.conv1_weights, step));
        result.params.conv1_bias =
            sub(result.params.conv1_bias, scale(grad_sum.conv1_bias, step));
        result.params.conv2_weights =
            sub(result.params.conv2_weights, scale(grad_sum.conv2_weights, step));
        result.params.conv2_bias =
            sub(result.params.conv2_bias, scale(grad_sum.conv2_bias, step));
        result.loss_trace.push_back(loss_sum / config.batch_size);
    }
    return result;
}

}  // namespace fsseg

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsseg/commands.hpp"

namespace {

constexpr const char* kAblationHelp = R"(Ablation flag mapping:
  B          --no-use-relevance --no-use-boosting
  B+C1       --use-relevance    --no-use-boosting
  B+C2       --no-use-relevance --use-boosting
  B+C1+C2    --use-relevance    --use-boosting      (default)
  Average    --k K --kshot-mode average   (per-support prediction, averaged)
  Our-K-shot --k K --kshot-mode joint     (joint relevance + joint ensemble)
)";

fsseg::ExpertOptimizer parse_optimizer(const std::string& name) {
    if (name == "adam") return fsseg::ExpertOptimizer::adam;
    if (name == "sgd") return fsseg::ExpertOptimizer::sgd;
    throw CLI::ValidationError("--optimizer must be adam or sgd");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("Few-shot segmentation head: synthetic data, episodic "
                             "training, K-shot evaluation and ensemble sweeps.\n\n") +
                 kAblationHelp};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset (feature "
                                               "maps, masks, manifest, folds)");
    fsseg::GenerateCommand gen_cmd;
    gen->add_option("--out-dir", gen_cmd.out_dir, "Output directory")->required();
    gen->add_option("--seed", gen_cmd.synth.seed, "RNG seed");
    gen->add_option("--d", gen_cmd.synth.d, "Feature dimensionality");
    gen->add_option("--height", gen_cmd.synth.h, "Feature grid height");
    gen->add_option("--width", gen_cmd.synth.w, "Feature grid width");
    gen->add_option("--num-classes", gen_cmd.synth.num_classes, "Class count");
    gen->add_option("--noise-sigma", gen_cmd.synth.noise_sigma, "Feature noise");
    gen->add_option("--shared-dims", gen_cmd.synth.num_shared_dims,
                    "Leading dimensions pinned high on both regions");
    gen->add_option("--blob-count", gen_cmd.synth.blob_count_max,
                    "Max foreground blobs per mask");
    gen->add_option("--blob-radius-min", gen_cmd.synth.blob_radius_min, "Min blob radius");
    gen->add_option("--blob-radius-max", gen_cmd.synth.blob_radius_max, "Max blob radius");
    gen->add_option("--examples-per-class", gen_cmd.examples_per_class, "Examples per class");
    gen->add_option("--num-folds", gen_cmd.num_folds, "Cross-validation folds");

    // train
    auto* train = app.add_subcommand("train", "Train head parameters on one fold");
    fsseg::TrainCommand train_cmd;
    train->add_option("--manifest", train_cmd.manifest, "Episode manifest")->required();
    train->add_option("--folds", train_cmd.folds, "Fold file")->required();
    train->add_option("--fold", train_cmd.fold_index, "Fold index to train");
    train->add_option("--seed", train_cmd.train.seed, "RNG seed");
    train->add_option("--lr", train_cmd.train.learning_rate, "SGD learning rate");
    train->add_option("--iterations", train_cmd.train.iterations, "Training iterations");
    train->add_option("--batch-size", train_cmd.train.batch_size, "Episodes per step");
    train->add_flag("--use-relevance,!--no-use-relevance", train_cmd.use_relevance,
                    "Weight similarity by estimated feature relevance");
    train->add_option("--out", train_cmd.out_params, "Output params file")->required();
    train->add_option("--loss-out", train_cmd.out_loss_csv,
                      "Loss trace CSV (default: <out>.loss.csv)");

    // shared eval/sweep options
    auto add_eval_options = [](CLI::App* sub, fsseg::EvalCommand& cmd) {
        sub->add_option("--manifest", cmd.manifest, "Episode manifest")->required();
        sub->add_option("--folds", cmd.folds, "Fold file")->required();
        sub->add_option("--params", cmd.params_pattern,
                        "Params file; '{fold}' expands to the fold index")
            ->required();
        sub->add_option("--seed", cmd.opts.seed, "RNG seed");
        sub->add_option("--k", cmd.opts.k, "Supports per episode");
        sub->add_option("--episodes", cmd.opts.episodes_per_fold, "Episodes per fold");
        sub->add_flag("--use-relevance,!--no-use-relevance", cmd.opts.use_relevance,
                      "Weight similarity by estimated feature relevance");
        sub->add_option("--step-size", cmd.opts.boost.step_size, "Expert update step");
        sub->add_option("--out", cmd.out_csv, "Output CSV")->required();
    };

    auto* eval = app.add_subcommand("eval", "Evaluate an ablation over all folds");
    fsseg::EvalCommand eval_cmd;
    add_eval_options(eval, eval_cmd);
    eval->add_flag("--use-boosting,!--no-use-boosting", eval_cmd.opts.use_boosting,
                   "Ensemble of gradient-guided experts at test time");
    std::string eval_kshot = "joint";
    eval->add_option("--kshot-mode", eval_kshot, "K-shot handling: average|joint")
        ->check(CLI::IsMember({"average", "joint"}));
    eval->add_option("--num-experts", eval_cmd.opts.boost.num_experts, "Ensemble size");
    std::string eval_opt = "adam";
    eval->add_option("--optimizer", eval_opt, "Expert update rule: adam|sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    std::string eval_trace;
    eval->add_option("--trace", eval_trace, "Per-episode expert trace JSON");

    auto* sweep = app.add_subcommand("sweep", "Evaluate a list of ensemble sizes "
                                              "on identical episodes");
    fsseg::SweepCommand sweep_cmd;
    add_eval_options(sweep, sweep_cmd.eval);
    std::string sweep_kshot = "joint";
    sweep->add_option("--kshot-mode", sweep_kshot, "K-shot handling: average|joint")
        ->check(CLI::IsMember({"average", "joint"}));
    sweep->add_option("--num-experts", sweep_cmd.expert_counts,
                      "Comma-separated ensemble sizes")
        ->required()
        ->delimiter(',');
    std::string sweep_opt = "adam";
    sweep->add_option("--optimizer", sweep_opt, "Expert update rule: adam|sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            fsseg::cmd_generate(gen_cmd);
            std::cout << "wrote dataset to " << gen_cmd.out_dir.string() << "\n";
        } else if (train->parsed()) {
            fsseg::cmd_train(train_cmd);
            std::cout << "wrote params to " << train_cmd.out_params.string() << "\n";
        } else if (eval->parsed()) {
            eval_cmd.opts.kshot_mode = eval_kshot == "average"
                                           ? fsseg::KshotMode::average
                                           : fsseg::KshotMode::joint;
            eval_cmd.opts.boost.optimizer = parse_optimizer(eval_opt);
            eval_cmd.opts.collect_traces = !eval_trace.empty();
            if (!eval_trace.empty()) eval_cmd.trace_json = eval_trace;
            const fsseg::EvalSummary summary = fsseg::cmd_eval(eval_cmd);
            for (const fsseg::FoldResult& fold : summary.folds) {
                std::printf("fold %d: mIoU %.4f (episode mean %.4f)\n",
                            fold.fold_index, fold.miou_pooled,
                            fold.miou_episode_mean);
            }
            std::printf("cross-validation mIoU: %.4f\n", summary.crossval_miou);
        } else if (sweep->parsed()) {
            sweep_cmd.eval.opts.kshot_mode = sweep_kshot == "average"
                                                 ? fsseg::KshotMode::average
                                                 : fsseg::KshotMode::joint;
            sweep_cmd.eval.opts.boost.optimizer = parse_optimizer(sweep_opt);
            sweep_cmd.eval.opts.use_boosting = true;
            const fsseg::SweepSummary summary = fsseg::cmd_sweep(sweep_cmd);
            for (std::size_t i = 0; i < summary.expert_counts.size(); ++i) {
                std::printf("N=%d: cross-validation mIoU %.4f\n",
                            summary.expert_counts[i], summary.crossval_miou[i]);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

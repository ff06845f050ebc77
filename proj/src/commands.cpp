#include "fsseg/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fsseg/io.hpp"

namespace fsseg {

namespace {

std::string zero_pad(int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open for writing: " + path.string());
    }
    return out;
}

void echo_eval_config(std::ostream& os, const EvalCommand& cmd, int n_experts) {
    os << "# seed=" << cmd.opts.seed << " k=" << cmd.opts.k
       << " episodes=" << cmd.opts.episodes_per_fold
       << " use_relevance=" << (cmd.opts.use_relevance ? 1 : 0)
       << " use_boosting=" << (cmd.opts.use_boosting ? 1 : 0) << " kshot_mode="
       << (cmd.opts.kshot_mode == KshotMode::joint ? "joint" : "average")
       << " num_experts=" << n_experts << " step_size=" << cmd.opts.boost.step_size
       << " optimizer="
       << (cmd.opts.boost.optimizer == ExpertOptimizer::adam ? "adam" : "sgd")
       << "\n";
    os << "# manifest=" << cmd.manifest.string() << " folds=" << cmd.folds.string()
       << " params=" << cmd.params_pattern << "\n";
}

EvalSummary run_eval(const EvalCommand& cmd, std::ostream& csv, bool with_n_column,
                     int n_experts) {
    const std::vector<LabeledExample> dataset = load_dataset(cmd.manifest);
    const std::vector<FoldSplit> folds = read_folds(cmd.folds);

    EvalSummary summary;
    std::vector<double> fold_mious;
    char buf[200];
    for (const FoldSplit& fold : folds) {
        const HeadParams params = read_head_params(
            resolve_params_path(cmd.params_pattern, fold.fold_index));
        EvalOptions opts = cmd.opts;
        opts.boost.num_experts = n_experts;
        FoldResult result = evaluate_fold(dataset, fold, params, opts);
        const double fold_miou = result.miou_pooled;
        for (const ClassScore& c : result.per_class) {
            if (with_n_column) {
                std::snprintf(buf, sizeof(buf), "%d,", n_experts);
                csv << buf;
            }
            std::snprintf(buf, sizeof(buf), "%d,%d,%llu,%llu,%llu,%.9g,%.9g,%.9g\n",
                          fold.fold_index, c.class_id,
                          static_cast<unsigned long long>(c.tp),
                          static_cast<unsigned long long>(c.fp),
                          static_cast<unsigned long long>(c.fn), c.iou(), fold_miou,
                          result.miou_episode_mean);
            csv << buf;
        }
        fold_mious.push_back(fold_miou);
        summary.folds.push_back(std::move(result));
    }
    summary.crossval_miou = crossval_report(fold_mious);
    return summary;
}

void write_traces(const std::filesystem::path& path,
                  const std::vector<FoldResult>& folds) {
    nlohmann::json arr = nlohmann::json::array();
    for (const FoldResult& fold : folds) {
        for (const EpisodeOutcome& ep : fold.episodes) {
            nlohmann::json experts = nlohmann::json::array();
            for (std::size_t n = 0; n < ep.experts.size(); ++n) {
                experts.push_back(
                    {{"expert", n + 1},
                     {"support_loss", ep.experts[n].support_loss},
                     {"rho", ep.experts[n].confidence}});
            }
            arr.push_back({{"fold", fold.fold_index},
                           {"episode", ep.episode_index},
                           {"class_id", ep.class_id},
                           {"iou", ep.iou},
                           {"experts", std::move(experts)}});
        }
    }
    std::ofstream out = open_out(path);
    out << arr.dump(2) << "\n";
}

}  // namespace

std::filesystem::path resolve_params_path(const std::string& pattern, int fold) {
    std::string s = pattern;
    const std::string token = "{fold}";
    std::size_t pos;
    while ((pos = s.find(token)) != std::string::npos) {
        s.replace(pos, token.size(), std::to_string(fold));
    }
    return s;
}

void cmd_generate(const GenerateCommand& cmd) {
    validate_config(cmd.synth);
    if (cmd.num_folds < 1 || cmd.num_folds > cmd.synth.num_classes) {
        throw DataError("generate: num_folds must be in [1, num_classes]");
    }
    std::filesystem::create_directories(cmd.out_dir);

    const SyntheticDataset data = generate_synthetic(cmd.synth, cmd.examples_per_class);

    std::vector<ManifestEntry> entries;
    entries.reserve(data.examples.size());
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        const LabeledExample& ex = data.examples[i];
        ManifestEntry e;
        e.class_id = ex.class_id;
        e.features = "ex" + zero_pad(static_cast<int>(i), 5) + ".fsfm";
        e.mask = "ex" + zero_pad(static_cast<int>(i), 5) + ".fsmk";
        write_feature_map(cmd.out_dir / e.features, ex.features);
        write_mask(cmd.out_dir / e.mask, ex.mask);
        entries.push_back(std::move(e));
    }
    write_manifest(cmd.out_dir / "manifest.json", entries);

    // Round-robin class assignment to folds: fold i holds classes congruent
    // to i modulo num_folds as its test set.
    std::vector<FoldSplit> folds(static_cast<std::size_t>(cmd.num_folds));
    for (int f = 0; f < cmd.num_folds; ++f) {
        folds[static_cast<std::size_t>(f)].fold_index = f;
        for (int c = 0; c < cmd.synth.num_classes; ++c) {
            if (c % cmd.num_folds == f) {
                folds[static_cast<std::size_t>(f)].test_classes.insert(c);
            } else {
                folds[static_cast<std::size_t>(f)].train_classes.insert(c);
            }
        }
    }
    write_folds(cmd.out_dir / "folds.json", folds);
}

void cmd_train(const TrainCommand& cmd) {
    const std::vector<LabeledExample> dataset = load_dataset(cmd.manifest);
    const std::vector<FoldSplit> folds = read_folds(cmd.folds);
    const FoldSplit* fold = nullptr;
    for (const FoldSplit& f : folds) {
        if (f.fold_index == cmd.fold_index) fold = &f;
    }
    if (!fold) {
        throw DataError("train: fold " + std::to_string(cmd.fold_index) +
                        " not present in " + cmd.folds.string());
    }

    const TrainResult result =
        train_head(dataset, *fold, cmd.train, cmd.use_relevance);

    if (cmd.out_params.has_parent_path()) {
        std::filesystem::create_directories(cmd.out_params.parent_path());
    }
    write_head_params(cmd.out_params, result.params);

    const std::filesystem::path loss_path =
        cmd.out_loss_csv.empty()
            ? std::filesystem::path(cmd.out_params.string() + ".loss.csv")
            : cmd.out_loss_csv;
    std::ofstream out = open_out(loss_path);
    out << "# seed=" << cmd.train.seed << " lr=" << cmd.train.learning_rate
        << " iterations=" << cmd.train.iterations
        << " batch_size=" << cmd.train.batch_size
        << " use_relevance=" << (cmd.use_relevance ? 1 : 0)
        << " fold=" << cmd.fold_index << "\n";
    out << "iteration,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, result.loss_trace[i]);
        out << buf;
    }
}

EvalSummary cmd_eval(const EvalCommand& cmd) {
    std::ofstream csv = open_out(cmd.out_csv);
    echo_eval_config(csv, cmd, cmd.opts.boost.num_experts);
    csv << "fold,class_id,tp,fp,fn,iou,miou,iou_mean_episodes\n";
    EvalSummary summary = run_eval(cmd, csv, false, cmd.opts.boost.num_experts);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", summary.crossval_miou);
    csv << "-1,-1,0,0,0,0," << buf << ",0\n";
    if (cmd.trace_json) {
        write_traces(*cmd.trace_json, summary.folds);
    }
    return summary;
}

SweepSummary cmd_sweep(const SweepCommand& cmd) {
    if (cmd.expert_counts.empty()) {
        throw DataError("sweep: need at least one ensemble size");
    }
    std::ofstream csv = open_out(cmd.eval.out_csv);
    echo_eval_config(csv, cmd.eval, -1);
    csv << "n_experts,fold,class_id,tp,fp,fn,iou,miou,iou_mean_episodes\n";

    SweepSummary summary;
    for (int n : cmd.expert_counts) {
        if (n < 1) {
            throw DataError("sweep: ensemble sizes must be >= 1");
        }
        const EvalSummary one = run_eval(cmd.eval, csv, true, n);
        summary.expert_counts.push_back(n);
        summary.crossval_miou.push_back(one.crossval_miou);
    }
    return summary;
}

}  // namespace fsseg

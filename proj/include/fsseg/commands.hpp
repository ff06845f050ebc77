#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsseg/episode.hpp"
#include "fsseg/eval.hpp"
#include "fsseg/head.hpp"

namespace fsseg {

// Writes feature/mask files, the episode manifest manifest.json and a
// round-robin fold file folds.json into out_dir. Deterministic per seed.
struct GenerateCommand {
    SyntheticConfig synth;
    int examples_per_class = 12;
    int num_folds = 4;
    std::filesystem::path out_dir;
};

void cmd_generate(const GenerateCommand& cmd);

// Trains head parameters on one fold's train classes and writes them as an
// FSHP file plus an "iteration,loss" CSV trace.
struct TrainCommand {
    std::filesystem::path manifest;
    std::filesystem::path folds;
    int fold_index = 0;
    TrainConfig train;
    bool use_relevance = true;
    std::filesystem::path out_params;
    std::filesystem::path out_loss_csv;  // defaults to out_params + ".loss.csv"
};

void cmd_train(const TrainCommand& cmd);

// Evaluates every fold in the fold file with the configured ablation and
// writes a per-class CSV report (config echoed in '#' header lines). The
// params path may contain "{fold}", replaced per fold index. Optionally
// writes per-episode expert traces as JSON.
struct EvalCommand {
    std::filesystem::path manifest;
    std::filesystem::path folds;
    std::string params_pattern;
    EvalOptions opts;
    std::filesystem::path out_csv;
    std::optional<std::filesystem::path> trace_json;
};

struct EvalSummary {
    std::vector<FoldResult> folds;
    double crossval_miou = 0.0;
};

EvalSummary cmd_eval(const EvalCommand& cmd);

// Re-runs the evaluation for each ensemble size with identical episode
// seeds; rows gain a leading n_experts column.
struct SweepCommand {
    EvalCommand eval;
    std::vector<int> expert_counts;
};

struct SweepSummary {
    std::vector<int> expert_counts;
    std::vector<double> crossval_miou;  // parallel to expert_counts
};

SweepSummary cmd_sweep(const SweepCommand& cmd);

// "{fold}" -> fold index substitution for per-fold parameter files.
std::filesystem::path resolve_params_path(const std::string& pattern, int fold);

}  // namespace fsseg

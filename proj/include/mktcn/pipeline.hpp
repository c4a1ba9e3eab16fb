#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mktcn/checkpoint.hpp"
#include "mktcn/metrics.hpp"

namespace mktcn {

// Bad flag values; the CLI maps this to exit code 2.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

extern const char* kToolVersion;

struct GenArgs {
    std::string preset = "ngpod-like";  // or "multiclass"
    std::size_t steps = 40000;
    std::size_t leak_events = 6;
    std::size_t horizon_n = 200;
    std::size_t event_duration = 0;  // 0 = preset default
    double noise_std = 1.0;
    uint64_t seed = 1;
    std::string out;  // CSV path, required
    // multiclass preset knobs
    std::size_t n_classes = 10;
    std::size_t segments_per_class = 5;
    std::size_t segment_length = 200;
};

struct TrainArgs {
    std::string data;
    std::string out_dir;
    PreprocessConfig prep;
    TrainConfig train;
};

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string out_dir;
    bool force = false;
    std::string aunp_mode = "standard";  // "standard" | "curve"
    std::optional<std::size_t> omega, stride;
    std::optional<uint64_t> split_seed;
    std::optional<double> pca_target;
};

struct SweepArgs {
    std::vector<std::size_t> n_list = {150, 200, 250, 300, 350, 400};
    GenArgs gen;  // horizon_n is the physical precursor length, fixed across N
    PreprocessConfig prep;
    TrainConfig train;
    std::string out_dir;
};

// Each command writes its outputs plus a manifest.json sufficient to re-run it.
void cmd_gen_data(const GenArgs& args);
void cmd_train(const TrainArgs& args);
MetricsReport cmd_eval(const EvalArgs& args);
void cmd_sweep_n(const SweepArgs& args);

// Full evaluation of one split: confusion matrix, macro metrics, per-class
// PR curves and AP. aunp_mode "curve" swaps in the literal NPV-recall area.
MetricsReport evaluate_split(MktcnModel& model, const SerialDataset& ds, Split split,
                             const std::string& aunp_mode = "standard");

struct SweepRow {
    std::size_t horizon = 0;
    int64_t horizon_seconds = 0;
    std::vector<double> metrics;  // kMetricNames order
    double radar = 0.0;
};

std::vector<SweepRow> read_sweep_csv(const std::string& path);

}  // namespace mktcn

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mktcn/pipeline.hpp"

namespace {

std::string default_out_root() {
    const char* env = std::getenv("MKTCN_OUT_ROOT");
    return env ? std::string(env) : std::string(".");
}

void add_prep_flags(CLI::App* cmd, mktcn::PreprocessConfig& prep) {
    cmd->add_option("--omega", prep.omega, "Sliding window length");
    cmd->add_option("--stride", prep.stride, "Sliding window step");
    cmd->add_option("--pca-target", prep.pca_target,
                    "Cumulative explained-variance target for PCA");
    cmd->add_flag("!--no-standardize", prep.standardize,
                  "Skip z-score standardization before PCA");
    cmd->add_option("--split-seed", prep.split_seed, "Seed for the train/val/test split");
}

void add_train_flags(CLI::App* cmd, mktcn::TrainConfig& train, std::string& head) {
    cmd->add_option("--batch", train.batch_size, "Mini-batch size");
    cmd->add_option("--dropout", train.dropout, "Dropout rate");
    cmd->add_option("--kernel", train.kernel, "Convolution kernel size");
    cmd->add_option("--lr", train.lr, "Adam learning rate");
    cmd->add_option("--epochs", train.epochs, "Training epochs");
    cmd->add_option("--hidden", train.hidden, "Residual block widths");
    cmd->add_option("--grid", train.grid_size, "KAN B-spline grid size");
    cmd->add_option("--seed", train.seed, "Training seed");
    cmd->add_option("--class-weights", train.class_weights, "Per-class loss weights");
    cmd->add_option("--head", head, "Classification head: kan or dense")
        ->check(CLI::IsMember({"kan", "dense"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MKTCN early-leak-prediction pipeline"};
    app.set_version_flag("--version", mktcn::kToolVersion);
    app.require_subcommand(1);

    // gen-data
    mktcn::GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "Generate a synthetic telemetry CSV");
    cmd_gen->add_option("--preset", gen.preset, "ngpod-like or multiclass")
        ->check(CLI::IsMember({"ngpod-like", "multiclass"}));
    cmd_gen->add_option("--steps", gen.steps, "Total timesteps (ngpod-like)");
    cmd_gen->add_option("--leak-events", gen.leak_events, "Number of leak events");
    cmd_gen->add_option("--horizon-n", gen.horizon_n, "Doubtful horizon N in steps");
    cmd_gen->add_option("--event-duration", gen.event_duration,
                        "Abnormal steps per event (0 = preset default)");
    cmd_gen->add_option("--noise-std", gen.noise_std, "Noise level multiplier");
    cmd_gen->add_option("--seed", gen.seed, "Generator seed");
    cmd_gen->add_option("--classes", gen.n_classes, "Class count (multiclass)");
    cmd_gen->add_option("--segments-per-class", gen.segments_per_class,
                        "Segments per class (multiclass)");
    cmd_gen->add_option("--segment-length", gen.segment_length,
                        "Steps per segment (multiclass)");
    cmd_gen->add_option("--out", gen.out, "Output CSV path")->required();

    // train
    mktcn::TrainArgs train_args;
    std::string train_head = "kan";
    auto* cmd_train = app.add_subcommand("train", "Preprocess a CSV and train a model");
    cmd_train->add_option("--data", train_args.data, "Input CSV")->required();
    cmd_train->add_option("--out-dir", train_args.out_dir, "Run directory");
    add_prep_flags(cmd_train, train_args.prep);
    add_train_flags(cmd_train, train_args.train, train_head);

    // eval
    mktcn::EvalArgs eval_args;
    std::size_t eval_omega = 0, eval_stride = 0;
    uint64_t eval_split_seed = 0;
    double eval_pca_target = 0.0;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    cmd_eval->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")->required();
    cmd_eval->add_option("--data", eval_args.data, "Input CSV")->required();
    cmd_eval->add_option("--out-dir", eval_args.out_dir, "Run directory");
    cmd_eval->add_flag("--force", eval_args.force, "Proceed despite a config-hash mismatch");
    cmd_eval->add_option("--aunp-mode", eval_args.aunp_mode,
                         "AUNP definition: standard or curve")
        ->check(CLI::IsMember({"standard", "curve"}));
    auto* opt_eo = cmd_eval->add_option("--omega", eval_omega, "Override window length");
    auto* opt_es = cmd_eval->add_option("--stride", eval_stride, "Override window step");
    auto* opt_ess = cmd_eval->add_option("--split-seed", eval_split_seed,
                                         "Override the split seed");
    auto* opt_ept = cmd_eval->add_option("--pca-target", eval_pca_target,
                                         "Override the PCA target");

    // sweep-n
    mktcn::SweepArgs sweep_args;
    std::string sweep_head = "kan";
    auto* cmd_sweep = app.add_subcommand(
        "sweep-n", "Relabel, retrain and evaluate across doubtful horizons N");
    cmd_sweep->add_option("--n-list", sweep_args.n_list, "Horizon values to sweep");
    cmd_sweep->add_option("--steps", sweep_args.gen.steps, "Total timesteps");
    cmd_sweep->add_option("--leak-events", sweep_args.gen.leak_events, "Leak event count");
    cmd_sweep->add_option("--horizon-n", sweep_args.gen.horizon_n,
                          "Physical precursor length used to generate the signal");
    cmd_sweep->add_option("--event-duration", sweep_args.gen.event_duration,
                          "Abnormal steps per event (0 = preset default)");
    cmd_sweep->add_option("--noise-std", sweep_args.gen.noise_std, "Noise level multiplier");
    cmd_sweep->add_option("--gen-seed", sweep_args.gen.seed, "Generator seed");
    cmd_sweep->add_option("--out-dir", sweep_args.out_dir, "Sweep output directory");
    add_prep_flags(cmd_sweep, sweep_args.prep);
    add_train_flags(cmd_sweep, sweep_args.train, sweep_head);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_gen) {
            mktcn::cmd_gen_data(gen);
        } else if (*cmd_train) {
            if (train_args.out_dir.empty())
                train_args.out_dir = default_out_root() + "/train";
            train_args.train.head = mktcn::head_type_from_name(train_head);
            mktcn::cmd_train(train_args);
        } else if (*cmd_eval) {
            if (eval_args.out_dir.empty()) eval_args.out_dir = default_out_root() + "/eval";
            if (opt_eo->count()) eval_args.omega = eval_omega;
            if (opt_es->count()) eval_args.stride = eval_stride;
            if (opt_ess->count()) eval_args.split_seed = eval_split_seed;
            if (opt_ept->count()) eval_args.pca_target = eval_pca_target;
            mktcn::cmd_eval(eval_args);
        } else if (*cmd_sweep) {
            if (sweep_args.out_dir.empty())
                sweep_args.out_dir = default_out_root() + "/sweep";
            sweep_args.train.head = mktcn::head_type_from_name(sweep_head);
            mktcn::cmd_sweep_n(sweep_args);
        }
    } catch (const mktcn::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

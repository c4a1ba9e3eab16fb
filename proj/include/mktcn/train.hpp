#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mktcn/model.hpp"
#include "mktcn/preprocess.hpp"

namespace mktcn {

struct TrainConfig {
    std::size_t batch_size = 64;
    double dropout = 0.5;
    std::size_t kernel = 3;
    double lr = 0.001;
    std::size_t epochs = 10;
    std::vector<std::size_t> hidden = {32, 64, 128};
    int grid_size = 5;
    int spline_order = 3;
    uint64_t seed = 1;
    std::vector<double> class_weights;  // empty = unweighted
    HeadType head = HeadType::kan;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool head_input_norm = true;
    std::string log_path;  // optional JSONL training log
};

struct TrainState {
    std::size_t step = 0;
    std::vector<std::vector<double>> adam_m;  // per parameter tensor, params() order
    std::vector<std::vector<double>> adam_v;
    double best_val_macro_f1 = 0.0;
    std::vector<double> loss_history;  // mean train loss per epoch
};

// -log(probs[label]) with the floor at 1e-12; an optional per-class weight
// multiplies the sample loss.
double cross_entropy(const std::vector<double>& probs, int label,
                     const std::vector<double>& class_weights = {});

// Bias-corrected Adam over the model's parameter list. Throws (naming the
// parameter) on a NaN gradient.
void adam_step(std::vector<ParamRef>& params, TrainState& state, double lr, double beta1,
               double beta2, double eps);

struct Prediction {
    std::vector<double> probs;
    int cls = 0;
};

std::vector<Prediction> predict(MktcnModel& model, const SerialDataset& ds,
                                const std::vector<std::size_t>& indices);

struct TrainResult {
    MktcnModel model;
    TrainState state;
};

// Mini-batch training with seeded shuffles, validation macro-F1 tracked per
// epoch and best-on-validation parameters returned.
TrainResult train_model(const SerialDataset& ds, const TrainConfig& cfg);

// Macro-F1 of a model over one split (used for model selection).
double validation_macro_f1(MktcnModel& model, const SerialDataset& ds, Split split);

// FNV-1a over the canonical config string; stored in checkpoints so an eval
// run can detect mismatched preprocessing.
uint64_t config_hash(const TrainConfig& train, const PreprocessConfig& prep);

}  // namespace mktcn

#pragma once

#include <stdexcept>
#include <string>

#include "mktcn/train.hpp"

namespace mktcn {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything an evaluation run needs: the model, optimizer state, the fitted
// PCA and the exact preprocessing/training configuration.
struct Checkpoint {
    MktcnModel model;
    TrainState state;
    PcaModel pca;
    TrainConfig train_cfg;
    PreprocessConfig prep_cfg;
    uint64_t hash = 0;
};

// Single binary file, little-endian: magic + version + config hash, a JSON
// metadata blob (configs, PCA, state scalars), then named parameter sections
// with shapes and raw 64-bit values.
void save_checkpoint(MktcnModel& model, const TrainState& state, const PcaModel& pca,
                     const TrainConfig& train_cfg, const PreprocessConfig& prep_cfg,
                     const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace mktcn

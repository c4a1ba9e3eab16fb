#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mktcn/data_gen.hpp"
#include "mktcn/tensor.hpp"

namespace mktcn {

enum class Split : uint8_t { train = 0, val = 1, test = 2 };

// Standardization + principal components fitted on training rows only.
// Rows of `components` are orthonormal and sorted by descending eigenvalue;
// each row's sign is fixed so its largest-magnitude entry is positive.
struct PcaModel {
    std::vector<double> mean;             // per input channel
    std::vector<double> scale;            // per-channel std (1.0 where disabled/dropped)
    Tensor components;                    // m x n
    std::vector<double> explained_ratio;  // per retained component
    std::vector<std::size_t> dropped_channels;

    std::size_t n_channels() const { return mean.size(); }
    std::size_t n_components() const { return components.ndim() == 2 ? components.dim(0) : 0; }

    std::string to_json() const;
    static PcaModel from_json(const std::string& text);
    void save_json(const std::string& path) const;
    static PcaModel load_json(const std::string& path);
};

// Flattened windowed samples. Window j covers rows [j*s, j*s+omega); the
// flattened layout is time-major (index tau*m + f = feature f at offset tau)
// and the label/timestamp come from the window's latest row.
struct SerialDataset {
    std::size_t window = 0;    // omega
    std::size_t stride = 1;    // s
    std::size_t feat_dim = 0;  // m
    std::vector<double> data;  // n_samples x (omega*m)
    std::vector<int> labels;
    std::vector<int64_t> timestamps;
    std::vector<Split> split;  // empty until assigned

    std::size_t sample_len() const { return window * feat_dim; }
    std::size_t size() const { return labels.size(); }
    std::span<const double> sample(std::size_t i) const {
        return {data.data() + i * sample_len(), sample_len()};
    }
    std::size_t n_classes() const;
    std::vector<std::size_t> indices_of(Split s) const;
};

// Z-score + eigendecomposition of the training-row covariance, retaining the
// smallest component count whose cumulative explained variance reaches
// target_ratio. Zero-variance channels are dropped with a warning; with fewer
// rows than channels only rank-many components are retained (with a warning).
PcaModel fit_pca(const TimeSeriesFrame& frame, const std::vector<char>& train_mask,
                 double target_ratio = 0.95, bool standardize = true);

// ((x - mean) / scale) * components^T, row by row -> T x m scores.
Tensor pca_transform(const PcaModel& pca, const TimeSeriesFrame& frame);

SerialDataset windowize(const Tensor& reduced, const std::vector<int>& labels,
                        const std::vector<int64_t>& timestamps, std::size_t omega,
                        std::size_t stride);

// Seeded uniform partition over samples. Re-seeds up to 100 times until every
// class present overall is present in train; throws otherwise.
void split_dataset(SerialDataset& ds, std::array<double, 3> ratios, uint64_t seed);

// The assignment underlying split_dataset; depends only on the label vector,
// ratios and seed, so it can be decided before PCA is fitted.
std::vector<Split> split_assign(const std::vector<int>& labels, std::array<double, 3> ratios,
                                uint64_t seed);

struct PreprocessConfig {
    std::size_t omega = 50;
    std::size_t stride = 1;
    double pca_target = 0.95;
    bool standardize = true;
    std::array<double, 3> ratios{0.7, 0.2, 0.1};
    uint64_t split_seed = 1;
};

struct Preprocessed {
    PcaModel pca;
    SerialDataset dataset;
};

// Full chain: split assignment (by window), PCA fitted on rows covered by
// training windows only, transform, windowize, tag splits.
Preprocessed run_preprocess(const TimeSeriesFrame& frame, const PreprocessConfig& cfg);

// Windowize + split against an existing PCA model (evaluation path).
SerialDataset apply_preprocess(const TimeSeriesFrame& frame, const PcaModel& pca,
                               const PreprocessConfig& cfg);

}  // namespace mktcn

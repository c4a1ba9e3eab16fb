#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mktcn/kan.hpp"
#include "mktcn/tcn.hpp"

namespace mktcn {

enum class HeadType { kan, dense };

std::string head_type_name(HeadType t);
HeadType head_type_from_name(const std::string& name);

struct ModelConfig {
    std::size_t input_len = 0;  // omega * m
    std::size_t n_classes = 0;
    std::vector<std::size_t> hidden = {32, 64, 128};
    std::size_t kernel = 3;
    double dropout = 0.5;
    HeadType head = HeadType::kan;
    int grid_size = 5;
    int spline_order = 3;
    double kan_domain = 1.0;     // splines live on [-kan_domain, kan_domain]
    bool head_input_norm = true;
};

// Plain affine head used for the TCN-only ablation.
class DenseLayer {
public:
    DenseLayer(std::size_t n_in, std::size_t n_out, Rng& rng);

    std::vector<double> forward(const std::vector<double>& x);
    std::vector<double> backward(const std::vector<double>& upstream);
    void zero_grad();
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

    std::size_t n_in() const { return n_in_; }
    std::size_t n_out() const { return n_out_; }

    std::vector<double> w;  // [n_out x n_in]
    std::vector<double> b;
    std::vector<double> w_grad, b_grad;

private:
    std::size_t n_in_, n_out_;
    std::vector<double> cache_x_;
    bool have_forward_ = false;
};

// The end-to-end classifier: serialized window -> TCN feature sequence ->
// fixed standardizing affine -> KAN (or dense) head -> class logits.
class MktcnModel {
public:
    MktcnModel(const ModelConfig& cfg, uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }

    std::vector<double> forward_logits(std::span<const double> sample, bool training,
                                       Rng* rng);
    // Gradient w.r.t. logits in, gradient w.r.t. the input sample out.
    std::vector<double> backward_from_logits(const std::vector<double>& dlogits);

    // Deterministic inference: softmax probabilities and the argmax class.
    std::vector<double> predict_probs(std::span<const double> sample);

    void zero_grad();
    std::vector<ParamRef> params();
    std::size_t param_count();

    // Standardizing affine in front of the head, fitted once from TCN outputs
    // over training data and frozen (stored in the checkpoint).
    void set_head_norm(std::vector<double> mean, std::vector<double> scale);
    const std::vector<double>& head_norm_mean() const { return norm_mean_; }
    const std::vector<double>& head_norm_scale() const { return norm_scale_; }

    TcnStack tcn;
    std::optional<KanLayer> kan;
    std::optional<DenseLayer> dense;

private:
    MktcnModel(const ModelConfig& cfg, Rng rng);

    ModelConfig cfg_;
    std::vector<double> norm_mean_, norm_scale_;
};

}  // namespace mktcn

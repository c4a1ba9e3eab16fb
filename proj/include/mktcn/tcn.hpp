#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mktcn/conv.hpp"
#include "mktcn/rng.hpp"
#include "mktcn/tensor.hpp"

namespace mktcn {

// Two weight-normalized dilated causal convolutions with ReLU + inverted
// dropout after each, summed with an identity or 1x1 skip path. No activation
// after the sum, so a block with zeroed kernels is the identity map when the
// channel counts match.
class ResidualBlock {
public:
    ResidualBlock(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                  std::size_t dilation, double dropout_rate, Rng& rng);

    Tensor forward(const Tensor& x, bool training, Rng* rng);
    Tensor backward(const Tensor& upstream);

    void zero_grad();
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

    std::size_t in_channels() const { return conv1.in_channels(); }
    std::size_t out_channels() const { return conv2.out_channels(); }
    std::size_t dilation() const { return conv1.dilation(); }

    ConvLayer conv1;
    ConvLayer conv2;
    std::optional<ConvLayer> downsample;  // present iff in_ch != out_ch
    double dropout_rate;

    // Dropout masks from the most recent training forward (cached-mask
    // contract: backward reuses exactly these).
    const std::vector<char>& mask1() const { return mask1_; }
    const std::vector<char>& mask2() const { return mask2_; }

private:
    Tensor apply_relu_dropout(const Tensor& pre, bool training, Rng* rng,
                              std::vector<char>& mask);

    bool training_pass_ = false;
    bool have_forward_ = false;
    Tensor pre1_, pre2_;              // pre-activation caches
    std::vector<char> mask1_, mask2_;
};

// Residual blocks with dilations 1, 2, 4, ... plus a learned 1x1 head that
// collapses the final channel dim back to one, so a length-N serial sample
// maps to a length-N feature sequence.
class TcnStack {
public:
    TcnStack(std::size_t input_len, const std::vector<std::size_t>& hidden,
             std::size_t kernel, double dropout_rate, Rng& rng);

    std::size_t input_len() const { return input_len_; }

    // Serial sample of length input_len -> feature vector of the same length.
    std::vector<double> forward(std::span<const double> sample, bool training, Rng* rng);
    // Upstream gradient w.r.t. the output vector -> gradient w.r.t. the input
    // sample; parameter gradients accumulate.
    std::vector<double> backward(const std::vector<double>& upstream);

    void zero_grad();
    void collect_params(std::vector<ParamRef>& out);
    std::size_t param_count();

    std::vector<ResidualBlock> blocks;
    ConvLayer head;

private:
    std::size_t input_len_;
    bool have_forward_ = false;
};

}  // namespace mktcn

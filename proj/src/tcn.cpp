#include "mktcn/tcn.hpp"

#include <stdexcept>

namespace mktcn {

ResidualBlock::ResidualBlock(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                             std::size_t dilation, double rate, Rng& rng)
    : conv1(in_ch, out_ch, kernel, dilation, rng),
      conv2(out_ch, out_ch, kernel, dilation, rng),
      dropout_rate(rate) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("ResidualBlock: dropout rate must be in [0, 1)");
    if (in_ch != out_ch) downsample.emplace(in_ch, out_ch, 1, 1, rng);
}

Tensor ResidualBlock::apply_relu_dropout(const Tensor& pre, bool training, Rng* rng,
                                         std::vector<char>& mask) {
    Tensor out = pre;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < 0.0) out[i] = 0.0;
    if (training && dropout_rate > 0.0) {
        if (!rng) throw std::invalid_argument("ResidualBlock: training forward needs an Rng");
        mask.resize(out.size());
        const double keep = 1.0 - dropout_rate;
        const double scale = 1.0 / keep;  // inverted dropout, no inference rescale
        for (std::size_t i = 0; i < out.size(); ++i) {
            mask[i] = rng->uniform() < keep ? 1 : 0;
            out[i] = mask[i] ? out[i] * scale : 0.0;
        }
    } else {
        mask.clear();
    }
    return out;
}

Tensor ResidualBlock::forward(const Tensor& x, bool training, Rng* rng) {
    pre1_ = conv1.forward(x);
    Tensor h = apply_relu_dropout(pre1_, training, rng, mask1_);
    pre2_ = conv2.forward(h);
    Tensor out = apply_relu_dropout(pre2_, training, rng, mask2_);
    const Tensor skip = downsample ? downsample->forward(x) : x;
    if (!out.same_shape(skip))
        throw std::logic_error("ResidualBlock: path/skip shape mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
    training_pass_ = training;
    have_forward_ = true;
    return out;
}

Tensor ResidualBlock::backward(const Tensor& upstream) {
    if (!have_forward_)
        throw std::logic_error("ResidualBlock::backward called before forward");
    const double scale = 1.0 / (1.0 - dropout_rate);
    const bool dropped = training_pass_ && dropout_rate > 0.0;

    Tensor g = upstream;
    if (dropped)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask2_[i] ? g[i] * scale : 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (pre2_[i] <= 0.0) g[i] = 0.0;
    Tensor g1 = conv2.backward(g);
    if (dropped)
        for (std::size_t i = 0; i < g1.size(); ++i) g1[i] = mask1_[i] ? g1[i] * scale : 0.0;
    for (std::size_t i = 0; i < g1.size(); ++i)
        if (pre1_[i] <= 0.0) g1[i] = 0.0;
    Tensor gx = conv1.backward(g1);

    if (downsample) {
        Tensor gskip = downsample->backward(upstream);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gskip[i];
    } else {
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += upstream[i];
    }
    return gx;
}

void ResidualBlock::zero_grad() {
    conv1.zero_grad();
    conv2.zero_grad();
    if (downsample) downsample->zero_grad();
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    conv1.collect_params(prefix + ".conv1", out);
    conv2.collect_params(prefix + ".conv2", out);
    if (downsample) downsample->collect_params(prefix + ".downsample", out);
}

TcnStack::TcnStack(std::size_t input_len, const std::vector<std::size_t>& hidden,
                   std::size_t kernel, double dropout_rate, Rng& rng)
    : head(hidden.empty() ? 1 : hidden.back(), 1, 1, 1, rng), input_len_(input_len) {
    if (hidden.empty()) throw std::invalid_argument("TcnStack: need at least one block");
    if (input_len == 0) throw std::invalid_argument("TcnStack: input length must be positive");
    std::size_t in_ch = 1;
    std::size_t dilation = 1;
    for (std::size_t width : hidden) {
        blocks.emplace_back(in_ch, width, kernel, dilation, dropout_rate, rng);
        in_ch = width;
        dilation *= 2;
    }
}

std::vector<double> TcnStack::forward(std::span<const double> sample, bool training,
                                      Rng* rng) {
    if (sample.size() != input_len_)
        throw std::invalid_argument("TcnStack::forward: expected length " +
                                    std::to_string(input_len_) + ", got " +
                                    std::to_string(sample.size()));
    Tensor x({1, input_len_}, std::vector<double>(sample.begin(), sample.end()));
    for (auto& block : blocks) x = block.forward(x, training, rng);
    Tensor y = head.forward(x);
    have_forward_ = true;
    return y.raw();
}

std::vector<double> TcnStack::backward(const std::vector<double>& upstream) {
    if (!have_forward_) throw std::logic_error("TcnStack::backward called before forward");
    if (upstream.size() != input_len_)
        throw std::invalid_argument("TcnStack::backward: upstream length mismatch");
    Tensor g = head.backward(Tensor({1, input_len_}, upstream));
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) g = it->backward(g);
    return g.raw();
}

void TcnStack::zero_grad() {
    for (auto& block : blocks) block.zero_grad();
    head.zero_grad();
}

void TcnStack::collect_params(std::vector<ParamRef>& out) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
        blocks[i].collect_params("tcn.block" + std::to_string(i), out);
    head.collect_params("tcn.head", out);
}

std::size_t TcnStack::param_count() {
    std::vector<ParamRef> refs;
    collect_params(refs);
    std::size_t n = 0;
    for (const auto& r : refs) n += r.size;
    return n;
}

}  // namespace mktcn

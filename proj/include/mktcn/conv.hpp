#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mktcn/rng.hpp"
#include "mktcn/tensor.hpp"

namespace mktcn {

// Named view of one parameter array plus its gradient buffer; the optimizer
// and checkpoint writer walk a flat list of these.
struct ParamRef {
    std::string name;
    double* data;
    double* grad;
    std::size_t size;
    std::vector<std::size_t> shape;
};

// Prepends (k-1)*d zeros per channel so a dilated kernel only ever reads
// positions at or before the current one.
Tensor causal_pad(const Tensor& x, std::size_t kernel, std::size_t dilation);

// Weight-normalized dilated causal 1-D convolution. The effective kernel is
// w[o] = g[o] * v[o] / ||v[o]||, recomputed from (v, g) on every forward so
// optimizer updates need no cache invalidation hooks.
class ConvLayer {
public:
    ConvLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
              std::size_t dilation, Rng& rng);

    std::size_t in_channels() const { return in_ch_; }
    std::size_t out_channels() const { return out_ch_; }
    std::size_t kernel() const { return kernel_; }
    std::size_t dilation() const { return dilation_; }

    // x is [in_ch x L]; the result is [out_ch x L].
    Tensor forward(const Tensor& x);
    // upstream is [out_ch x L]; returns the input gradient and accumulates
    // v/g/q gradients. Must follow a forward on the same input.
    Tensor backward(const Tensor& upstream);

    void zero_grad();
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

    // Effective kernel w[o][c][i] for inspection/tests.
    Tensor effective_weight() const;

    Tensor v;                   // raw kernel directions [out x in x k]
    std::vector<double> g;      // per-output-channel gains
    std::vector<double> q;      // biases
    Tensor v_grad;
    std::vector<double> g_grad;
    std::vector<double> q_grad;

private:
    void refresh_effective();

    std::size_t in_ch_, out_ch_, kernel_, dilation_;
    std::vector<double> norms_;              // ||v[o]|| from the last refresh
    std::vector<std::vector<double>> wt_;    // per-tap [out x in] effective slices
    std::vector<std::vector<double>> wtT_;   // per-tap transposed [in x out]
    Tensor xpad_;                            // cached padded input
    std::size_t cached_len_ = 0;
    bool have_forward_ = false;
};

}  // namespace mktcn

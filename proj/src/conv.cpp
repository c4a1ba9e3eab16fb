#include "mktcn/conv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mktcn/linalg.hpp"

namespace mktcn {

Tensor causal_pad(const Tensor& x, std::size_t kernel, std::size_t dilation) {
    if (x.ndim() != 2) throw std::invalid_argument("causal_pad: expects [ch x L]");
    if (kernel < 1 || dilation < 1)
        throw std::invalid_argument("causal_pad: kernel and dilation must be >= 1");
    const std::size_t ch = x.dim(0), len = x.dim(1);
    const std::size_t pad = (kernel - 1) * dilation;
    Tensor out({ch, len + pad});
    for (std::size_t c = 0; c < ch; ++c)
        std::copy(x.data() + c * len, x.data() + (c + 1) * len,
                  out.data() + c * (len + pad) + pad);
    return out;
}

ConvLayer::ConvLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                     std::size_t dilation, Rng& rng)
    : v({out_ch, in_ch, kernel}),
      g(out_ch),
      q(out_ch, 0.0),
      v_grad({out_ch, in_ch, kernel}),
      g_grad(out_ch, 0.0),
      q_grad(out_ch, 0.0),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      dilation_(dilation),
      norms_(out_ch) {
    if (in_ch == 0 || out_ch == 0 || kernel == 0 || dilation == 0)
        throw std::invalid_argument("ConvLayer: all dimensions must be positive");
    const double std = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal(0.0, std);
    // g = ||v|| so weight norm starts out as the plain convolution.
    const std::size_t row = in_ch * kernel;
    for (std::size_t o = 0; o < out_ch; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < row; ++i) s += v[o * row + i] * v[o * row + i];
        g[o] = std::sqrt(s);
    }
    wt_.assign(kernel, std::vector<double>(out_ch * in_ch));
    wtT_.assign(kernel, std::vector<double>(in_ch * out_ch));
}

void ConvLayer::refresh_effective() {
    const std::size_t row = in_ch_ * kernel_;
    for (std::size_t o = 0; o < out_ch_; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < row; ++i) s += v[o * row + i] * v[o * row + i];
        const double norm = std::sqrt(s);
        if (norm == 0.0)
            throw std::runtime_error("ConvLayer: ||v|| vanished for output channel " +
                                     std::to_string(o));
        norms_[o] = norm;
        const double scale = g[o] / norm;
        for (std::size_t c = 0; c < in_ch_; ++c)
            for (std::size_t i = 0; i < kernel_; ++i) {
                const double w = scale * v[(o * in_ch_ + c) * kernel_ + i];
                wt_[i][o * in_ch_ + c] = w;
                wtT_[i][c * out_ch_ + o] = w;
            }
    }
}

Tensor ConvLayer::effective_weight() const {
    Tensor w({out_ch_, in_ch_, kernel_});
    const std::size_t row = in_ch_ * kernel_;
    for (std::size_t o = 0; o < out_ch_; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < row; ++i) s += v[o * row + i] * v[o * row + i];
        const double scale = g[o] / std::sqrt(s);
        for (std::size_t i = 0; i < row; ++i) w[o * row + i] = scale * v[o * row + i];
    }
    return w;
}

Tensor ConvLayer::forward(const Tensor& x) {
    if (x.ndim() != 2 || x.dim(0) != in_ch_)
        throw std::invalid_argument("ConvLayer::forward: expected " + std::to_string(in_ch_) +
                                    " channels, got " + x.shape_str());
    refresh_effective();
    const std::size_t len = x.dim(1);
    const std::size_t lpad = len + (kernel_ - 1) * dilation_;
    xpad_ = causal_pad(x, kernel_, dilation_);
    cached_len_ = len;
    Tensor y({out_ch_, len});
    for (std::size_t o = 0; o < out_ch_; ++o)
        std::fill(y.data() + o * len, y.data() + (o + 1) * len, q[o]);
    for (std::size_t i = 0; i < kernel_; ++i)
        gemm_acc(y.data(), wt_[i].data(), xpad_.data() + i * dilation_,
                 out_ch_, in_ch_, len, len, in_ch_, lpad);
    have_forward_ = true;
    return y;
}

Tensor ConvLayer::backward(const Tensor& upstream) {
    if (!have_forward_)
        throw std::logic_error("ConvLayer::backward called before forward");
    if (upstream.ndim() != 2 || upstream.dim(0) != out_ch_ || upstream.dim(1) != cached_len_)
        throw std::invalid_argument("ConvLayer::backward: upstream shape mismatch " +
                                    upstream.shape_str());
    const std::size_t len = cached_len_;
    const std::size_t lpad = len + (kernel_ - 1) * dilation_;

    for (std::size_t o = 0; o < out_ch_; ++o) {
        double s = 0.0;
        for (std::size_t t = 0; t < len; ++t) s += upstream[o * len + t];
        q_grad[o] += s;
    }

    // Effective-weight gradient per tap, then mapped through weight norm.
    std::vector<double> gw(out_ch_ * in_ch_ * kernel_, 0.0);
    std::vector<double> gw_tap(out_ch_ * in_ch_);
    for (std::size_t i = 0; i < kernel_; ++i) {
        std::fill(gw_tap.begin(), gw_tap.end(), 0.0);
        gemm_abt_acc(gw_tap.data(), upstream.data(), xpad_.data() + i * dilation_,
                     out_ch_, len, in_ch_, in_ch_, len, lpad);
        for (std::size_t o = 0; o < out_ch_; ++o)
            for (std::size_t c = 0; c < in_ch_; ++c)
                gw[(o * in_ch_ + c) * kernel_ + i] = gw_tap[o * in_ch_ + c];
    }
    const std::size_t row = in_ch_ * kernel_;
    for (std::size_t o = 0; o < out_ch_; ++o) {
        // d/dg = <gw, v/||v||>; d/dv = (g/||v||) (gw - <gw, v/||v||> v/||v||)
        const double norm = norms_[o];
        double dot = 0.0;
        for (std::size_t i = 0; i < row; ++i) dot += gw[o * row + i] * v[o * row + i];
        dot /= norm;
        g_grad[o] += dot;
        const double scale = g[o] / norm;
        for (std::size_t i = 0; i < row; ++i)
            v_grad[o * row + i] += scale * (gw[o * row + i] - dot * v[o * row + i] / norm);
    }

    Tensor gxpad({in_ch_, lpad});
    for (std::size_t i = 0; i < kernel_; ++i)
        gemm_acc(gxpad.data() + i * dilation_, wtT_[i].data(), upstream.data(),
                 in_ch_, out_ch_, len, lpad, out_ch_, len);
    Tensor gx({in_ch_, len});
    const std::size_t pad = (kernel_ - 1) * dilation_;
    for (std::size_t c = 0; c < in_ch_; ++c)
        std::copy(gxpad.data() + c * lpad + pad, gxpad.data() + (c + 1) * lpad,
                  gx.data() + c * len);
    return gx;
}

void ConvLayer::zero_grad() {
    v_grad.fill(0.0);
    std::fill(g_grad.begin(), g_grad.end(), 0.0);
    std::fill(q_grad.begin(), q_grad.end(), 0.0);
}

void ConvLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".v", v.data(), v_grad.data(), v.size(),
                   {out_ch_, in_ch_, kernel_}});
    out.push_back({prefix + ".g", g.data(), g_grad.data(), g.size(), {out_ch_}});
    out.push_back({prefix + ".q", q.data(), q_grad.data(), q.size(), {out_ch_}});
}

}  // namespace mktcn

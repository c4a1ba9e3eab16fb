#include "mktcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mktcn {

std::string head_type_name(HeadType t) { return t == HeadType::kan ? "kan" : "dense"; }

HeadType head_type_from_name(const std::string& name) {
    if (name == "kan") return HeadType::kan;
    if (name == "dense") return HeadType::dense;
    throw std::invalid_argument("unknown head type: " + name);
}

DenseLayer::DenseLayer(std::size_t n_in, std::size_t n_out, Rng& rng)
    : w(n_out * n_in), b(n_out, 0.0), w_grad(n_out * n_in, 0.0), b_grad(n_out, 0.0),
      n_in_(n_in), n_out_(n_out) {
    const double std = 1.0 / std::sqrt(static_cast<double>(n_in));
    for (auto& x : w) x = rng.normal(0.0, std);
}

std::vector<double> DenseLayer::forward(const std::vector<double>& x) {
    if (x.size() != n_in_) throw std::invalid_argument("DenseLayer::forward: size mismatch");
    cache_x_ = x;
    have_forward_ = true;
    std::vector<double> out(n_out_);
    for (std::size_t j = 0; j < n_out_; ++j) {
        double s = b[j];
        const double* wr = &w[j * n_in_];
        for (std::size_t i = 0; i < n_in_; ++i) s += wr[i] * x[i];
        out[j] = s;
    }
    return out;
}

std::vector<double> DenseLayer::backward(const std::vector<double>& upstream) {
    if (!have_forward_) throw std::logic_error("DenseLayer::backward called before forward");
    if (upstream.size() != n_out_)
        throw std::invalid_argument("DenseLayer::backward: upstream size mismatch");
    std::vector<double> gx(n_in_, 0.0);
    for (std::size_t j = 0; j < n_out_; ++j) {
        const double u = upstream[j];
        b_grad[j] += u;
        double* wg = &w_grad[j * n_in_];
        const double* wr = &w[j * n_in_];
        for (std::size_t i = 0; i < n_in_; ++i) {
            wg[i] += u * cache_x_[i];
            gx[i] += u * wr[i];
        }
    }
    return gx;
}

void DenseLayer::zero_grad() {
    std::fill(w_grad.begin(), w_grad.end(), 0.0);
    std::fill(b_grad.begin(), b_grad.end(), 0.0);
}

void DenseLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", w.data(), w_grad.data(), w.size(), {n_out_, n_in_}});
    out.push_back({prefix + ".b", b.data(), b_grad.data(), b.size(), {n_out_}});
}

MktcnModel::MktcnModel(const ModelConfig& cfg, uint64_t init_seed)
    : MktcnModel(cfg, Rng(init_seed)) {}

MktcnModel::MktcnModel(const ModelConfig& cfg, Rng rng)
    : tcn(cfg.input_len, cfg.hidden, cfg.kernel, cfg.dropout, rng), cfg_(cfg) {
    if (cfg.n_classes < 2) throw std::invalid_argument("MktcnModel: need >= 2 classes");
    if (cfg.head == HeadType::kan) {
        BSplineBasis basis(cfg.spline_order, cfg.grid_size, -cfg.kan_domain, cfg.kan_domain);
        kan.emplace(cfg.input_len, cfg.n_classes, basis, rng);
    } else {
        dense.emplace(cfg.input_len, cfg.n_classes, rng);
    }
    norm_mean_.assign(cfg.input_len, 0.0);
    norm_scale_.assign(cfg.input_len, 1.0);
}

std::vector<double> MktcnModel::forward_logits(std::span<const double> sample,
                                               bool training, Rng* rng) {
    std::vector<double> h = tcn.forward(sample, training, rng);
    if (cfg_.head_input_norm)
        for (std::size_t i = 0; i < h.size(); ++i)
            h[i] = (h[i] - norm_mean_[i]) / norm_scale_[i];
    return kan ? kan->forward(h) : dense->forward(h);
}

std::vector<double> MktcnModel::backward_from_logits(const std::vector<double>& dlogits) {
    std::vector<double> gh = kan ? kan->backward(dlogits) : dense->backward(dlogits);
    if (cfg_.head_input_norm)
        for (std::size_t i = 0; i < gh.size(); ++i) gh[i] /= norm_scale_[i];
    return tcn.backward(gh);
}

std::vector<double> MktcnModel::predict_probs(std::span<const double> sample) {
    return softmax(forward_logits(sample, false, nullptr));
}

void MktcnModel::zero_grad() {
    tcn.zero_grad();
    if (kan) kan->zero_grad();
    if (dense) dense->zero_grad();
}

std::vector<ParamRef> MktcnModel::params() {
    std::vector<ParamRef> out;
    tcn.collect_params(out);
    if (kan) {
        const std::size_t nb = kan->basis().count();
        out.push_back({"head.kan.coef", kan->coef().data(), kan->coef_grad().data(),
                       kan->coef().size(), {kan->n_out(), kan->n_in(), nb}});
        out.push_back({"head.kan.mu", kan->mu().data(), kan->mu_grad().data(),
                       kan->mu().size(), {kan->n_out(), kan->n_in()}});
        out.push_back({"head.kan.omega", kan->omega().data(), kan->omega_grad().data(),
                       kan->omega().size(), {kan->n_out(), kan->n_in()}});
    }
    if (dense) dense->collect_params("head.dense", out);
    return out;
}

std::size_t MktcnModel::param_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.size;
    return n;
}

void MktcnModel::set_head_norm(std::vector<double> mean, std::vector<double> scale) {
    if (mean.size() != cfg_.input_len || scale.size() != cfg_.input_len)
        throw std::invalid_argument("set_head_norm: length mismatch");
    for (double s : scale)
        if (!(s > 0.0)) throw std::invalid_argument("set_head_norm: scales must be positive");
    norm_mean_ = std::move(mean);
    norm_scale_ = std::move(scale);
}

}  // namespace mktcn

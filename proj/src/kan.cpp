#include "mktcn/kan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mktcn {

double swish(double x) { return x / (1.0 + std::exp(-x)); }

double swish_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

double phi_eval(const KanEdge& edge, const BSplineBasis& basis, double x) {
    if (edge.coef.size() != basis.count())
        throw std::invalid_argument("phi_eval: coefficient count does not match basis");
    double nz[8];
    const std::size_t first = basis.eval_nonzero(x, nz);
    double spline = 0.0;
    for (int s = 0; s <= basis.order(); ++s) spline += edge.coef[first + s] * nz[s];
    return edge.mu * swish(x) + edge.omega_w * spline;
}

KanLayer::KanLayer(std::size_t n_in, std::size_t n_out, BSplineBasis basis, Rng& rng)
    : n_in_(n_in), n_out_(n_out), basis_(std::move(basis)) {
    if (n_in == 0 || n_out == 0)
        throw std::invalid_argument("KanLayer: dimensions must be positive");
    const std::size_t nb = n_basis();
    coef_.resize(n_out * n_in * nb);
    mu_.resize(n_out * n_in);
    omega_.resize(n_out * n_in, 1.0);
    for (auto& c : coef_) c = rng.normal(0.0, 0.1);
    const double mu_std = 1.0 / std::sqrt(static_cast<double>(n_in));
    for (auto& m : mu_) m = rng.normal(0.0, mu_std);
    coef_grad_.assign(coef_.size(), 0.0);
    mu_grad_.assign(mu_.size(), 0.0);
    omega_grad_.assign(omega_.size(), 0.0);
    cache_x_.resize(n_in);
    cache_nz_.resize(n_in * (basis_.order() + 1));
    cache_first_.resize(n_in);
    cache_clamped_.resize(n_in);
}

void KanLayer::zero_grad() {
    std::fill(coef_grad_.begin(), coef_grad_.end(), 0.0);
    std::fill(mu_grad_.begin(), mu_grad_.end(), 0.0);
    std::fill(omega_grad_.begin(), omega_grad_.end(), 0.0);
}

KanEdge KanLayer::edge(std::size_t j, std::size_t i) const {
    const std::size_t nb = n_basis();
    KanEdge e;
    e.coef.assign(coef_.begin() + edge_index(j, i) * nb,
                  coef_.begin() + (edge_index(j, i) + 1) * nb);
    e.mu = mu_[edge_index(j, i)];
    e.omega_w = omega_[edge_index(j, i)];
    return e;
}

std::vector<double> KanLayer::forward(const std::vector<double>& x) {
    if (x.size() != n_in_)
        throw std::invalid_argument("KanLayer::forward: expected " + std::to_string(n_in_) +
                                    " inputs, got " + std::to_string(x.size()));
    const int p = basis_.order();
    const std::size_t nb = n_basis();
    std::vector<double> out(n_out_, 0.0);
    for (std::size_t i = 0; i < n_in_; ++i) {
        bool clamped = false;
        double* nz = &cache_nz_[i * (p + 1)];
        const std::size_t first = basis_.eval_nonzero(x[i], nz, &clamped);
        cache_first_[i] = first;
        cache_clamped_[i] = clamped ? 1 : 0;
        cache_x_[i] = x[i];
        const double sw = swish(x[i]);
        for (std::size_t j = 0; j < n_out_; ++j) {
            const std::size_t e = edge_index(j, i);
            const double* d = &coef_[e * nb + first];
            double spline = 0.0;
            for (int s = 0; s <= p; ++s) spline += d[s] * nz[s];
            out[j] += mu_[e] * sw + omega_[e] * spline;
        }
    }
    have_forward_ = true;
    return out;
}

std::vector<double> KanLayer::backward(const std::vector<double>& upstream) {
    if (!have_forward_)
        throw std::logic_error("KanLayer::backward called before forward");
    if (upstream.size() != n_out_)
        throw std::invalid_argument("KanLayer::backward: upstream size mismatch");
    const int p = basis_.order();
    const std::size_t nb = n_basis();
    std::vector<double> gx(n_in_, 0.0);
    double dnz[8];
    for (std::size_t i = 0; i < n_in_; ++i) {
        const double xi = cache_x_[i];
        const double sw = swish(xi);
        const double swg = swish_grad(xi);
        const double* nz = &cache_nz_[i * (p + 1)];
        const std::size_t first = cache_first_[i];
        const bool clamped = cache_clamped_[i] != 0;
        if (!clamped) basis_.deriv_nonzero(xi, dnz);
        for (std::size_t j = 0; j < n_out_; ++j) {
            const double u = upstream[j];
            if (u == 0.0) continue;
            const std::size_t e = edge_index(j, i);
            const double* d = &coef_[e * nb + first];
            double* dg = &coef_grad_[e * nb + first];
            double spline = 0.0, dspline = 0.0;
            for (int s = 0; s <= p; ++s) {
                spline += d[s] * nz[s];
                dg[s] += u * omega_[e] * nz[s];
                if (!clamped) dspline += d[s] * dnz[s];
            }
            mu_grad_[e] += u * sw;
            omega_grad_[e] += u * spline;
            gx[i] += u * (mu_[e] * swg + omega_[e] * dspline);
        }
    }
    return gx;
}

std::vector<double> kan_forward(std::vector<KanLayer>& layers, const std::vector<double>& x) {
    std::vector<double> v = x;
    for (auto& layer : layers) v = layer.forward(v);
    return v;
}

}  // namespace mktcn

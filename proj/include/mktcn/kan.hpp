#pragma once

#include <cstddef>
#include <vector>

#include "mktcn/bspline.hpp"
#include "mktcn/rng.hpp"

namespace mktcn {

// One learnable edge function phi(x) = mu * swish(x) + omega_w * sum d_i B_i(x).
struct KanEdge {
    std::vector<double> coef;  // spline coefficients, one per basis function
    double mu = 0.0;           // base (Swish) path weight
    double omega_w = 1.0;      // spline path weight
};

double swish(double x);
double swish_grad(double x);

double phi_eval(const KanEdge& edge, const BSplineBasis& basis, double x);

// Fully-connected layer of edge functions: out_j = sum_i phi_{j,i}(x_i).
// Parameters are stored flat (coef, mu, omega per edge) with matching
// gradient buffers that accumulate across backward calls.
class KanLayer {
public:
    KanLayer(std::size_t n_in, std::size_t n_out, BSplineBasis basis, Rng& rng);

    std::size_t n_in() const { return n_in_; }
    std::size_t n_out() const { return n_out_; }
    const BSplineBasis& basis() const { return basis_; }

    std::vector<double> forward(const std::vector<double>& x);
    // Returns the input gradient; parameter gradients accumulate into
    // coef_grad/mu_grad/omega_grad. Requires a preceding forward.
    std::vector<double> backward(const std::vector<double>& upstream);

    void zero_grad();

    KanEdge edge(std::size_t j, std::size_t i) const;

    // Flat parameter/gradient access for the optimizer and checkpointing.
    std::vector<double>& coef() { return coef_; }
    std::vector<double>& mu() { return mu_; }
    std::vector<double>& omega() { return omega_; }
    const std::vector<double>& coef() const { return coef_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<double>& omega() const { return omega_; }
    std::vector<double>& coef_grad() { return coef_grad_; }
    std::vector<double>& mu_grad() { return mu_grad_; }
    std::vector<double>& omega_grad() { return omega_grad_; }

private:
    std::size_t n_basis() const { return basis_.count(); }
    std::size_t edge_index(std::size_t j, std::size_t i) const { return j * n_in_ + i; }

    std::size_t n_in_, n_out_;
    BSplineBasis basis_;
    std::vector<double> coef_;   // [n_out * n_in * n_basis]
    std::vector<double> mu_;     // [n_out * n_in]
    std::vector<double> omega_;  // [n_out * n_in]
    std::vector<double> coef_grad_, mu_grad_, omega_grad_;

    // forward cache
    bool have_forward_ = false;
    std::vector<double> cache_x_;
    std::vector<double> cache_nz_;       // [n_in * (order+1)] basis values
    std::vector<std::size_t> cache_first_;
    std::vector<char> cache_clamped_;
};

// Composition of layers (single layer in the default model head).
std::vector<double> kan_forward(std::vector<KanLayer>& layers, const std::vector<double>& x);

}  // namespace mktcn

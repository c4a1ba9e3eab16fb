#pragma once

#include <cstddef>
#include <vector>

namespace mktcn {

// Uniform B-spline basis on [lo, hi] with `grid_size` interior intervals and
// `order` extra knots extended past each end. Basis count = grid_size + order.
// Inputs are clamped to the domain before evaluation; inside the domain the
// basis is non-negative and sums to one.
class BSplineBasis {
public:
    BSplineBasis(int order = 3, int grid_size = 5, double lo = -1.0, double hi = 1.0);

    int order() const { return order_; }
    int grid_size() const { return grid_size_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<double>& knots() const { return knots_; }
    std::size_t count() const { return static_cast<std::size_t>(grid_size_ + order_); }

    // Values of all grid_size+order basis functions at x (Cox-de Boor).
    std::vector<double> eval(double x) const;

    // The order+1 basis functions that are non-zero at x. Writes values into
    // `vals` and returns the index of the first one. `clamped` reports whether
    // x fell outside [lo, hi].
    std::size_t eval_nonzero(double x, double* vals, bool* clamped = nullptr) const;

    // d/dx of the same non-zero window. Callers zero the result themselves
    // when the input was clamped (flat extension outside the domain).
    std::size_t deriv_nonzero(double x, double* vals) const;

private:
    std::size_t find_span(double x) const;

    int order_;
    int grid_size_;
    double lo_, hi_, step_;
    std::vector<double> knots_;
};

}  // namespace mktcn

#include "mktcn/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mktcn {

BSplineBasis::BSplineBasis(int order, int grid_size, double lo, double hi)
    : order_(order), grid_size_(grid_size), lo_(lo), hi_(hi) {
    if (order < 1 || order > 7)
        throw std::invalid_argument("BSplineBasis: order must be in [1, 7]");
    if (grid_size < 1) throw std::invalid_argument("BSplineBasis: grid_size must be >= 1");
    if (!(hi > lo)) throw std::invalid_argument("BSplineBasis: empty domain");
    step_ = (hi - lo) / grid_size;
    knots_.resize(static_cast<std::size_t>(grid_size + 1 + 2 * order));
    for (std::size_t j = 0; j < knots_.size(); ++j)
        knots_[j] = lo + (static_cast<double>(j) - order) * step_;
}

std::size_t BSplineBasis::find_span(double x) const {
    // Domain intervals are [t_span, t_span+1) for span in [order, order+G-1];
    // the right boundary belongs to the last interval.
    auto cell = static_cast<long>(std::floor((x - lo_) / step_));
    cell = std::clamp(cell, 0L, static_cast<long>(grid_size_ - 1));
    return static_cast<std::size_t>(order_ + cell);
}

std::size_t BSplineBasis::eval_nonzero(double x, double* vals, bool* clamped) const {
    const double xc = std::clamp(x, lo_, hi_);
    if (clamped) *clamped = (x < lo_ || x > hi_);
    const std::size_t span = find_span(xc);
    const int p = order_;
    double left[8], right[8];
    vals[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = xc - knots_[span + 1 - j];
        right[j] = knots_[span + j] - xc;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }
    // Rounding at knot boundaries can leave ~1e-16 negatives where the basis
    // is exactly zero; the basis itself is non-negative.
    for (int j = 0; j <= p; ++j)
        if (vals[j] < 0.0) vals[j] = 0.0;
    return span - p;  // index of the first non-zero basis function
}

std::size_t BSplineBasis::deriv_nonzero(double x, double* vals) const {
    const double xc = std::clamp(x, lo_, hi_);
    const std::size_t span = find_span(xc);
    const int p = order_;
    // Degree p-1 values at the same span, then the standard derivative formula
    // B'_{i,p} = p * (B_{i,p-1}/(t_{i+p}-t_i) - B_{i+1,p-1}/(t_{i+p+1}-t_{i+1})).
    double low[8] = {0.0};
    low[0] = 1.0;
    for (int j = 1; j <= p - 1; ++j) {
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = (knots_[span + r + 1] - xc) + (xc - knots_[span + 1 - j + r]);
            const double temp = low[r] / denom;
            low[r] = saved + (knots_[span + r + 1] - xc) * temp;
            saved = (xc - knots_[span + 1 - j + r]) * temp;
        }
        low[j] = saved;
    }
    // low[r] = B_{span-(p-1)+r, p-1}(x) for r = 0..p-1
    const std::size_t first = span - p;
    for (int i = 0; i <= p; ++i) {
        const std::size_t gi = first + i;  // global index of B_{gi,p}
        double term1 = 0.0, term2 = 0.0;
        // B_{gi,p-1} is low[gi - (span-(p-1))] when in window [span-p+1, span]
        const long r1 = static_cast<long>(gi) - static_cast<long>(span - (p - 1));
        if (r1 >= 0 && r1 <= p - 1)
            term1 = low[r1] / (knots_[gi + p] - knots_[gi]);
        const long r2 = r1 + 1;
        if (r2 >= 0 && r2 <= p - 1)
            term2 = low[r2] / (knots_[gi + p + 1] - knots_[gi + 1]);
        vals[i] = p * (term1 - term2);
    }
    return first;
}

std::vector<double> BSplineBasis::eval(double x) const {
    std::vector<double> out(count(), 0.0);
    double nz[8];
    const std::size_t first = eval_nonzero(x, nz);
    for (int i = 0; i <= order_; ++i) out[first + i] = nz[i];
    return out;
}

}  // namespace mktcn

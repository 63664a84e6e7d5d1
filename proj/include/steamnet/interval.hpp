#pragma once

#include <algorithm>

namespace steamnet {

/// Closed scalar interval [lo, hi]. All constraint sets of the stack are of this kind,
/// so Minkowski sums and Pontryagin differences reduce to endpoint arithmetic.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool empty() const { return !(lo <= hi); }
    double width() const { return hi - lo; }
    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    /// Pontryagin difference with the symmetric box [-r, r].
    Interval shrink(double r) const { return {lo + r, hi - r}; }
    Interval intersect(const Interval& o) const { return {std::max(lo, o.lo), std::min(hi, o.hi)}; }
    Interval scaled(double c) const { return c >= 0 ? Interval{c * lo, c * hi} : Interval{c * hi, c * lo}; }
};

} // namespace steamnet

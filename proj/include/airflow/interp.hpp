// One-dimensional interpolation helpers.
#pragma once

#include <span>
#include <vector>

namespace airflow {

/// Modified Akima (makima) piecewise-cubic Hermite interpolant.
///
/// Node derivatives use the modified Akima weights
///   w1 = |d[i+1] - d[i]| + |d[i+1] + d[i]| / 2,
///   w2 = |d[i-1] - d[i-2]| + |d[i-1] + d[i-2]| / 2,
///   y'[i] = (w1 d[i-1] + w2 d[i]) / (w1 + w2),
/// where d are the secant slopes. Missing slopes beyond either end are
/// replicated from the nearest interior secant, so three nodes are enough.
/// With two nodes the interpolant is linear; with one it is constant.
class Makima {
public:
    Makima() = default;
    /// `x` must be strictly increasing and the same length as `y`.
    Makima(std::span<const double> x, std::span<const double> y);

    /// Evaluates at `x`, clamped to the node range. Returns node values exactly at nodes.
    double operator()(double x) const;

    const std::vector<double> &derivatives() const { return slope_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slope_;
};

} // namespace airflow

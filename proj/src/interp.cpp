#include "airflow/interp.hpp"

#include "airflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace airflow {

Makima::Makima(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), slope_(x.size(), 0.0) {
    if (x_.empty() || x_.size() != y_.size())
        throw InvalidArgument("makima: node and value arrays must be non-empty and equal length");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw InvalidArgument("makima: nodes must be strictly increasing");

    const std::size_t n = x_.size();
    if (n == 1) return;
    std::vector<double> secant(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) secant[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    if (n == 2) {
        slope_[0] = slope_[1] = secant[0];
        return;
    }
    // Secant index k may run from -2 to n; out-of-range indices replicate the ends.
    const auto d = [&](long k) {
        k = std::clamp<long>(k, 0, static_cast<long>(n) - 2);
        return secant[static_cast<std::size_t>(k)];
    };
    for (std::size_t i = 0; i < n; ++i) {
        const long k = static_cast<long>(i);
        const double w1 = std::abs(d(k + 1) - d(k)) + 0.5 * std::abs(d(k + 1) + d(k));
        const double w2 = std::abs(d(k - 1) - d(k - 2)) + 0.5 * std::abs(d(k - 1) + d(k - 2));
        const double den = w1 + w2;
        slope_[i] = den > 0.0 ? (w1 * d(k - 1) + w2 * d(k)) / den : 0.5 * (d(k - 1) + d(k));
    }
}

double Makima::operator()(double x) const {
    const std::size_t n = x_.size();
    if (n == 1 || x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    if (x == x_[i]) return y_[i];
    const double hstep = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / hstep;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * hstep * slope_[i] + h01 * y_[i + 1] + h11 * hstep * slope_[i + 1];
}

} // namespace airflow

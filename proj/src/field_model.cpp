#include "airflow/field_model.hpp"

#include "airflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace airflow {

namespace {

// Makima may overshoot between nodes; pull the result back inside the
// coefficient invariants without touching valid values.
RadialProfile enforce_shape(RadialProfile p) {
    constexpr double kGap = 1e-9;
    p.b1 = std::max(p.b1, kGap);
    p.b2 = std::min(p.b2, -kGap);
    p.b3 = std::min(p.b3, p.b2 - kGap);
    return p;
}

RadialProfile lerp(const RadialProfile &a, const RadialProfile &b, double t) {
    return {a.b1 + t * (b.b1 - a.b1), a.b2 + t * (b.b2 - a.b2), a.b3 + t * (b.b3 - a.b3)};
}

} // namespace

void RadialProfile::validate() const {
    if (!valid())
        throw InvalidArgument("radial profile (" + std::to_string(b1) + ", " + std::to_string(b2) +
                              ", " + std::to_string(b3) + ") violates b1 > 0, b3 < b2 < 0");
}

double RadialProfile::peak_radius() const { return std::log(b2 / b3) / (b3 - b2); }

double radial_speed(const RadialProfile &p, double r) {
    return std::max(0.0, p.b1 * (std::exp(p.b2 * r) - std::exp(p.b3 * r)));
}

std::size_t nearest_alpha_bin(double alpha_deg) {
    const double u = std::floor(wrap_deg(alpha_deg) + 180.0 + 0.5);
    return static_cast<std::size_t>(u) % kAlphaBins;
}

FieldModel::FieldModel(FieldGeometry geometry, std::vector<double> tilt_nodes,
                       std::vector<AlphaTable> profiles)
    : geometry_(geometry), tilt_nodes_(std::move(tilt_nodes)), profiles_(std::move(profiles)) {
    geometry_.validate();
    if (tilt_nodes_.empty()) throw InvalidArgument("field model: no tilt nodes");
    if (tilt_nodes_.size() != profiles_.size())
        throw InvalidArgument("field model: one alpha table per tilt node required");
    for (std::size_t i = 0; i < tilt_nodes_.size(); ++i) {
        if (!(tilt_nodes_[i] >= 0.0 && tilt_nodes_[i] < 90.0))
            throw InvalidArgument("field model: tilt node outside [0, 90)");
        if (i > 0 && !(tilt_nodes_[i] > tilt_nodes_[i - 1]))
            throw InvalidArgument("field model: tilt nodes must be strictly increasing");
        for (std::size_t bin = 0; bin < kAlphaBins; ++bin) {
            if (!profiles_[i][bin].valid())
                throw InvalidArgument("field model: invalid profile at tilt " +
                                      std::to_string(tilt_nodes_[i]) + ", alpha " +
                                      std::to_string(alpha_bin_center(bin)));
        }
    }
    interpolants_.resize(kAlphaBins);
    std::vector<double> column(tilt_nodes_.size());
    for (std::size_t bin = 0; bin < kAlphaBins; ++bin) {
        for (std::size_t coef = 0; coef < 3; ++coef) {
            for (std::size_t i = 0; i < tilt_nodes_.size(); ++i) {
                const RadialProfile &p = profiles_[i][bin];
                column[i] = coef == 0 ? p.b1 : (coef == 1 ? p.b2 : p.b3);
            }
            interpolants_[bin][coef] = Makima(tilt_nodes_, column);
        }
    }
}

AlphaTable FieldModel::table_at_tilt(double tilt_deg) const {
    tilt_deg = std::clamp(tilt_deg, tilt_nodes_.front(), tilt_nodes_.back());
    const auto node = std::find(tilt_nodes_.begin(), tilt_nodes_.end(), tilt_deg);
    if (node != tilt_nodes_.end()) return profiles_[static_cast<std::size_t>(node - tilt_nodes_.begin())];
    AlphaTable table;
    for (std::size_t bin = 0; bin < kAlphaBins; ++bin) {
        const auto &f = interpolants_[bin];
        table[bin] = enforce_shape({f[0](tilt_deg), f[1](tilt_deg), f[2](tilt_deg)});
    }
    return table;
}

FieldSnapshot::FieldSnapshot(const FieldModel &model, const NozzleOrientation &orientation)
    : orientation_(orientation),
      stagnation_(stagnation_point(orientation, model.geometry())),
      pan_deg_(orientation.pan_deg),
      effective_tilt_(std::clamp(orientation.tilt_deg, model.tilt_nodes().front(),
                                 model.tilt_nodes().back())),
      extrapolated_(!model.covers_tilt(orientation.tilt_deg)),
      table_(model.table_at_tilt(orientation.tilt_deg)) {}

RadialProfile FieldSnapshot::profile_at(double alpha_rel_deg) const {
    const double u = wrap_deg(alpha_rel_deg) + 180.0;
    const double lower = std::floor(u);
    const double frac = u - lower;
    const std::size_t i = static_cast<std::size_t>(lower) % kAlphaBins;
    if (frac == 0.0) return table_[i];
    return lerp(table_[i], table_[(i + 1) % kAlphaBins], frac);
}

double FieldSnapshot::air_speed(const Vec2 &p) const {
    const Vec2 d = p - stagnation_;
    const double r = norm(d);
    if (r == 0.0) return 0.0;
    const double alpha = rad_to_deg(std::atan2(d.y, d.x));
    return radial_speed(profile_at(alpha - pan_deg_), r);
}

AirVelocity FieldSnapshot::air_velocity(const Vec2 &p) const {
    const Vec2 d = p - stagnation_;
    const double r = norm(d);
    if (r == 0.0) return {{0.0, 0.0}, extrapolated_};
    const double alpha = rad_to_deg(std::atan2(d.y, d.x));
    const double speed = radial_speed(profile_at(alpha - pan_deg_), r);
    return {(speed / r) * d, extrapolated_};
}

AirVelocity air_velocity(const FieldModel &model, const NozzleOrientation &o, const Vec2 &p) {
    return model.snapshot(o).air_velocity(p);
}

} // namespace airflow

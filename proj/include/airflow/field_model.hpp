// Analytical jet-induced airflow field on the floor plane.
//
// Air speed along a radial direction alpha from the stagnation point s follows
//   v(r) = b1 (exp(b2 r) - exp(b3 r)),   b1 > 0, b3 < b2 < 0,
// with one (b1, b2, b3) triple per 1-degree alpha bin and per tilt node.
// Alpha is measured relative to the pan heading, so a single table serves
// every pan angle. Between bins the coefficients are interpolated linearly
// (periodic), between tilt nodes with modified Akima.
#pragma once

#include "airflow/geometry.hpp"
#include "airflow/interp.hpp"
#include "airflow/vec2.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace airflow {

struct RadialProfile {
    double b1 = 0.0; ///< m/s
    double b2 = 0.0; ///< 1/m
    double b3 = 0.0; ///< 1/m

    bool valid() const { return b1 > 0.0 && b3 < b2 && b2 < 0.0; }
    /// Throws InvalidArgument unless valid().
    void validate() const;
    /// Radius of the single speed maximum.
    double peak_radius() const;

    friend bool operator==(const RadialProfile &, const RadialProfile &) = default;
};

/// b1 (e^{b2 r} - e^{b3 r}), clamped at zero from below. Requires r >= 0.
double radial_speed(const RadialProfile &p, double r);

/// Number of alpha bins; bin k is centred at alpha = -180 + k degrees.
inline constexpr std::size_t kAlphaBins = 360;

inline constexpr double alpha_bin_center(std::size_t bin) { return -180.0 + static_cast<double>(bin); }
/// Bin whose centre is nearest to `alpha_deg` (any angle, wrapped).
std::size_t nearest_alpha_bin(double alpha_deg);

using AlphaTable = std::array<RadialProfile, kAlphaBins>;

struct AirVelocity {
    Vec2 velocity;             ///< m/s
    bool extrapolated = false; ///< tilt was outside the node range and got clamped
};

/// Read-only view of a steady airflow: where the stagnation point sits and the
/// air speed at any floor point. Flow direction is radial from the stagnation point.
class AirflowField {
public:
    virtual ~AirflowField() = default;
    virtual Vec2 stagnation() const = 0;
    virtual double air_speed(const Vec2 &p) const = 0;
};

/// Constant air speed everywhere except exactly at the stagnation point.
class UniformField final : public AirflowField {
public:
    UniformField(double speed, Vec2 stagnation = {}) : speed_(speed), stagnation_(stagnation) {}
    Vec2 stagnation() const override { return stagnation_; }
    double air_speed(const Vec2 &p) const override { return p == stagnation_ ? 0.0 : speed_; }

private:
    double speed_;
    Vec2 stagnation_;
};

class FieldModel;

/// A FieldModel frozen at one nozzle orientation: stagnation point plus the
/// tilt-interpolated alpha table. Cheap to query, immutable.
class FieldSnapshot final : public AirflowField {
public:
    FieldSnapshot(const FieldModel &model, const NozzleOrientation &orientation);

    Vec2 stagnation() const override { return stagnation_; }
    const NozzleOrientation &orientation() const { return orientation_; }
    bool extrapolated() const { return extrapolated_; }
    /// Tilt actually used for coefficient lookup (after clamping).
    double effective_tilt_deg() const { return effective_tilt_; }

    /// Coefficients at a relative bearing (degrees from the pan heading).
    RadialProfile profile_at(double alpha_rel_deg) const;
    double air_speed(const Vec2 &p) const override;
    AirVelocity air_velocity(const Vec2 &p) const;

private:
    NozzleOrientation orientation_;
    Vec2 stagnation_;
    double pan_deg_ = 0.0;
    double effective_tilt_ = 0.0;
    bool extrapolated_ = false;
    AlphaTable table_;
};

class FieldModel {
public:
    /// `profiles[i]` is the alpha table for `tilt_nodes[i]`. Validates every invariant.
    FieldModel(FieldGeometry geometry, std::vector<double> tilt_nodes,
               std::vector<AlphaTable> profiles);

    const FieldGeometry &geometry() const { return geometry_; }
    const std::vector<double> &tilt_nodes() const { return tilt_nodes_; }
    const std::vector<AlphaTable> &profiles() const { return profiles_; }
    const RadialProfile &stored(std::size_t node, std::size_t bin) const { return profiles_[node][bin]; }

    bool covers_tilt(double tilt_deg) const {
        return tilt_deg >= tilt_nodes_.front() && tilt_deg <= tilt_nodes_.back();
    }

    FieldSnapshot snapshot(const NozzleOrientation &o) const { return {*this, o}; }

    /// Alpha table at `tilt_deg` (clamped into the node range).
    AlphaTable table_at_tilt(double tilt_deg) const;

private:
    FieldGeometry geometry_;
    std::vector<double> tilt_nodes_;
    std::vector<AlphaTable> profiles_;
    // interpolants_[bin][coef] across tilt nodes
    std::vector<std::array<Makima, 3>> interpolants_;
};

/// Predicted air velocity at `p` for nozzle orientation `o`. Zero at the
/// stagnation point. Tilt outside the node range is clamped and flagged.
AirVelocity air_velocity(const FieldModel &model, const NozzleOrientation &o, const Vec2 &p);

} // namespace airflow

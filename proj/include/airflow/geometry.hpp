// Nozzle geometry: projection point, stagnation point and their inverses.
#pragma once

#include "airflow/vec2.hpp"

namespace airflow {

/// Pan/tilt of the air nozzle in degrees. Pan in [-180, 180], tilt in [0, 90).
struct NozzleOrientation {
    double pan_deg = 0.0;
    double tilt_deg = 0.0;

    friend bool operator==(const NozzleOrientation &, const NozzleOrientation &) = default;
};

/// Nozzle shaft height plus the stagnation-offset law ||c - s|| = a1 ||c||^a2.
struct FieldGeometry {
    double h = 1.43;  ///< m
    double a1 = 0.1;
    double a2 = 2.33;

    /// Throws InvalidArgument unless h > 0, a1 >= 0 and a2 > 1.
    void validate() const;

    /// Largest ||c|| for which ||s|| = ||c|| - a1 ||c||^a2 is strictly increasing.
    /// Infinite when a1 == 0.
    double monotone_limit() const;

    /// Image of monotone_limit(): the largest reachable ||s||.
    double max_stagnation_radius() const;
};

void validate(const NozzleOrientation &o);

/// h tan(tilt) [cos pan, sin pan]. Throws DomainError for tilt outside [0, 90).
Vec2 projection_point(const NozzleOrientation &o, const FieldGeometry &g);

/// Inverse of projection_point. At the origin the pan is 0 by convention.
NozzleOrientation orientation_from_projection(const Vec2 &c, const FieldGeometry &g);

/// Stagnation point on the segment origin -> c at distance a1 ||c||^a2 from c.
/// Throws DomainError when ||c|| exceeds FieldGeometry::monotone_limit().
Vec2 stagnation_from_projection(const Vec2 &c, const FieldGeometry &g);

/// Numeric inverse of stagnation_from_projection (bisection, |g(x) - ||s||| <= 1e-6 m
/// or tighter). Throws DomainError when ||s|| is not reachable.
Vec2 projection_from_stagnation(const Vec2 &s, const FieldGeometry &g);

/// Stagnation point implied by a nozzle orientation.
inline Vec2 stagnation_point(const NozzleOrientation &o, const FieldGeometry &g) {
    return stagnation_from_projection(projection_point(o, g), g);
}

/// Orientation that places the stagnation point at `s`.
inline NozzleOrientation orientation_for_stagnation(const Vec2 &s, const FieldGeometry &g) {
    return orientation_from_projection(projection_from_stagnation(s, g), g);
}

} // namespace airflow

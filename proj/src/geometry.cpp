#include "airflow/geometry.hpp"

#include "airflow/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace airflow {

namespace {

double offset_radius(double c_norm, const FieldGeometry &g) {
    return c_norm - g.a1 * std::pow(c_norm, g.a2);
}

} // namespace

void FieldGeometry::validate() const {
    if (!(h > 0.0)) throw InvalidArgument("geometry: h must be > 0");
    if (!(a1 >= 0.0)) throw InvalidArgument("geometry: a1 must be >= 0");
    if (!(a2 > 1.0)) throw InvalidArgument("geometry: a2 must be > 1");
}

double FieldGeometry::monotone_limit() const {
    if (a1 == 0.0) return std::numeric_limits<double>::infinity();
    // g'(x) = 1 - a1 a2 x^(a2-1) vanishes here.
    return std::pow(1.0 / (a1 * a2), 1.0 / (a2 - 1.0));
}

double FieldGeometry::max_stagnation_radius() const {
    const double x = monotone_limit();
    if (std::isinf(x)) return x;
    return offset_radius(x, *this);
}

void validate(const NozzleOrientation &o) {
    if (!(o.pan_deg >= -180.0 && o.pan_deg <= 180.0))
        throw DomainError("orientation: pan " + std::to_string(o.pan_deg) + " outside [-180, 180]");
    if (!(o.tilt_deg >= 0.0 && o.tilt_deg < 90.0))
        throw DomainError("orientation: tilt " + std::to_string(o.tilt_deg) + " outside [0, 90)");
}

Vec2 projection_point(const NozzleOrientation &o, const FieldGeometry &g) {
    validate(o);
    const double radius = g.h * std::tan(deg_to_rad(o.tilt_deg));
    return radius * unit_from_angle(deg_to_rad(o.pan_deg));
}

NozzleOrientation orientation_from_projection(const Vec2 &c, const FieldGeometry &g) {
    const double radius = norm(c);
    if (radius == 0.0) return {0.0, 0.0};
    return {rad_to_deg(std::atan2(c.y, c.x)), rad_to_deg(std::atan(radius / g.h))};
}

Vec2 stagnation_from_projection(const Vec2 &c, const FieldGeometry &g) {
    const double radius = norm(c);
    if (radius == 0.0) return {0.0, 0.0};
    if (radius > g.monotone_limit())
        throw DomainError("stagnation: ||c|| = " + std::to_string(radius) +
                          " m beyond monotone limit " + std::to_string(g.monotone_limit()) + " m");
    return (offset_radius(radius, g) / radius) * c;
}

Vec2 projection_from_stagnation(const Vec2 &s, const FieldGeometry &g) {
    const double target = norm(s);
    if (target == 0.0) return {0.0, 0.0};
    if (g.a1 == 0.0) return s;
    const double hi_limit = g.monotone_limit();
    if (target > offset_radius(hi_limit, g))
        throw DomainError("stagnation: ||s|| = " + std::to_string(target) +
                          " m is not reachable (max " + std::to_string(offset_radius(hi_limit, g)) +
                          " m)");
    // g(x) <= x, so the root lies in [target, hi_limit].
    double lo = target;
    double hi = hi_limit;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (offset_radius(mid, g) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double radius = 0.5 * (lo + hi);
    if (std::abs(offset_radius(radius, g) - target) > 1e-6)
        throw DomainError("stagnation: inversion did not converge");
    return (radius / target) * s;
}

} // namespace airflow

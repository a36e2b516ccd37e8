#include "airflow/synthetic.hpp"

#include "airflow/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace airflow {

RadialProfile ProfileLaw::at(double alpha_rel_deg) const {
    const double c = std::cos(deg_to_rad(alpha_rel_deg));
    const double decay = 1.0 + decay_aniso * c;
    return {base.b1 * (1.0 + b1_aniso * c), base.b2 * decay, base.b3 * decay};
}

void ProfileLaw::validate() const {
    base.validate();
    if (!(std::abs(b1_aniso) < 1.0) || !(std::abs(decay_aniso) < 1.0))
        throw InvalidArgument("profile law: anisotropy amplitudes must lie in (-1, 1)");
}

void SyntheticFieldSpec::validate() const {
    geometry.validate();
    airflow::validate(orientation);
    law.validate();
    if (!(grid_extent_m > 0.0) || resolution < 2)
        throw InvalidArgument("synthetic grid: extent must be > 0 and resolution >= 2");
    if (!(noise >= 0.0)) throw InvalidArgument("synthetic grid: noise must be >= 0");
}

VelocityGrid generate_synthetic_grid(const SyntheticFieldSpec &spec, std::uint64_t seed) {
    spec.validate();
    const Vec2 s = spec.stagnation();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VelocityGrid grid{spec.orientation.tilt_deg, spec.orientation.pan_deg, GridSource::synthetic, {}};
    const double step = spec.grid_extent_m / (spec.resolution - 1);
    const double x0 = spec.grid_center.x - 0.5 * spec.grid_extent_m;
    const double y0 = spec.grid_center.y - 0.5 * spec.grid_extent_m;
    for (int iy = 0; iy < spec.resolution; ++iy)
        for (int ix = 0; ix < spec.resolution; ++ix) {
            const Vec2 p{x0 + ix * step, y0 + iy * step};
            const Vec2 d = p - s;
            const double r = norm(d);
            double speed = 0.0;
            if (r > 0.0) {
                const double alpha = rad_to_deg(std::atan2(d.y, d.x)) - spec.orientation.pan_deg;
                speed = radial_speed(spec.law.at(alpha), r);
            }
            if (spec.noise > 0.0) speed = std::max(0.0, speed * (1.0 + spec.noise * normal(rng)));
            grid.points.push_back({p, speed});
        }
    return grid;
}

FieldModel SyntheticField::to_model() const {
    if (laws.size() != tilt_nodes.size())
        throw InvalidArgument("synthetic field: one law per tilt node required");
    std::vector<AlphaTable> tables(laws.size());
    for (std::size_t i = 0; i < laws.size(); ++i) {
        laws[i].validate();
        for (std::size_t bin = 0; bin < kAlphaBins; ++bin) tables[i][bin] = laws[i].at(alpha_bin_center(bin));
    }
    return FieldModel(geometry, tilt_nodes, std::move(tables));
}

SyntheticField reference_field() {
    SyntheticField f;
    f.tilt_nodes = {0.0, 22.5, 45.0};
    f.laws = {
        {{5.2, -1.5, -12.0}, 0.0, 0.0},
        {{5.0, -1.4, -11.0}, 0.15, -0.10},
        {{4.6, -1.3, -10.0}, 0.30, -0.20},
    };
    return f;
}

namespace {

std::vector<Trajectory> discrete_map_trajectories(const DynamicsModel &dyn,
                                                  const FieldSnapshot &field,
                                                  const std::vector<Vec2> &starts,
                                                  const TrajectoryGenSpec &spec,
                                                  std::uint64_t seed) {
    const double dt = 1.0 / spec.rate_hz;
    const auto steps = static_cast<std::size_t>(std::llround(spec.duration_s * spec.rate_hz));
    const Vec2 s = field.stagnation();
    std::vector<Trajectory> out;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        std::mt19937_64 rng(mix_seed(seed, 1000 + i));
        std::normal_distribution<double> normal(0.0, 1.0);
        const Vec2 dir = (1.0 / distance(starts[i], s)) * (starts[i] - s);
        const double rho0 = distance(starts[i], s);
        std::vector<double> rho(steps + 1), v(steps + 1);
        rho[0] = rho0;
        v[0] = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double a = field.air_speed(s + rho[k] * dir);
            double next = v[k] + dt * speed_derivative(dyn, v[k], a);
            if (spec.speed_noise > 0.0) next *= 1.0 + spec.speed_noise * normal(rng);
            v[k + 1] = std::max(0.0, next);
            // Leapfrog positions: (rho[k+1] - rho[k-1]) / (2 dt) == v[k].
            rho[k + 1] = k == 0 ? rho[0] + dt * v[0] : rho[k - 1] + 2.0 * dt * v[k];
        }
        Trajectory tr;
        for (std::size_t k = 0; k <= steps; ++k)
            tr.samples.push_back({static_cast<double>(k) * dt, s + rho[k] * dir, v[k]});
        out.push_back(std::move(tr));
    }
    return out;
}

} // namespace

std::vector<Trajectory> generate_synthetic_trajectories(const DynamicsModel &dynamics,
                                                        const FieldModel &field,
                                                        const TrajectoryGenSpec &spec,
                                                        std::uint64_t seed) {
    dynamics.validate();
    if (!(spec.min_radius_m > 0.0) || !(spec.max_radius_m >= spec.min_radius_m))
        throw InvalidArgument("trajectory generator: need 0 < min radius <= max radius");
    const FieldSnapshot snap = field.snapshot(spec.orientation);
    const Vec2 s = snap.stagnation();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec2> starts;
    const double r2min = spec.min_radius_m * spec.min_radius_m;
    const double r2max = spec.max_radius_m * spec.max_radius_m;
    for (std::size_t i = 0; i < spec.count; ++i) {
        const double r = std::sqrt(r2min + unit(rng) * (r2max - r2min));
        const double ang = 2.0 * std::numbers::pi * unit(rng);
        starts.push_back(s + r * unit_from_angle(ang));
    }

    if (spec.scheme == TrajectoryScheme::discrete_map)
        return discrete_map_trajectories(dynamics, snap, starts, spec, seed);

    std::vector<ObjectState> objects;
    for (const auto &p : starts) objects.push_back({p, 0.0, dynamics});
    SimConfig cfg;
    cfg.output_rate_hz = spec.rate_hz;
    cfg.noise_sigma = spec.speed_noise;
    cfg.seed = seed;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    return simulate(objects, snap, spec.duration_s, cfg);
}

} // namespace airflow

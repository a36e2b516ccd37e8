#include "airflow/dynamics.hpp"

#include "airflow/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace airflow {

namespace odeint = boost::numeric::odeint;

void DynamicsModel::validate() const {
    if (!(xi1 < 0.0)) throw InvalidArgument("dynamics '" + label + "': xi1 must be < 0");
    if (!(xi2 > 0.0)) throw InvalidArgument("dynamics '" + label + "': xi2 must be > 0");
    if (!std::isfinite(xi3)) throw InvalidArgument("dynamics '" + label + "': xi3 must be finite");
}

void SimConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("sim: tolerances must be > 0");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("sim: noise_sigma must be >= 0");
    if (!(delay_s >= 0.0)) throw InvalidArgument("sim: delay_s must be >= 0");
    if (!(output_rate_hz > 0.0)) throw InvalidArgument("sim: output rate must be > 0");
}

Vec2 velocity_2d(const ObjectState &state, const Vec2 &s) {
    const Vec2 d = state.position - s;
    const double r = norm(d);
    if (r == 0.0) return {0.0, 0.0};
    return (std::max(state.speed, 0.0) / r) * d;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

using State = std::array<double, 3>; // x, y, speed

struct Rhs {
    const AirflowField *field;
    const DynamicsModel *model;
    Vec2 stagnation;

    void operator()(const State &x, State &dxdt, double /*t*/) const {
        const Vec2 p{x[0], x[1]};
        const Vec2 d = p - stagnation;
        const double r = norm(d);
        const double v = x[2];
        const double moving = std::max(v, 0.0);
        if (r > 0.0) {
            dxdt[0] = moving * d.x / r;
            dxdt[1] = moving * d.y / r;
        } else {
            dxdt[0] = dxdt[1] = 0.0;
        }
        double dv = speed_derivative(*model, v, field->air_speed(p));
        if (v <= 0.0 && dv < 0.0) dv = 0.0;
        dxdt[2] = dv;
    }
};

// Resting object whose model derivative at zero speed is non-positive stays
// at rest for as long as the field does not change.
bool pinned(const ObjectState &o, const AirflowField &field) {
    return o.speed <= 0.0 && speed_derivative(o.dynamics, 0.0, field.air_speed(o.position)) <= 0.0;
}

class Integrator {
public:
    Integrator(const ObjectState &obj, const SimConfig &cfg, std::uint64_t stream)
        : obj_(obj), cfg_(cfg), rng_(mix_seed(cfg.seed, stream)),
          stepper_(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(cfg.abs_tol, cfg.rel_tol)) {
        obj_.speed = std::max(obj_.speed, 0.0);
        state_ = {obj_.position.x, obj_.position.y, obj_.speed};
    }

    // Advances from t to t_end under `field`. Calls `on_grid(t)` whenever an
    // output time in `grid` (sorted, within (t, t_end]) is reached.
    template <typename OnGrid>
    void advance(const AirflowField &field, double &t, double t_end, const std::vector<double> &grid,
                 std::size_t &next_grid, OnGrid &&on_grid) {
        const Vec2 s = field.stagnation();
        sync();
        if (pinned(obj_, field)) {
            while (next_grid < grid.size() && grid[next_grid] <= t_end) on_grid(grid[next_grid++]);
            t = t_end;
            return;
        }
        stepper_.reset();
        const Rhs rhs{&field, &obj_.dynamics, s};
        double dt = std::min(first_step_, t_end - t);
        while (t < t_end) {
            double target = t_end;
            if (next_grid < grid.size()) target = std::min(target, grid[next_grid]);
            double h = std::min(dt, target - t);
            const bool hits_target = h >= target - t;
            double t_try = t;
            const auto result = stepper_.try_step(rhs, state_, t_try, h);
            if (result == odeint::fail) {
                dt = h;
                if (dt < cfg_.min_step_s) {
                    std::ostringstream msg;
                    msg << "simulate: step size collapsed at t=" << t << " s, state (" << state_[0]
                        << ", " << state_[1] << ", " << state_[2] << ")";
                    throw DomainError(msg.str());
                }
                continue;
            }
            // `h` now holds the suggested next step.
            t = hits_target ? target : t_try;
            if (!hits_target || h > dt) dt = h;
            bool modified = false;
            if (state_[2] < 0.0) {
                state_[2] = 0.0;
                modified = true;
            }
            if (cfg_.noise_sigma > 0.0) {
                state_[2] = std::max(0.0, state_[2] * (1.0 + cfg_.noise_sigma * normal_(rng_)));
                modified = true;
            }
            if (modified) stepper_.reset();
            while (next_grid < grid.size() && grid[next_grid] <= t) {
                sync();
                on_grid(grid[next_grid++]);
            }
        }
        first_step_ = std::max(dt, 1e-6);
        sync();
    }

    const ObjectState &state() {
        sync();
        return obj_;
    }

private:
    void sync() {
        obj_.position = {state_[0], state_[1]};
        obj_.speed = state_[2];
    }

    ObjectState obj_;
    State state_{};
    SimConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>> stepper_;
    double first_step_ = 1e-3;
};

std::vector<double> output_grid(double duration, double rate) {
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor(duration * rate + 1e-9));
    for (long k = 1; k <= count; ++k) grid.push_back(static_cast<double>(k) / rate);
    if (grid.empty() || grid.back() < duration - 1e-12) grid.push_back(duration);
    return grid;
}

template <typename OnGrid>
void run_object(Integrator &integ, const AirflowField &field, const AirflowField *previous,
                double duration, const SimConfig &cfg, const std::vector<double> &grid,
                OnGrid &&on_grid) {
    double t = 0.0;
    std::size_t next = 0;
    const double switch_time = previous ? std::min(cfg.delay_s, duration) : 0.0;
    if (switch_time > 0.0) integ.advance(*previous, t, switch_time, grid, next, on_grid);
    if (t < duration) integ.advance(field, t, duration, grid, next, on_grid);
}

} // namespace

std::vector<Trajectory> simulate(const std::vector<ObjectState> &objects, const AirflowField &field,
                                 double duration_s, const SimConfig &cfg,
                                 const AirflowField *previous) {
    cfg.validate();
    if (!(duration_s >= 0.0)) throw InvalidArgument("simulate: duration must be >= 0");
    std::vector<Trajectory> out(objects.size());
    const std::vector<double> grid = duration_s > 0.0 ? output_grid(duration_s, cfg.output_rate_hz)
                                                       : std::vector<double>{};
    for (std::size_t i = 0; i < objects.size(); ++i) {
        Integrator integ(objects[i], cfg, i);
        auto &samples = out[i].samples;
        samples.reserve(grid.size() + 1);
        const ObjectState &start = integ.state();
        samples.push_back({0.0, start.position, start.speed});
        run_object(integ, field, previous, duration_s, cfg, grid, [&](double t) {
            const ObjectState &s = integ.state();
            samples.push_back({t, s.position, s.speed});
        });
    }
    return out;
}

std::vector<ObjectState> simulate_end_states(const std::vector<ObjectState> &objects,
                                             const AirflowField &field, double duration_s,
                                             const SimConfig &cfg, const AirflowField *previous) {
    cfg.validate();
    if (!(duration_s >= 0.0)) throw InvalidArgument("simulate: duration must be >= 0");
    std::vector<ObjectState> out;
    out.reserve(objects.size());
    const std::vector<double> no_grid;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        Integrator integ(objects[i], cfg, i);
        run_object(integ, field, previous, duration_s, cfg, no_grid, [](double) {});
        out.push_back(integ.state());
    }
    return out;
}

std::vector<Trajectory> simulate(const std::vector<ObjectState> &objects, const FieldModel &field,
                                 const NozzleOrientation &orientation, double duration_s,
                                 const SimConfig &cfg) {
    return simulate(objects, field.snapshot(orientation), duration_s, cfg);
}

} // namespace airflow

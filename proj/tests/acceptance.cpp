// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [path/to/airflow] [path/to/data]
//
// With the CLI path given, determinism is also checked through `run-task`.

#include "airflow/cem.hpp"
#include "airflow/config.hpp"
#include "airflow/dynamics.hpp"
#include "airflow/field_fit.hpp"
#include "airflow/field_model.hpp"
#include "airflow/geometry.hpp"
#include "airflow/sindy.hpp"
#include "airflow/synthetic.hpp"
#include "airflow/task.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace airflow;
namespace fs = std::filesystem;

namespace {

// Collects failed checks with a short reason; the first few are printed.
struct Check {
    int failures = 0;
    std::vector<std::string> notes;

    void operator()(bool ok, const std::string &what) {
        if (ok) return;
        ++failures;
        if (notes.size() < 4) notes.push_back(what);
    }
};

std::string fmt(const char *f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool criterion(int id, const char *title, double limit_s, const std::function<std::string(Check &)> &body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
        detail = body(c);
    } catch (const std::exception &e) {
        c(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c(secs < limit_s, fmt("runtime %.1f s over %.0f s", secs, limit_s));
    const bool ok = c.failures == 0;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", ok ? "PASS" : "FAIL", id, title, detail.c_str(), secs);
    for (const auto &n : c.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    return ok;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

const FieldModel &world() {
    static const FieldModel m = reference_field().to_model();
    return m;
}

// 1 ----------------------------------------------------------------------

std::string geometry_exactness(Check &check) {
    const FieldGeometry g;
    double worst_rt = 0.0;
    for (int pan = 0; pan <= 89; ++pan)
        for (int tilt = 0; tilt <= 89; ++tilt) {
            const NozzleOrientation o{double(pan), double(tilt)};
            const Vec2 c = projection_point(o, g);
            const NozzleOrientation back = orientation_from_projection(c, g);
            // pan is undefined at tilt 0; compare through the projection point there
            const double e = tilt == 0 ? norm(projection_point(back, g) - c)
                                       : std::max(std::abs(back.pan_deg - o.pan_deg), std::abs(back.tilt_deg - o.tilt_deg));
            worst_rt = std::max(worst_rt, e);
        }
    check(worst_rt <= 1e-9, fmt("orientation roundtrip error %.3g", worst_rt));

    double worst_fwd = 0.0, worst_inv = 0.0;
    for (double r : {0.25, 0.5, 1.0})
        for (double ang : {0.0, 0.9, 2.5, -2.0}) {
            const Vec2 c = r * unit_from_angle(ang);
            const Vec2 s = stagnation_from_projection(c, g);
            const double oracle = r - 0.1 * std::pow(r, 2.33);
            worst_fwd = std::max(worst_fwd, std::abs(norm(s) - oracle));
            worst_fwd = std::max(worst_fwd, std::abs(std::atan2(s.y, s.x) - ang) * r);
            worst_inv = std::max(worst_inv, norm(projection_from_stagnation(s, g) - c));
        }
    check(worst_fwd <= 1e-12, fmt("forward offset error %.3g m", worst_fwd));
    check(worst_inv <= 1e-6, fmt("inverse error %.3g m", worst_inv));
    return fmt("roundtrip %.1e, forward %.1e m, inverse %.1e m", worst_rt, worst_fwd, worst_inv);
}

// 2 ----------------------------------------------------------------------

bool profile_shape_ok(const RadialProfile &p) {
    if (radial_speed(p, 0.0) != 0.0) return false;
    int turns = 0;
    double prev = 0.0, peak = 0.0;
    bool rising = true;
    for (int i = 1; i <= 5000; ++i) {
        const double v = radial_speed(p, 1e-3 * i);
        if (rising && v < prev) {
            rising = false;
            ++turns;
            peak = 1e-3 * (i - 1);
        } else if (!rising && v > prev) {
            ++turns;
        }
        prev = v;
    }
    return turns == 1 && peak > 0.0 && peak < 5.0;
}

std::string field_properties(Check &check) {
    const SyntheticField ref = reference_field();
    std::vector<AlphaTable> fitted;
    std::size_t profiles = 0, bad_shape = 0;
    for (std::size_t k = 0; k < ref.tilt_nodes.size(); ++k) {
        SyntheticFieldSpec spec;
        spec.orientation = {90.0, ref.tilt_nodes[k]};
        spec.law = ref.laws[k];
        spec.grid_center = spec.stagnation();
        const ProfileFit fit = fit_profiles(generate_synthetic_grid(spec, 1), spec.stagnation());
        for (const auto &p : fit.profiles) {
            ++profiles;
            bad_shape += !profile_shape_ok(p);
        }
        fitted.push_back(fit.profiles);
    }
    check(bad_shape == 0, fmt("%zu fitted profiles fail v(0)=0 / single peak / decay", bad_shape));
    const FieldModel model(ref.geometry, ref.tilt_nodes, fitted);

    double worst_node = 0.0;
    for (std::size_t n = 0; n < model.tilt_nodes().size(); ++n) {
        const AlphaTable t = model.table_at_tilt(model.tilt_nodes()[n]);
        for (std::size_t b = 0; b < kAlphaBins; ++b) {
            const RadialProfile &s = model.stored(n, b);
            worst_node = std::max({worst_node, rel_err(t[b].b1, s.b1), rel_err(t[b].b2, s.b2), rel_err(t[b].b3, s.b3)});
        }
    }
    check(worst_node <= 1e-12, fmt("node identity error %.3g", worst_node));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> pan(-180.0, 180.0), tilt(0.0, 45.0), xy(-1.5, 1.5);
    int against = 0;
    for (int i = 0; i < 10000; ++i) {
        const NozzleOrientation o{pan(rng), tilt(rng)};
        const Vec2 p{xy(rng), xy(rng)};
        against += dot(air_velocity(model, o, p).velocity, p - stagnation_point(o, model.geometry())) < 0.0;
    }
    check(against == 0, fmt("%d of 10000 queries flow toward s", against));

    double worst_rot = 0.0;
    for (int i = 0; i < 200; ++i) {
        const NozzleOrientation o{pan(rng), tilt(rng)};
        const double delta = pan(rng);
        const Vec2 p{xy(rng), xy(rng)};
        const NozzleOrientation r{wrap_deg(o.pan_deg + delta), o.tilt_deg};
        const Vec2 a = rotate(air_velocity(model, o, p).velocity, deg_to_rad(delta));
        const Vec2 b = air_velocity(model, r, rotate(p, deg_to_rad(delta))).velocity;
        worst_rot = std::max(worst_rot, distance(a, b));
    }
    check(worst_rot <= 1e-9, fmt("pan equivariance error %.3g", worst_rot));
    return fmt("%zu profiles ok, node identity %.1e, 10^4 flow queries, equivariance %.1e", profiles - bad_shape,
               worst_node, worst_rot);
}

// 3 ----------------------------------------------------------------------

double curve_mape(const RadialProfile &truth, const RadialProfile &fit) {
    double sum = 0.0;
    for (int i = 0; i <= 95; ++i) {
        const double r = 0.05 + 0.01 * i;
        sum += std::abs(radial_speed(fit, r) - radial_speed(truth, r)) / radial_speed(truth, r);
    }
    return sum / 96.0;
}

std::string fitting_recovery(Check &check) {
    const SyntheticField ref = reference_field();
    double worst = 0.0, worst_mape = 0.0;
    for (std::size_t k = 0; k < ref.tilt_nodes.size(); ++k) {
        SyntheticFieldSpec spec;
        spec.orientation = {90.0, ref.tilt_nodes[k]};
        spec.law = {ref.laws[k].base, 0.0, 0.0};
        spec.grid_center = spec.stagnation();
        const VelocityGrid grid = generate_synthetic_grid(spec, 1);
        check(grid.points.size() == 121, "grid is not 11x11");
        const RadialProfile &t = spec.law.base;
        for (const auto &f : fit_profiles(grid, spec.stagnation()).profiles)
            worst = std::max({worst, rel_err(f.b1, t.b1), rel_err(f.b2, t.b2), rel_err(f.b3, t.b3)});

        spec.noise = 0.05;
        double mape = 0.0;
        for (const auto &f : fit_profiles(generate_synthetic_grid(spec, 3 + k), spec.stagnation()).profiles)
            mape += curve_mape(t, f);
        worst_mape = std::max(worst_mape, mape / kAlphaBins);
    }
    check(worst <= 0.01, fmt("noiseless coefficient error %.3g", worst));
    check(worst_mape <= 0.10, fmt("5%% noise MAPE %.3g", worst_mape));
    return fmt("noiseless worst rel. error %.1e, 5%% noise worst MAPE %.2f%%", worst, 100 * worst_mape);
}

// 4 ----------------------------------------------------------------------

SnapshotData snapshots(const DynamicsModel &dyn, double noise, std::uint64_t seed) {
    std::vector<OrientedTrajectory> all;
    std::uint64_t stream = 0;
    for (const NozzleOrientation o : {NozzleOrientation{90.0, 0.0}, NozzleOrientation{90.0, 22.5}}) {
        TrajectoryGenSpec spec;
        spec.orientation = o;
        spec.count = 50;
        spec.speed_noise = noise;
        for (auto &t : generate_synthetic_trajectories(dyn, world(), spec, mix_seed(seed, stream++)))
            all.push_back({std::move(t), o});
    }
    return preprocess(all, world()).data;
}

// Scales 10% of the rows' targets by x3 to x10.
SnapshotData with_outliers(SnapshotData d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_real_distribution<double> gain(3.0, 10.0);
    for (std::size_t i = 0; i < d.size() / 10; ++i) {
        double &y = d.v_next[idx[i]];
        y = std::max(y, 0.2) * gain(rng);
    }
    return d;
}

std::string sindy_recovery(Check &check) {
    const std::vector<std::string> want{"1", "v", "a"};
    std::string detail;
    for (const DynamicsModel &m : {DynamicsModel::tracer(), DynamicsModel::cotton_wad()}) {
        struct Case {
            const char *name;
            SnapshotData data;
            double tol;
        };
        const SnapshotData clean = snapshots(m, 0.0, 1);
        const std::vector<Case> cases{{"noise-free", clean, 0.01},
                                      {"2% noise", snapshots(m, 0.02, 2), 0.10},
                                      {"10% outliers", with_outliers(clean, 3), 0.10}};
        detail += m.label + ":";
        for (const Case &c : cases) {
            const SindyResult r = ensemble_fit(c.data, {}, {});
            const double e = std::max({rel_err(r.continuous("v"), m.xi1), rel_err(r.continuous("a"), m.xi2),
                                       rel_err(r.continuous("1"), m.xi3)});
            check(r.active_terms == want, m.label + " " + c.name + ": wrong active set");
            check(e <= c.tol, fmt("%s %s: coefficient error %.3g", m.label.c_str(), c.name, e));
            detail += fmt(" %s %.2f%%", c.name, 100 * e);
        }
        detail += "; ";
    }
    detail.resize(detail.size() - 2);
    return detail;
}

// 5 ----------------------------------------------------------------------

ObjectState euler_oracle(ObjectState o, const AirflowField &f, double duration, double dt) {
    const Vec2 s = f.stagnation();
    const auto steps = static_cast<long>(std::llround(duration / dt));
    for (long k = 0; k < steps; ++k) {
        const Vec2 d = o.position - s;
        const double r = norm(d);
        double dv = speed_derivative(o.dynamics, o.speed, f.air_speed(o.position));
        if (o.speed <= 0.0 && dv < 0.0) dv = 0.0;
        if (r > 0.0) o.position += (dt * std::max(o.speed, 0.0) / r) * d;
        o.speed = std::max(0.0, o.speed + dt * dv);
    }
    return o;
}

std::string dynamics_fixed_points(Check &check) {
    const SimConfig cfg;
    const DynamicsModel tracer = DynamicsModel::tracer();
    const auto run = simulate({{{0.3, 0.2}, 0.0, tracer}}, UniformField(3.0), 8.0, cfg);
    const double v_end = run[0].back().speed;
    check(std::abs(v_end - 1.59774) <= 1e-3, fmt("terminal speed %.6f", v_end));

    int moved = 0;
    for (const DynamicsModel &m : {tracer, DynamicsModel::cotton_wad()})
        for (double frac : {0.5, 0.9, 0.999}) {
            const ObjectState start{{0.4, -0.1}, 0.0, m};
            const auto tr = simulate({start}, UniformField(frac * m.motion_threshold()), 3.0, cfg);
            for (const auto &smp : tr[0].samples) moved += smp.position != start.position || smp.speed != 0.0;
        }
    check(moved == 0, fmt("%d samples moved below threshold", moved));

    double worst = 0.0;
    for (const NozzleOrientation o : {NozzleOrientation{90.0, 0.0}, NozzleOrientation{-30.0, 22.5},
                                      NozzleOrientation{150.0, 40.0}}) {
        const FieldSnapshot field = world().snapshot(o);
        for (double r : {0.2, 0.35, 0.55}) {
            const ObjectState start{field.stagnation() + r * unit_from_angle(0.7), 0.0, tracer};
            const auto tr = simulate({start}, field, 2.0, cfg);
            worst = std::max(worst, distance(tr[0].back().position, euler_oracle(start, field, 2.0, 1e-4).position));
        }
    }
    check(worst <= 1e-3, fmt("Euler oracle gap %.3g m", worst));
    return fmt("terminal %.5f m/s, sub-threshold still, Euler gap %.1e m", v_end, worst);
}

// 6 ----------------------------------------------------------------------

std::string cem_optimizer(Check &check) {
    const auto quad = [](const Eigen::VectorXd &x) { return (x - Eigen::Vector2d(0.3, -0.2)).squaredNorm(); };
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const CemSettings st{100, 10, 50, 0.5e-4, 0.0, seed};
        const CemResult r = cem_minimize(quad, Eigen::Vector2d(0.26, -0.17), 31.3e-4 * Eigen::Matrix2d::Identity(), st);
        hits += (r.mean - Eigen::Vector2d(0.3, -0.2)).norm() < 0.01;
    }
    check(hits >= 95, fmt("quadratic: %d/100 within 1 cm", hits));

    // Interior optima within mu0 +/- 3 sd; the sampler runs to convergence with
    // the larger published population (100 samples, 10 elite).
    double worst_ratio = 0.0, worst_default = 0.0;
    for (const auto &[obj, ref] : {std::pair{Vec2{-0.2, 0.1}, Vec2{-0.32, -0.06}}, {Vec2{0.3, 0.4}, Vec2{0.24, 0.32}}}) {
        const PlanningProblem p{&world(), {{obj, 0.0, DynamicsModel::tracer()}}, {ref}, {}};
        const SamplingSpace line = SamplingSpace::line_away(obj, ref);
        CemConfig cfg;
        cfg.n = 100;
        cfg.n_elite = 10;
        cfg.i_max = 50;
        cfg.sigma_star_m2 = 1e-8;
        const double sd = std::sqrt(cfg.sigma0_line_m2);
        double grid_min = INFINITY;
        for (double d = cfg.mu0_line_m - 3 * sd; d <= cfg.mu0_line_m + 3 * sd; d += 0.01)
            grid_min = std::min(grid_min, stagnation_cost(line.to_point(Eigen::VectorXd::Constant(1, d)), p, cfg));
        check(grid_min < cfg.penalty, "grid minimum is penalized");
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            cfg.seed = seed;
            worst_ratio = std::max(worst_ratio, optimize(line, p, cfg).best_cost / grid_min);
            CemConfig quick;
            quick.seed = seed;
            worst_default = std::max(worst_default, optimize(line, p, quick).best_cost / grid_min);
        }
    }
    check(worst_ratio <= 1.05, fmt("best / grid minimum %.4f", worst_ratio));

    // candidates inside delta_min of any object cost exactly the penalty
    const PlanningProblem many{&world(),
                               {{{0.1, 0.2}, 0.0, DynamicsModel::tracer()}, {{-0.3, 0.4}, 0.0, DynamicsModel::cotton_wad()}},
                               {{0.5, 0.5}, {-0.5, 0.5}},
                               {}};
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(-M_PI, M_PI), rad(0.0, 0.0999);
    int wrong = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec2 s = many.objects[i % 2].position + rad(rng) * unit_from_angle(ang(rng));
        wrong += stagnation_cost(s, many, CemConfig{}) != 1e3;
    }
    check(wrong == 0, fmt("%d candidates near an object not penalized", wrong));
    return fmt("quadratic %d/100, best/grid %.4f (line defaults, 5 iterations: %.2f), penalty 1000/1000", hits,
               worst_ratio, worst_default);
}

// 7 ----------------------------------------------------------------------

struct LoadedTask {
    std::string name;
    TaskFile file;
};

std::string closed_loop(Check &check, const fs::path &data) {
    const RunConfig cfg = load_config(data / "config.yaml");
    const FieldModel field = load_world(cfg);
    std::vector<LoadedTask> tasks;
    for (const char *n : {"line", "square", "letter_a", "aggregation", "sorting"})
        tasks.push_back({n, load_task(data / "tasks" / (std::string(n) + ".yaml"), cfg)});

    SimConfig clean = cfg.sim;
    clean.noise_sigma = 0.0;
    std::string detail;
    for (const auto &[name, t] : tasks) {
        const CemConfig &cem = cfg.cem_for(t.spec.kind);
        const TaskReport r = run_task(t.spec, t.objects, field, cem, clean, cfg.seed);
        check(r.completed, name + ": noise-free run failed: " + r.failure);
        if (!r.completed) continue;

        if (name == "line") {
            check(r.error.mean <= 0.05, fmt("line mean error %.3f m", r.error.mean));
            std::size_t reached = 0;
            for (std::size_t m = 0; m < r.measurements.size(); ++m) {
                const Measurement &meas = r.measurements[m];
                if (!meas.advanced && m + 1 != r.measurements.size()) continue;
                const std::size_t idx = meas.advanced ? meas.ref_index - 1 : meas.ref_index;
                reached += distance(meas.objects[0].position, r.references[idx]) < t.spec.switch_threshold_m;
            }
            check(reached == r.references.size(), fmt("line: %zu of %zu waypoints within 4 cm", reached, r.references.size()));
        }
        if (name == "aggregation") {
            std::vector<Vec2> start;
            for (const auto &o : t.objects) start.push_back(o.position);
            check(max_pairwise_distance(start) <= 1.2, "aggregation start spread above 1.2 m");
            const Zone &z = t.spec.zones[0];
            for (const auto &o : r.measurements.back().objects)
                check(distance(o.position, z.center) <= 0.5 * z.diameter_m, "aggregation: object outside the zone");
        }
        if (name == "sorting") {
            check(distance(t.spec.zones[0].center, t.spec.zones[1].center) == 1.25, "sorting zones not 1.25 m apart");
            const auto &end = r.measurements.back().objects;
            for (std::size_t i = 0; i < end.size(); ++i) {
                const Zone &z = t.spec.zones[t.spec.group_of[i]];
                check(distance(end[i].position, z.center) <= 0.5 * z.diameter_m, "sorting: object outside its zone");
            }
        }

        // 10% plant noise, 20 seeds derived from the master seed
        TaskSpec noisy = t.spec;
        noisy.max_steps = 3 * r.steps_used;
        SimConfig plant = cfg.sim;
        plant.noise_sigma = 0.10;
        int ok = 0;
        for (std::uint64_t k = 0; k < 20; ++k)
            ok += run_task(noisy, t.objects, field, cem, plant, mix_seed(cfg.seed, 1000 + k)).completed;
        check(ok >= 18, fmt("%s: %d/20 noisy runs within %d steps", name.c_str(), ok, noisy.max_steps));
        detail += fmt("%s %d steps, noisy %d/20; ", name.c_str(), r.steps_used, ok);
    }
    if (!detail.empty()) detail.resize(detail.size() - 2);
    return detail;
}

// 8 ----------------------------------------------------------------------

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::string determinism(Check &check, const fs::path &data, const std::string &cli) {
    const RunConfig cfg = load_config(data / "config.yaml");
    const FieldModel field = load_world(cfg);
    SimConfig plant = cfg.sim;
    plant.noise_sigma = 0.10;
    int compared = 0;
    for (const char *n : {"line", "octagon", "sorting"}) {
        const TaskFile t = load_task(data / "tasks" / (std::string(n) + ".yaml"), cfg);
        std::string logs[2];
        for (auto &log : logs) {
            std::ostringstream os;
            write_step_log(os, run_task(t.spec, t.objects, field, cfg.cem_for(t.spec.kind), plant, 77));
            log = os.str();
        }
        check(!logs[0].empty() && logs[0] == logs[1], std::string(n) + ": step logs differ");
        ++compared;
    }
    if (cli.empty()) return fmt("%d library runs repeated", compared);

    const fs::path out = fs::temp_directory_path() / "airflow_acceptance";
    std::string cli_logs[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path dir = out / std::to_string(i);
        fs::remove_all(dir);
        const std::string cmd = "\"" + cli + "\" run-task --config \"" + (data / "config.yaml").string() +
                                "\" --task \"" + (data / "tasks" / "octagon.yaml").string() + "\" --seed 4242 --out \"" +
                                dir.string() + "\" > /dev/null";
        check(std::system(cmd.c_str()) == 0, "run-task exited nonzero");
        cli_logs[i] = slurp(dir / "step_log.csv");
    }
    check(!cli_logs[0].empty() && cli_logs[0] == cli_logs[1], "run-task step logs differ");
    return fmt("%d library runs and run-task repeated, byte-identical", compared);
}

} // namespace

int main(int argc, char **argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const fs::path data = argc > 2 ? fs::path(argv[2]) : fs::path(AIRFLOW_DATA_DIR);

    bool all = true;
    all &= criterion(1, "geometry exactness", 1.0, geometry_exactness);
    all &= criterion(2, "field model properties", 10.0, field_properties);
    all &= criterion(3, "field fitting recovery", 30.0, fitting_recovery);
    all &= criterion(4, "SINDy recovery", 120.0, sindy_recovery);
    all &= criterion(5, "dynamics fixed points", 30.0, dynamics_fixed_points);
    all &= criterion(6, "CEM optimizer", 60.0, cem_optimizer);
    all &= criterion(7, "closed-loop tasks", 600.0, [&](Check &c) { return closed_loop(c, data); });
    all &= criterion(8, "determinism", 600.0, [&](Check &c) { return determinism(c, data, cli); });
    return all ? 0 : 1;
}

// Command-line front end: synthetic data, field fitting, identification,
// open-loop simulation and closed-loop task runs.
#include "airflow/config.hpp"
#include "airflow/errors.hpp"
#include "airflow/field_fit.hpp"
#include "airflow/geometry.hpp"
#include "airflow/io.hpp"
#include "airflow/sindy.hpp"
#include "airflow/synthetic.hpp"
#include "airflow/task.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace airflow;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
};

RunConfig load(const Common &c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

fs::path out_dir(const Common &c) {
    const fs::path p = c.out;
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw InputError(p.string(), 0, "cannot create output directory: " + ec.message());
    return p;
}

std::ofstream open_out(const fs::path &p) {
    std::ofstream f(p);
    if (!f) throw InputError(p.string(), 0, "cannot write file");
    return f;
}

std::string tag(double deg) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", deg);
    return buf;
}

const ProfileLaw &reference_law(double tilt_deg) {
    static const SyntheticField w = reference_field();
    for (std::size_t i = 0; i < w.tilt_nodes.size(); ++i)
        if (w.tilt_nodes[i] == tilt_deg) return w.laws[i];
    throw InvalidArgument("no reference profile law at tilt " + tag(tilt_deg) + " deg (nodes: 0, 22.5, 45)");
}

// synth-grid -------------------------------------------------------------

struct SynthGridArgs {
    std::vector<double> tilts;
    double pan = 90.0;
    double noise = 0.0;
    int resolution = 11;
    double extent = 2.0;
};

void synth_grid(const Common &c, const SynthGridArgs &a) {
    const RunConfig cfg = load(c);
    const fs::path dir = out_dir(c);
    const auto tilts = a.tilts.empty() ? cfg.tilt_nodes_deg : a.tilts;
    for (std::size_t i = 0; i < tilts.size(); ++i) {
        SyntheticFieldSpec spec;
        spec.geometry = cfg.geometry;
        spec.orientation = {a.pan, tilts[i]};
        spec.law = reference_law(tilts[i]);
        spec.grid_center = spec.stagnation();
        spec.grid_extent_m = a.extent;
        spec.resolution = a.resolution;
        spec.noise = a.noise;
        const VelocityGrid g = generate_synthetic_grid(spec, mix_seed(cfg.seed, i));
        const fs::path p = dir / ("grid_tilt" + tag(tilts[i]) + ".csv");
        save_grid(p, g);
        std::cout << p.string() << '\n';
    }
}

// synth-trajectories -----------------------------------------------------

struct SynthTrajArgs {
    std::string object_class = "tracer";
    std::vector<double> tilts{0.0, 22.5};
    double pan = 90.0;
    std::size_t count = 50;
    double noise = 0.0;
};

void synth_trajectories(const Common &c, const SynthTrajArgs &a) {
    const RunConfig cfg = load(c);
    const FieldModel world = load_world(cfg);
    const DynamicsModel &dyn = cfg.object_class(a.object_class);
    const fs::path dir = out_dir(c);
    std::vector<TrajectoryFileRef> refs;
    for (std::size_t i = 0; i < a.tilts.size(); ++i) {
        TrajectoryGenSpec spec;
        spec.orientation = {a.pan, a.tilts[i]};
        spec.count = a.count;
        spec.speed_noise = a.noise;
        const auto trajs = generate_synthetic_trajectories(dyn, world, spec, mix_seed(cfg.seed, i));
        for (std::size_t k = 0; k < trajs.size(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_tilt%s_%03zu.csv", a.object_class.c_str(), tag(a.tilts[i]).c_str(), k);
            save_trajectories(dir / name, {trajs[k]});
            refs.push_back({name, spec.orientation});
        }
    }
    auto f = open_out(dir / "trajectories.csv");
    write_sidecar(f, refs);
    std::cout << (dir / "trajectories.csv").string() << '\n';
}

// fit-field --------------------------------------------------------------

void fit_field(const Common &c, const std::vector<std::string> &grids, const std::vector<std::string> &cfd) {
    const RunConfig cfg = load(c);
    std::map<double, VelocityGrid> by_tilt;
    for (const auto &p : grids) {
        VelocityGrid g = load_grid(p);
        if (!by_tilt.emplace(g.tilt_deg, g).second)
            throw InputError(p, 1, "second grid for tilt " + tag(g.tilt_deg) + " deg");
    }
    for (const auto &p : cfd) {
        const VelocityGrid g = load_grid(p);
        const auto it = by_tilt.find(g.tilt_deg);
        if (it == by_tilt.end()) throw InputError(p, 1, "no measured grid at tilt " + tag(g.tilt_deg) + " deg");
        const Vec2 s = stagnation_point(g.orientation(), cfg.geometry);
        it->second = fuse_grids(it->second, g, s, cfg.fusion_scale_m);
    }

    const fs::path dir = out_dir(c);
    auto report = open_out(dir / "fit_report.txt");
    std::vector<double> nodes;
    std::vector<AlphaTable> tables;
    for (const auto &[tilt, g] : by_tilt) {
        const Vec2 s = stagnation_point(g.orientation(), cfg.geometry);
        const ProfileFit fit = fit_profiles(g, s);
        double rms_sum = 0.0, rms_max = 0.0, widest = 0.0;
        int unconverged = 0;
        for (const auto &d : fit.diagnostics) {
            rms_sum += d.rms_residual;
            rms_max = std::max(rms_max, d.rms_residual);
            widest = std::max(widest, d.pool_halfwidth_deg);
            unconverged += !d.converged;
        }
        report << "tilt_deg: " << tag(tilt) << "\n  source: " << to_string(g.source) << "\n  points: " << g.points.size()
               << "\n  mean_rms_residual_mps: " << rms_sum / kAlphaBins << "\n  max_rms_residual_mps: " << rms_max
               << "\n  widest_pool_halfwidth_deg: " << widest << "\n  unconverged_bins: " << unconverged << '\n';
        nodes.push_back(tilt);
        tables.push_back(fit.profiles);
    }
    const FieldModel model(cfg.geometry, nodes, tables);
    save_field_model(dir / "field_model.csv", model);
    std::cout << (dir / "field_model.csv").string() << '\n';
}

// identify ---------------------------------------------------------------

void identify(const Common &c, const std::string &trajectories, const std::string &label) {
    RunConfig cfg = load(c);
    const FieldModel world = load_world(cfg);
    const auto set = load_trajectory_set(trajectories);
    const PreprocessResult pre = preprocess(set, world);
    cfg.sindy.seed = cfg.seed;
    SindyResult r = ensemble_fit(pre.data, cfg.library, cfg.sindy);
    r.warnings.insert(r.warnings.begin(), pre.warnings.begin(), pre.warnings.end());
    const fs::path dir = out_dir(c);
    auto f = open_out(dir / "sindy_report.txt");
    f << "object_class: " << label << '\n' << "trajectories: " << set.size() << '\n';
    write_sindy_report(f, r);
    std::cout << (dir / "sindy_report.txt").string() << '\n';
}

// simulate ---------------------------------------------------------------

struct SimulateArgs {
    double pan = 90.0, tilt = 0.0, duration = 2.0;
    std::vector<std::string> objects;
    std::string svg;
};

ObjectState parse_object(const std::string &spec, const RunConfig &cfg) {
    // class:x,y
    const auto colon = spec.find(':'), comma = spec.find(',', colon == std::string::npos ? 0 : colon);
    if (colon == std::string::npos || comma == std::string::npos)
        throw InvalidArgument("--object expects class:x,y, got '" + spec + "'");
    try {
        return {{std::stod(spec.substr(colon + 1, comma - colon - 1)), std::stod(spec.substr(comma + 1))},
                0.0,
                cfg.object_class(spec.substr(0, colon))};
    } catch (const std::logic_error &e) {
        if (dynamic_cast<const InvalidArgument *>(&e)) throw;
        throw InvalidArgument("--object expects class:x,y, got '" + spec + "'");
    }
}

void simulate_cmd(const Common &c, const SimulateArgs &a) {
    const RunConfig cfg = load(c);
    const FieldModel world = load_world(cfg);
    std::vector<ObjectState> objs;
    for (const auto &s : a.objects) objs.push_back(parse_object(s, cfg));
    if (objs.empty()) throw InvalidArgument("simulate: give at least one --object");
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    const NozzleOrientation o{a.pan, a.tilt};
    const auto trajs = simulate(objs, world, o, a.duration, sim);
    const fs::path dir = out_dir(c);
    save_trajectories(dir / "trajectories.csv", trajs);
    if (!a.svg.empty()) {
        auto f = open_out(dir / a.svg);
        write_trajectory_svg(f, trajs, stagnation_point(o, world.geometry()));
    }
    std::cout << (dir / "trajectories.csv").string() << '\n';
}

// run-task ---------------------------------------------------------------

void run_task_cmd(const Common &c, const std::string &task_path, const std::string &svg) {
    const RunConfig cfg = load(c);
    const FieldModel world = load_world(cfg);
    const TaskFile task = load_task(task_path, cfg);
    const TaskReport r = run_task(task.spec, task.objects, world, cfg.cem_for(task.spec.kind), cfg.sim, cfg.seed);
    const fs::path dir = out_dir(c);
    {
        auto f = open_out(dir / "step_log.csv");
        write_step_log(f, r);
    }
    {
        auto f = open_out(dir / "summary.txt");
        f << "name: " << task.spec.name << '\n' << "seed: " << cfg.seed << '\n';
        write_summary(f, r);
    }
    if (!svg.empty()) {
        auto f = open_out(dir / svg);
        write_svg(f, task.spec, r);
    }
    std::cout << (dir / "summary.txt").string() << '\n';
}

// Exit codes: 2 usage, 3 input file, 4 invalid value or domain, 1 anything else.
int fail(int status, const char *code, const std::string &message, const std::string &file = {},
         std::size_t line = 0) {
    nlohmann::json j{{"code", code}, {"message", message}};
    if (!file.empty()) {
        j["file"] = file;
        j["line"] = line;
    }
    std::cerr << "error: " << j.dump() << '\n';
    return status;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Jet-induced airflow field manipulation: field fitting, identification and control"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", common.config, "YAML run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "master seed (overrides the config)");
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
    };

    SynthGridArgs grid_args;
    auto *sg = app.add_subcommand("synth-grid", "synthetic velocity grids from the reference world");
    add_common(sg);
    sg->add_option("--tilt", grid_args.tilts, "tilt node(s) in degrees (default: configured nodes)");
    sg->add_option("--pan", grid_args.pan, "pan in degrees")->capture_default_str();
    sg->add_option("--noise", grid_args.noise, "multiplicative noise std")->capture_default_str();
    sg->add_option("--resolution", grid_args.resolution, "points per side")->capture_default_str();
    sg->add_option("--extent", grid_args.extent, "grid side length in m")->capture_default_str();

    SynthTrajArgs traj_args;
    auto *st = app.add_subcommand("synth-trajectories", "synthetic object trajectories, one file each, plus a sidecar");
    add_common(st);
    st->add_option("--class", traj_args.object_class, "object class")->capture_default_str();
    st->add_option("--tilt", traj_args.tilts, "tilt angle(s) in degrees")->capture_default_str();
    st->add_option("--pan", traj_args.pan, "pan in degrees")->capture_default_str();
    st->add_option("--count", traj_args.count, "trajectories per tilt")->capture_default_str();
    st->add_option("--noise", traj_args.noise, "multiplicative speed noise std")->capture_default_str();

    std::vector<std::string> grids, cfd;
    auto *ff = app.add_subcommand("fit-field", "fit the coefficient table from velocity grids");
    add_common(ff);
    ff->add_option("--grid", grids, "velocity grid CSV (one per tilt)")->required()->check(CLI::ExistingFile);
    ff->add_option("--cfd", cfd, "simulated grid CSV fused with the measured grid of the same tilt")
        ->check(CLI::ExistingFile);

    std::string trajectories, label = "object";
    auto *id = app.add_subcommand("identify", "identify the speed model from trajectories");
    add_common(id);
    id->add_option("--trajectories", trajectories, "trajectory sidecar CSV")->required()->check(CLI::ExistingFile);
    id->add_option("--label", label, "object class label for the report")->capture_default_str();

    SimulateArgs sim_args;
    auto *sm = app.add_subcommand("simulate", "simulate objects under one nozzle orientation");
    add_common(sm);
    sm->add_option("--pan", sim_args.pan, "pan in degrees")->capture_default_str();
    sm->add_option("--tilt", sim_args.tilt, "tilt in degrees")->capture_default_str();
    sm->add_option("--duration", sim_args.duration, "seconds")->capture_default_str();
    sm->add_option("--object", sim_args.objects, "class:x,y (repeatable)")->required();
    sm->add_option("--svg", sim_args.svg, "SVG file name inside --out");

    std::string task, task_svg;
    auto *rt = app.add_subcommand("run-task", "closed-loop path following, aggregation or sorting");
    add_common(rt);
    rt->add_option("--task", task, "task YAML")->required()->check(CLI::ExistingFile);
    rt->add_option("--svg", task_svg, "SVG file name inside --out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail(2, "usage_error", e.what());
    }

    try {
        if (*sg) synth_grid(common, grid_args);
        else if (*st) synth_trajectories(common, traj_args);
        else if (*ff) fit_field(common, grids, cfd);
        else if (*id) identify(common, trajectories, label);
        else if (*sm) simulate_cmd(common, sim_args);
        else if (*rt) run_task_cmd(common, task, task_svg);
    } catch (const InputError &e) {
        const std::string what = e.what();
        const std::string prefix = e.file() + ":" + std::to_string(e.line()) + ": ";
        return fail(3, "input_error", what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what, e.file(), e.line());
    } catch (const InvalidArgument &e) {
        return fail(4, "invalid_argument", e.what());
    } catch (const DomainError &e) {
        return fail(4, "domain_error", e.what());
    } catch (const std::exception &e) {
        return fail(1, "error", e.what());
    }
    return 0;
}

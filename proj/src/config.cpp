#include "airflow/config.hpp"

#include "airflow/errors.hpp"
#include "airflow/io.hpp"
#include "airflow/synthetic.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace airflow {

namespace {

constexpr double kCm = 1e-2;
constexpr double kCm2 = 1e-4;

// Typed access to a YAML document with file/line error reporting.
class Doc {
public:
    explicit Doc(std::string name) : name_(std::move(name)) {}

    YAML::Node parse(const std::string &text) const {
        try {
            YAML::Node root = YAML::Load(text);
            if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
            if (!root.IsMap()) fail(root, "top level must be a mapping");
            return root;
        } catch (const YAML::ParserException &e) {
            throw InputError(name_, static_cast<std::size_t>(e.mark.line + 1), e.msg);
        }
    }

    [[noreturn]] void fail(const YAML::Node &n, const std::string &what) const {
        const auto line = n.Mark().line >= 0 ? static_cast<std::size_t>(n.Mark().line + 1) : 0;
        throw InputError(name_, line, what);
    }

    void keys(const YAML::Node &map, std::initializer_list<const char *> allowed, const std::string &where) const {
        if (!map.IsMap()) fail(map, where + ": expected a mapping");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto &kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!ok.count(key)) fail(kv.first, where + ": unknown key '" + key + "'");
        }
    }

    template <class T> T as(const YAML::Node &n, const std::string &what) const {
        try {
            if (!n.IsScalar()) fail(n, what + ": expected a scalar");
            return n.as<T>();
        } catch (const YAML::BadConversion &) {
            fail(n, what + ": wrong value type");
        }
    }

    template <class T> void get(const YAML::Node &map, const char *key, T &out) const {
        if (const YAML::Node n = map[key]) out = as<T>(n, key);
    }

    void get_scaled(const YAML::Node &map, const char *key, double scale, double &out) const {
        if (const YAML::Node n = map[key]) out = as<double>(n, key) * scale;
    }

    Vec2 point(const YAML::Node &n, const std::string &what) const {
        if (!n.IsSequence() || n.size() != 2) fail(n, what + ": expected [x, y]");
        return {as<double>(n[0], what), as<double>(n[1], what)};
    }

    std::vector<double> numbers(const YAML::Node &n, const std::string &what) const {
        if (!n.IsSequence()) fail(n, what + ": expected a list");
        std::vector<double> out;
        for (const auto &v : n) out.push_back(as<double>(v, what));
        return out;
    }

    const std::string &name() const { return name_; }

private:
    std::string name_;
};

std::string read_file(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) throw InputError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void read_cem_block(const Doc &d, const YAML::Node &n, CemConfig &c, bool plane) {
    d.keys(n, {"mu0_cm", "sigma0_cm2", "n", "n_elite", "i_max", "sigma_star_cm2"}, plane ? "cem.plane" : "cem.line");
    d.get(n, "n", c.n);
    d.get(n, "n_elite", c.n_elite);
    d.get(n, "i_max", c.i_max);
    d.get_scaled(n, "sigma_star_cm2", kCm2, c.sigma_star_m2);
    if (!plane) {
        d.get_scaled(n, "mu0_cm", kCm, c.mu0_line_m);
        d.get_scaled(n, "sigma0_cm2", kCm2, c.sigma0_line_m2);
        return;
    }
    if (const YAML::Node m = n["mu0_cm"]) c.mu0_plane = kCm * d.point(m, "cem.plane.mu0_cm");
    if (const YAML::Node s = n["sigma0_cm2"]) {
        const Vec2 diag = d.point(s, "cem.plane.sigma0_cm2");
        c.sigma0_plane_m2 = Eigen::Vector2d(diag.x * kCm2, diag.y * kCm2).asDiagonal();
    }
}

} // namespace

void RunConfig::validate() const {
    geometry.validate();
    if (tilt_nodes_deg.empty()) throw InvalidArgument("field: no tilt nodes");
    for (std::size_t i = 0; i < tilt_nodes_deg.size(); ++i) {
        if (!(tilt_nodes_deg[i] >= 0.0 && tilt_nodes_deg[i] < 90.0))
            throw InvalidArgument("field: tilt nodes must lie in [0, 90)");
        if (i > 0 && !(tilt_nodes_deg[i] > tilt_nodes_deg[i - 1]))
            throw InvalidArgument("field: tilt nodes must be strictly ascending");
    }
    if (!(fusion_scale_m > 0.0)) throw InvalidArgument("field: fusion scale must be positive");
    for (const auto &[name, d] : dynamics) d.validate();
    sindy.validate();
    if (library.max_degree < 1) throw InvalidArgument("sindy: max_degree must be >= 1");
    cem_line.validate();
    cem_plane.validate();
    sim.validate();
    if (!(workspace.lower.x < workspace.upper.x && workspace.lower.y < workspace.upper.y))
        throw InvalidArgument("workspace: lower must be below upper");
}

const DynamicsModel &RunConfig::object_class(const std::string &name) const {
    const auto it = dynamics.find(name);
    if (it == dynamics.end()) throw InvalidArgument("unknown object class '" + name + "'");
    return it->second;
}

RunConfig parse_config(const std::string &yaml, const std::string &name, const std::filesystem::path &base_dir) {
    const Doc d(name);
    const YAML::Node root = d.parse(yaml);
    d.keys(root, {"seed", "geometry", "field", "dynamics", "sindy", "cem", "sim", "workspace"}, "config");
    RunConfig c;
    d.get(root, "seed", c.seed);

    if (const YAML::Node g = root["geometry"]) {
        d.keys(g, {"h_m", "a1", "a2"}, "geometry");
        d.get(g, "h_m", c.geometry.h);
        d.get(g, "a1", c.geometry.a1);
        d.get(g, "a2", c.geometry.a2);
    }
    if (const YAML::Node f = root["field"]) {
        d.keys(f, {"tilt_nodes_deg", "fusion_scale_m", "model"}, "field");
        if (const YAML::Node t = f["tilt_nodes_deg"]) c.tilt_nodes_deg = d.numbers(t, "field.tilt_nodes_deg");
        d.get(f, "fusion_scale_m", c.fusion_scale_m);
        if (const YAML::Node m = f["model"]) {
            const std::filesystem::path p = d.as<std::string>(m, "field.model");
            c.field_model = p.is_absolute() ? p : base_dir / p;
        }
    }
    if (const YAML::Node dy = root["dynamics"]) {
        if (!dy.IsMap()) d.fail(dy, "dynamics: expected a mapping of object classes");
        for (const auto &kv : dy) {
            const auto cls = kv.first.as<std::string>();
            d.keys(kv.second, {"xi1", "xi2", "xi3"}, "dynamics." + cls);
            DynamicsModel m = c.dynamics.count(cls) ? c.dynamics[cls] : DynamicsModel{};
            m.label = cls;
            d.get(kv.second, "xi1", m.xi1);
            d.get(kv.second, "xi2", m.xi2);
            d.get(kv.second, "xi3", m.xi3);
            c.dynamics[cls] = m;
        }
    }
    if (const YAML::Node s = root["sindy"]) {
        d.keys(s,
               {"lambda", "n_bootstraps", "bootstrap_fraction", "bisquare_c", "inclusion_threshold", "max_irls_iter",
                "irls_weight_tol", "threshold_mode", "max_degree", "include_constant"},
               "sindy");
        d.get(s, "lambda", c.sindy.lambda);
        d.get(s, "n_bootstraps", c.sindy.n_bootstraps);
        d.get(s, "bootstrap_fraction", c.sindy.bootstrap_fraction);
        d.get(s, "bisquare_c", c.sindy.bisquare_c);
        d.get(s, "inclusion_threshold", c.sindy.inclusion_threshold);
        d.get(s, "max_irls_iter", c.sindy.max_irls_iter);
        d.get(s, "irls_weight_tol", c.sindy.irls_weight_tol);
        d.get(s, "max_degree", c.library.max_degree);
        d.get(s, "include_constant", c.library.include_constant);
        if (const YAML::Node m = s["threshold_mode"]) {
            const auto mode = d.as<std::string>(m, "sindy.threshold_mode");
            if (mode == "normalized")
                c.sindy.threshold_mode = ThresholdMode::normalized;
            else if (mode == "raw")
                c.sindy.threshold_mode = ThresholdMode::raw;
            else
                d.fail(m, "sindy.threshold_mode: expected normalized or raw");
        }
    }
    if (const YAML::Node cem = root["cem"]) {
        d.keys(cem, {"delta_min_cm", "penalty", "delta_t_s", "variance_floor_cm2", "line", "plane"}, "cem");
        for (CemConfig *k : {&c.cem_line, &c.cem_plane}) {
            d.get_scaled(cem, "delta_min_cm", kCm, k->delta_min_m);
            d.get(cem, "penalty", k->penalty);
            d.get(cem, "delta_t_s", k->delta_t_s);
            d.get_scaled(cem, "variance_floor_cm2", kCm2, k->variance_floor_m2);
        }
        if (const YAML::Node l = cem["line"]) read_cem_block(d, l, c.cem_line, false);
        if (const YAML::Node p = cem["plane"]) read_cem_block(d, p, c.cem_plane, true);
    }
    // sorting places its plane Gaussian mu0_line behind an object
    c.cem_plane.mu0_line_m = c.cem_line.mu0_line_m;
    if (const YAML::Node s = root["sim"]) {
        d.keys(s, {"rel_tol", "abs_tol", "noise_sigma", "delay_s", "output_rate_hz"}, "sim");
        d.get(s, "rel_tol", c.sim.rel_tol);
        d.get(s, "abs_tol", c.sim.abs_tol);
        d.get(s, "noise_sigma", c.sim.noise_sigma);
        d.get(s, "delay_s", c.sim.delay_s);
        d.get(s, "output_rate_hz", c.sim.output_rate_hz);
    }
    if (const YAML::Node w = root["workspace"]) {
        d.keys(w, {"lower_m", "upper_m"}, "workspace");
        if (const YAML::Node l = w["lower_m"]) c.workspace.lower = d.point(l, "workspace.lower_m");
        if (const YAML::Node u = w["upper_m"]) c.workspace.upper = d.point(u, "workspace.upper_m");
    }

    try {
        c.validate();
    } catch (const InvalidArgument &e) {
        throw InputError(name, 0, e.what());
    }
    if (c.field_model && !std::filesystem::exists(*c.field_model))
        throw InputError(name, 0, "field model '" + c.field_model->string() + "' does not exist");
    return c;
}

RunConfig load_config(const std::filesystem::path &path) {
    return parse_config(read_file(path), path.string(), path.parent_path());
}

FieldModel load_world(const RunConfig &cfg) {
    if (cfg.field_model) return load_field_model(*cfg.field_model);
    SyntheticField w = reference_field();
    w.geometry = cfg.geometry;
    return w.to_model();
}

TaskFile parse_task(const std::string &yaml, const std::string &name, const RunConfig &cfg) {
    const Doc d(name);
    const YAML::Node root = d.parse(yaml);
    d.keys(root,
           {"kind", "name", "path_m", "waypoint_spacing_m", "switch_threshold_m", "max_steps", "zones", "objects"},
           "task");
    TaskFile t;
    TaskSpec &s = t.spec;
    const YAML::Node kind = root["kind"];
    if (!kind) d.fail(root, "task: missing 'kind'");
    try {
        s.kind = task_kind_from_string(d.as<std::string>(kind, "kind"));
    } catch (const InvalidArgument &e) {
        d.fail(kind, e.what());
    }
    d.get(root, "name", s.name);
    if (const YAML::Node p = root["path_m"]) {
        if (!p.IsSequence()) d.fail(p, "path_m: expected a list of [x, y]");
        for (const auto &v : p) s.path.push_back(d.point(v, "path_m"));
    }
    d.get(root, "waypoint_spacing_m", s.waypoint_spacing_m);
    d.get(root, "switch_threshold_m", s.switch_threshold_m);
    d.get(root, "max_steps", s.max_steps);
    if (const YAML::Node zs = root["zones"]) {
        if (!zs.IsSequence()) d.fail(zs, "zones: expected a list");
        for (const auto &z : zs) {
            d.keys(z, {"center_m", "diameter_m"}, "zones");
            if (!z["center_m"] || !z["diameter_m"]) d.fail(z, "zones: need center_m and diameter_m");
            s.zones.push_back({d.point(z["center_m"], "center_m"), d.as<double>(z["diameter_m"], "diameter_m")});
        }
    }
    const YAML::Node objs = root["objects"];
    if (!objs || !objs.IsSequence() || objs.size() == 0) d.fail(objs ? objs : root, "task: needs a list of objects");
    for (const auto &o : objs) {
        d.keys(o, {"class", "position_m", "zone"}, "objects");
        if (!o["class"] || !o["position_m"]) d.fail(o, "objects: need class and position_m");
        const auto cls = d.as<std::string>(o["class"], "class");
        if (!cfg.dynamics.count(cls)) d.fail(o["class"], "objects: unknown object class '" + cls + "'");
        t.objects.push_back({d.point(o["position_m"], "position_m"), 0.0, cfg.object_class(cls)});
        if (s.kind == TaskKind::sorting) {
            if (!o["zone"]) d.fail(o, "objects: sorting needs a zone per object");
            const long z = d.as<long>(o["zone"], "zone");
            if (z < 0) d.fail(o["zone"], "zone must be >= 0");
            s.group_of.push_back(static_cast<std::size_t>(z));
        }
    }
    s.workspace = cfg.workspace;
    try {
        s.validate(t.objects.size());
    } catch (const InvalidArgument &e) {
        d.fail(root, e.what());
    }
    return t;
}

TaskFile load_task(const std::filesystem::path &path, const RunConfig &cfg) {
    return parse_task(read_file(path), path.string(), cfg);
}

} // namespace airflow

#include "airflow/task.hpp"

#include "airflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

namespace airflow {

std::string to_string(TaskKind k) {
    switch (k) {
    case TaskKind::path_following: return "path_following";
    case TaskKind::aggregation: return "aggregation";
    case TaskKind::sorting: return "sorting";
    }
    return "unknown";
}

TaskKind task_kind_from_string(const std::string &s) {
    if (s == "path_following") return TaskKind::path_following;
    if (s == "aggregation") return TaskKind::aggregation;
    if (s == "sorting") return TaskKind::sorting;
    throw InvalidArgument("unknown task kind '" + s + "'");
}

void TaskSpec::validate(std::size_t n_objects) const {
    if (n_objects == 0) throw InvalidArgument("task: no objects");
    if (!(switch_threshold_m > 0.0)) throw InvalidArgument("task: switch threshold must be positive");
    if (max_steps < 1) throw InvalidArgument("task: max_steps must be >= 1");
    if (!(workspace.lower.x < workspace.upper.x && workspace.lower.y < workspace.upper.y))
        throw InvalidArgument("task: empty workspace");
    switch (kind) {
    case TaskKind::path_following:
        if (path.empty()) throw InvalidArgument("task: path following needs at least one path point");
        if (waypoint_spacing_m < 0.0) throw InvalidArgument("task: waypoint spacing must be >= 0");
        if (waypoint_spacing_m > 0.0 && !(waypoint_spacing_m > switch_threshold_m))
            throw InvalidArgument("task: waypoint spacing must exceed the switch threshold");
        for (std::size_t i = 1; i < path.size(); ++i)
            if (distance(path[i], path[i - 1]) <= switch_threshold_m)
                throw InvalidArgument("task: consecutive path points closer than the switch threshold");
        break;
    case TaskKind::aggregation:
        if (zones.size() != 1) throw InvalidArgument("task: aggregation needs exactly one zone");
        break;
    case TaskKind::sorting:
        if (zones.empty()) throw InvalidArgument("task: sorting needs at least one zone");
        if (group_of.size() != n_objects) throw InvalidArgument("task: sorting needs a zone for every object");
        for (std::size_t g : group_of)
            if (g >= zones.size()) throw InvalidArgument("task: object assigned to a missing zone");
        break;
    }
    for (const auto &z : zones)
        if (!(z.diameter_m > 0.0)) throw InvalidArgument("task: zone diameter must be positive");
}

std::vector<Vec2> TaskSpec::reference_points() const {
    if (kind == TaskKind::path_following)
        return waypoint_spacing_m > 0.0 ? discretize_polyline(path, waypoint_spacing_m) : path;
    std::vector<Vec2> out;
    for (const auto &z : zones) out.push_back(z.center);
    return out;
}

std::vector<Vec2> discretize_polyline(const std::vector<Vec2> &path, double spacing) {
    if (!(spacing > 0.0)) throw InvalidArgument("polyline: spacing must be positive");
    std::vector<Vec2> out;
    if (path.empty()) return out;
    out.push_back(path.front());
    for (std::size_t i = 1; i < path.size(); ++i) {
        const Vec2 a = path[i - 1], b = path[i];
        const auto parts = std::max<long>(1, static_cast<long>(std::ceil(distance(a, b) / spacing - 1e-9)));
        for (long k = 1; k <= parts; ++k) out.push_back(a + (static_cast<double>(k) / parts) * (b - a));
    }
    return out;
}

double polyline_distance(const Vec2 &p, const std::vector<Vec2> &path) {
    if (path.empty()) throw InvalidArgument("polyline: empty");
    if (path.size() == 1) return distance(p, path[0]);
    double best = INFINITY;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const Vec2 a = path[i - 1], ab = path[i] - a;
        const double len2 = dot(ab, ab);
        const double u = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, distance(p, a + u * ab));
    }
    return best;
}

double max_pairwise_distance(const std::vector<Vec2> &points) {
    if (points.size() < 2) throw InvalidArgument("max pairwise distance needs at least 2 points");
    double best = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j) best = std::max(best, distance(points[i], points[j]));
    return best;
}

ErrorStats error_stats(const std::vector<std::vector<double>> &errors) {
    ErrorStats s;
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (const auto &row : errors)
        for (double e : row) {
            sum += e;
            s.max = std::max(s.max, e);
            ++n;
        }
    if (n == 0) throw InvalidArgument("error metrics: nothing logged");
    s.mean = sum / static_cast<double>(n);
    for (const auto &row : errors)
        for (double e : row) sum2 += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(sum2 / static_cast<double>(n));
    return s;
}

ErrorStats path_error_metrics(const TaskReport &report) {
    std::vector<std::vector<double>> errors;
    for (const auto &m : report.measurements) errors.push_back(m.errors);
    return error_stats(errors);
}

CemConfig default_cem_config(TaskKind kind) {
    return kind == TaskKind::sorting ? CemConfig::plane_defaults() : CemConfig::line_defaults();
}

namespace {

std::vector<Vec2> positions_of(const std::vector<ObjectState> &objs) {
    std::vector<Vec2> out;
    for (const auto &o : objs) out.push_back(o.position);
    return out;
}

class Loop {
public:
    Loop(const TaskSpec &task, const FieldModel &field, const CemConfig &cem, const SimConfig &plant,
         std::uint64_t seed)
        : task_(task), field_(field), cem_(cem), plant_(plant), seed_(seed), refs_(task.reference_points()) {}

    TaskReport run(std::vector<ObjectState> state) {
        report_.kind = task_.kind;
        report_.references = refs_;
        double t = 0.0;
        const UniformField still(0.0);
        std::optional<FieldSnapshot> previous;

        for (int k = 0;; ++k) {
            const bool done = measure(state, t);
            if (!report_.failure.empty()) break;
            if (done) {
                report_.completed = true;
                break;
            }
            if (k == task_.max_steps) {
                report_.failure = "max_steps exceeded";
                break;
            }

            const ControlStep step = plan(state, k);
            SimConfig sim = plant_;
            sim.seed = mix_seed(seed_, 2 * static_cast<std::uint64_t>(k) + 1);
            const FieldSnapshot now = field_.snapshot(step.orientation);
            const AirflowField *before = previous ? static_cast<const AirflowField *>(&*previous) : &still;
            const double duration = cem_.delta_t_s + plant_.delay_s;
            state = simulate_end_states(state, now, duration, sim, before);
            previous.emplace(now);
            t += duration;
            report_.steps.push_back(step);
        }
        report_.steps_used = static_cast<int>(report_.steps.size());
        report_.error = path_error_metrics(report_);
        return std::move(report_);
    }

private:
    Vec2 reference_for(std::size_t j) const {
        switch (task_.kind) {
        case TaskKind::path_following: return refs_[index_];
        case TaskKind::aggregation: return task_.zones[0].center;
        case TaskKind::sorting: return task_.zones[task_.group_of[j]].center;
        }
        return {};
    }

    double error_of(std::size_t j, const Vec2 &p) const {
        if (task_.kind == TaskKind::path_following) return polyline_distance(p, task_.path);
        return distance(p, reference_for(j));
    }

    bool switch_condition(const std::vector<ObjectState> &state) const {
        double sum = 0.0;
        for (const auto &o : state) sum += distance(o.position, refs_[index_]);
        return sum / static_cast<double>(state.size()) < task_.switch_threshold_m;
    }

    // Objects by decreasing distance to their references.
    static std::vector<std::size_t> by_distance(const std::vector<ObjectState> &state, const std::vector<Vec2> &refs) {
        std::vector<std::size_t> order(state.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return distance(state[a].position, refs[a]) > distance(state[b].position, refs[b]);
        });
        return order;
    }

    // Plane sampling centred mu0_line behind the object farthest from its zone.
    // When that plan is infeasible or moves nothing, the next farthest is tried.
    CemOutcome plan_sorting(const PlanningProblem &problem, const CemConfig &base) const {
        std::optional<CemOutcome> first;
        for (std::size_t j : by_distance(problem.objects, problem.references)) {
            const Vec2 &p = problem.objects[j].position;
            if (!(distance(p, problem.references[j]) > 0.0)) break;
            CemConfig cfg = base;
            cfg.mu0_plane = SamplingSpace::line_away(p, problem.references[j])
                                .to_point(Eigen::VectorXd::Constant(1, base.mu0_line_m));
            CemOutcome out = optimize(SamplingSpace::plane(), problem, cfg);
            if (out.feasible && moves_something(problem, out)) return out;
            if (!first) first = std::move(out);
        }
        return first ? *first : optimize(SamplingSpace::plane(), problem, base);
    }

    static bool moves_something(const PlanningProblem &problem, const CemOutcome &out) {
        for (std::size_t j = 0; j < out.predicted.size(); ++j)
            if (distance(out.predicted[j].position, problem.objects[j].position) > 1e-6) return true;
        return false;
    }

    // Logs the measurement; returns true when the task is complete.
    bool measure(const std::vector<ObjectState> &state, double t) {
        Measurement m;
        m.t_s = t;
        m.objects = state;
        for (std::size_t j = 0; j < state.size(); ++j) {
            m.errors.push_back(error_of(j, state[j].position));
            if (report_.failure.empty() && !task_.workspace.contains(state[j].position))
                report_.failure = "object " + std::to_string(j) + " left the workspace";
        }
        if (state.size() > 1) m.max_pairwise = max_pairwise_distance(positions_of(state));

        bool done = false;
        switch (task_.kind) {
        case TaskKind::path_following:
            if (switch_condition(state)) {
                if (index_ + 1 < refs_.size()) {
                    ++index_;
                    m.advanced = true;
                } else {
                    done = true;
                }
            }
            break;
        case TaskKind::aggregation:
            done = std::all_of(state.begin(), state.end(),
                               [&](const ObjectState &o) { return task_.zones[0].contains(o.position); });
            break;
        case TaskKind::sorting:
            done = true;
            for (std::size_t j = 0; j < state.size(); ++j)
                done = done && task_.zones[task_.group_of[j]].contains(state[j].position);
            break;
        }
        m.ref_index = index_;
        report_.measurements.push_back(std::move(m));
        return done;
    }

    ControlStep plan(const std::vector<ObjectState> &state, int k) {
        PlanningProblem problem{&field_, state, {}, plant_};
        for (std::size_t j = 0; j < state.size(); ++j) problem.references.push_back(reference_for(j));

        SamplingSpace space = SamplingSpace::plane();
        if (task_.kind != TaskKind::sorting) {
            // Line through the object farthest from its reference.
            const std::size_t far = by_distance(state, problem.references).front();
            if (distance(state[far].position, problem.references[far]) > 0.0)
                space = SamplingSpace::line_away(state[far].position, problem.references[far]);
        }

        CemConfig cfg = cem_;
        cfg.seed = mix_seed(seed_, 2 * static_cast<std::uint64_t>(k));
        const CemOutcome out = task_.kind == TaskKind::sorting && !cfg.mu0_plane ? plan_sorting(problem, cfg)
                                                                                 : optimize(space, problem, cfg);

        ControlStep step;
        step.step = k + 1;
        step.ref_index = index_;
        step.s_star = out.s_star;
        step.orientation = out.orientation;
        step.planned_cost = out.best_cost;
        step.cem_iterations = out.iterations_used;
        step.cem_converged = out.converged;
        step.feasible = out.feasible;
        step.plan_positions = positions_of(state);
        step.predicted = positions_of(out.predicted);
        return step;
    }

    const TaskSpec &task_;
    const FieldModel &field_;
    CemConfig cem_;
    SimConfig plant_;
    std::uint64_t seed_;
    std::vector<Vec2> refs_;
    std::size_t index_ = 0;
    TaskReport report_;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

} // namespace

TaskReport run_task(const TaskSpec &task, const std::vector<ObjectState> &objects, const FieldModel &field,
                    const CemConfig &cem, const SimConfig &plant, std::uint64_t seed) {
    task.validate(objects.size());
    cem.validate();
    plant.validate();
    for (const auto &o : objects) o.dynamics.validate();
    return Loop(task, field, cem, plant, seed).run(objects);
}

void write_step_log(std::ostream &os, const TaskReport &report) {
    os << "step,t_s,ref_index,advanced,pan_deg,tilt_deg,s_x_m,s_y_m,planned_cost_m,cem_iterations,"
          "cem_converged,object_id,x_m,y_m,speed_mps,error_m\n";
    for (std::size_t m = 0; m < report.measurements.size(); ++m) {
        const Measurement &meas = report.measurements[m];
        std::string plan = ",,,,,,";
        if (m > 0) {
            const ControlStep &s = report.steps[m - 1];
            plan = num(s.orientation.pan_deg) + "," + num(s.orientation.tilt_deg) + "," + num(s.s_star.x) + "," +
                   num(s.s_star.y) + "," + num(s.planned_cost) + "," + std::to_string(s.cem_iterations) + "," +
                   (s.cem_converged ? "1" : "0");
        }
        for (std::size_t j = 0; j < meas.objects.size(); ++j) {
            const ObjectState &o = meas.objects[j];
            os << m << ',' << num(meas.t_s) << ',' << meas.ref_index << ',' << (meas.advanced ? 1 : 0) << ','
               << plan << ',' << j << ',' << num(o.position.x) << ',' << num(o.position.y) << ',' << num(o.speed)
               << ',' << num(meas.errors[j]) << '\n';
        }
    }
}

void write_summary(std::ostream &os, const TaskReport &report) {
    double pairwise = 0.0;
    for (const auto &m : report.measurements) pairwise = std::max(pairwise, m.max_pairwise);
    const bool path = report.kind == TaskKind::path_following;
    os << "task: " << to_string(report.kind) << '\n'
       << "completed: " << (report.completed ? "true" : "false") << '\n'
       << "steps_used: " << report.steps_used << '\n'
       << "elapsed_s: " << num(report.measurements.empty() ? 0.0 : report.measurements.back().t_s) << '\n'
       << "objects: " << (report.measurements.empty() ? 0 : report.measurements.front().objects.size()) << '\n'
       << "references: " << report.references.size() << '\n'
       << "error_convention: "
       << (path ? "distance to reference polyline" : "distance to assigned reference point")
       << ", every control step, population std\n"
       << "mean_error_m: " << num(report.error.mean) << '\n'
       << "std_error_m: " << num(report.error.std) << '\n'
       << "max_error_m: " << num(report.error.max) << '\n'
       << "max_pairwise_distance_m: " << num(pairwise) << '\n';
    if (!report.failure.empty()) os << "failure: " << report.failure << '\n';
}

void write_svg(std::ostream &os, const TaskSpec &task, const TaskReport &report) {
    constexpr double px = 200.0; // per metre
    const Workspace &w = task.workspace;
    const double width = (w.upper.x - w.lower.x) * px, height = (w.upper.y - w.lower.y) * px;
    auto X = [&](double x) { return num((x - w.lower.x) * px); };
    auto Y = [&](double y) { return num((w.upper.y - y) * px); };
    auto polyline = [&](const std::vector<Vec2> &pts, const char *style) {
        os << "<polyline fill=\"none\" " << style << " points=\"";
        for (const auto &p : pts) os << X(p.x) << ',' << Y(p.y) << ' ';
        os << "\"/>\n";
    };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"#999\"/>\n";
    if (task.kind == TaskKind::path_following) {
        polyline(task.path, "stroke=\"#888\" stroke-width=\"3\" stroke-dasharray=\"8 4\"");
        for (const auto &r : report.references)
            os << "<circle cx=\"" << X(r.x) << "\" cy=\"" << Y(r.y) << "\" r=\"3\" fill=\"#888\"/>\n";
    }
    for (const auto &z : task.zones)
        os << "<circle cx=\"" << X(z.center.x) << "\" cy=\"" << Y(z.center.y) << "\" r=\""
           << num(0.5 * z.diameter_m * px) << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"2\"/>\n";

    const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    if (!report.measurements.empty()) {
        const std::size_t n = report.measurements.front().objects.size();
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<Vec2> track;
            for (const auto &m : report.measurements) track.push_back(m.objects[j].position);
            const std::string style = std::string("stroke=\"") + colors[j % 6] + "\" stroke-width=\"1.5\"";
            polyline(track, style.c_str());
            const Vec2 end = track.back();
            os << "<circle cx=\"" << X(end.x) << "\" cy=\"" << Y(end.y) << "\" r=\"3\" fill=\"" << colors[j % 6]
               << "\"/>\n";
        }
    }
    for (const auto &s : report.steps)
        os << "<path d=\"M" << X(s.s_star.x - 0.01) << ',' << Y(s.s_star.y) << " h" << num(0.02 * px) << " M"
           << X(s.s_star.x) << ',' << Y(s.s_star.y - 0.01) << " v" << num(-0.02 * px)
           << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "</svg>\n";
}

} // namespace airflow

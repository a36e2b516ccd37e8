// Closed-loop task execution: path following, aggregation and sorting.
//
// Each control step measures the object positions, advances the reference
// when the switching condition holds, plans a stagnation point with CEM,
// and runs the plant for delta_t (+ actuation delay) under that orientation.
#pragma once

#include "airflow/cem.hpp"
#include "airflow/dynamics.hpp"
#include "airflow/field_model.hpp"
#include "airflow/vec2.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace airflow {

enum class TaskKind { path_following, aggregation, sorting };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string &s);

struct Zone {
    Vec2 center;
    double diameter_m = 0.0;

    bool contains(const Vec2 &p) const { return distance(p, center) <= 0.5 * diameter_m; }
};

/// Rectangular region objects must stay in; leaving it fails the run.
struct Workspace {
    Vec2 lower{-1.5, -1.5};
    Vec2 upper{1.5, 1.5};

    bool contains(const Vec2 &p) const {
        return p.x >= lower.x && p.x <= upper.x && p.y >= lower.y && p.y <= upper.y;
    }
};

struct TaskSpec {
    TaskKind kind = TaskKind::path_following;
    std::string name;
    std::vector<Vec2> path;             ///< polyline vertices (path following)
    double waypoint_spacing_m = 0.10;   ///< 0: the vertices themselves are the references
    std::vector<Zone> zones;            ///< aggregation: one zone; sorting: one per group
    std::vector<std::size_t> group_of;  ///< sorting: zone index per object
    double switch_threshold_m = 0.04;   ///< single object: distance; several: mean distance
    int max_steps = 100;
    Workspace workspace;

    /// Throws InvalidArgument when the task is inconsistent for `n_objects`.
    void validate(std::size_t n_objects) const;
    /// Reference points in visiting order (path following), or zone centres.
    std::vector<Vec2> reference_points() const;
};

/// Polyline resampled so consecutive points are at most `spacing` apart
/// (each segment split evenly); vertices are kept.
std::vector<Vec2> discretize_polyline(const std::vector<Vec2> &path, double spacing);

/// Distance from `p` to the nearest segment of the polyline.
double polyline_distance(const Vec2 &p, const std::vector<Vec2> &path);

/// Maximum Euclidean distance over all pairs. Throws InvalidArgument for < 2 points.
double max_pairwise_distance(const std::vector<Vec2> &points);

struct Measurement {
    double t_s = 0.0;
    std::size_t ref_index = 0;  ///< current reference after the switching check
    bool advanced = false;      ///< reference advanced at this measurement
    std::vector<ObjectState> objects;
    std::vector<double> errors; ///< per object, m
    double max_pairwise = 0.0;  ///< m (0 for a single object)
};

struct ControlStep {
    int step = 0;
    std::size_t ref_index = 0;
    Vec2 s_star;
    NozzleOrientation orientation;
    double planned_cost = 0.0;
    int cem_iterations = 0;
    bool cem_converged = false;
    bool feasible = false;
    std::vector<Vec2> plan_positions; ///< object positions the plan was made for
    std::vector<Vec2> predicted;      ///< planner's end positions (when feasible)
};

struct ErrorStats {
    double mean = 0.0;
    double std = 0.0; ///< population standard deviation
    double max = 0.0;
};

struct TaskReport {
    TaskKind kind = TaskKind::path_following;
    std::vector<Vec2> references;
    std::vector<Measurement> measurements; ///< [0] initial, [k] after control step k
    std::vector<ControlStep> steps;
    ErrorStats error;
    int steps_used = 0;
    bool completed = false;
    std::string failure;
};

/// Mean, population std and max over every (measurement, object) error.
ErrorStats error_stats(const std::vector<std::vector<double>> &errors);
/// Same over a report's measurements. Throws InvalidArgument when nothing is logged.
ErrorStats path_error_metrics(const TaskReport &report);

/// CEM settings used for a task kind: line sampling for path following and
/// aggregation, plane sampling for sorting. With mu0_plane unset, sorting
/// centres the plane Gaussian mu0_line behind the object farthest from its
/// zone, falling back to the next farthest when that plan moves nothing.
CemConfig default_cem_config(TaskKind kind);

/// Runs the closed loop. Per-step CEM and plant seeds derive from `seed`.
TaskReport run_task(const TaskSpec &task, const std::vector<ObjectState> &objects, const FieldModel &field,
                    const CemConfig &cem, const SimConfig &plant, std::uint64_t seed);

/// One row per object per measurement; plan columns are empty for the initial one.
void write_step_log(std::ostream &os, const TaskReport &report);
/// `key: value` summary block.
void write_summary(std::ostream &os, const TaskReport &report);
/// Reference path or zones, measured object tracks and planned stagnation points.
void write_svg(std::ostream &os, const TaskSpec &task, const TaskReport &report);

} // namespace airflow

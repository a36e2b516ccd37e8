// Run configuration and task files (YAML). Config files use cm and cm^2 for
// the planner's lengths and variances; everything is converted to SI on load.
#pragma once

#include "airflow/cem.hpp"
#include "airflow/dynamics.hpp"
#include "airflow/field_model.hpp"
#include "airflow/sindy.hpp"
#include "airflow/task.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace airflow {

struct RunConfig {
    std::uint64_t seed = 1;
    FieldGeometry geometry;
    std::vector<double> tilt_nodes_deg{0.0, 22.5, 45.0};
    double fusion_scale_m = 0.2;
    std::optional<std::filesystem::path> field_model; ///< unset: built-in reference world
    std::map<std::string, DynamicsModel> dynamics{{"tracer", DynamicsModel::tracer()},
                                                  {"cotton_wad", DynamicsModel::cotton_wad()}};
    SindyConfig sindy;
    LibrarySpec library;
    CemConfig cem_line = CemConfig::line_defaults();
    CemConfig cem_plane = CemConfig::plane_defaults();
    SimConfig sim;
    Workspace workspace;

    /// Throws InvalidArgument on any value a module would reject.
    void validate() const;
    /// Line settings for path following and aggregation, plane settings for sorting.
    const CemConfig &cem_for(TaskKind kind) const { return kind == TaskKind::sorting ? cem_plane : cem_line; }
    const DynamicsModel &object_class(const std::string &name) const;
};

/// Missing keys keep their defaults; unknown keys are rejected. Relative
/// paths resolve against the config file's directory. Throws InputError.
RunConfig load_config(const std::filesystem::path &path);
RunConfig parse_config(const std::string &yaml, const std::string &name,
                       const std::filesystem::path &base_dir = {});

/// The configured field model file, or the reference world with the
/// configured geometry.
FieldModel load_world(const RunConfig &cfg);

struct TaskFile {
    TaskSpec spec;
    std::vector<ObjectState> objects;
};

/// Object classes resolve against cfg.dynamics; the workspace comes from cfg.
TaskFile load_task(const std::filesystem::path &path, const RunConfig &cfg);
TaskFile parse_task(const std::string &yaml, const std::string &name, const RunConfig &cfg);

} // namespace airflow

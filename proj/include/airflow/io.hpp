// Flat-file formats: velocity grids, field models, trajectories and the
// trajectory sidecar. Readers throw InputError naming the file and line.
#pragma once

#include "airflow/dynamics.hpp"
#include "airflow/field_fit.hpp"
#include "airflow/field_model.hpp"
#include "airflow/sindy.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace airflow {

// Velocity grid:
//   # tilt_deg=22.5 pan_deg=90 source=synthetic
//   x_m,y_m,speed_mps
void write_grid(std::ostream &os, const VelocityGrid &grid);
VelocityGrid read_grid(std::istream &is, const std::string &name);

// Field model, one row per (tilt node, alpha bin):
//   # h=1.43 a1=0.1 a2=2.33
//   tilt_deg,alpha_deg,b1,b2,b3
void write_field_model(std::ostream &os, const FieldModel &model);
FieldModel read_field_model(std::istream &is, const std::string &name);

// Trajectories, rows grouped by object:
//   object_id,t_s,x_m,y_m,speed_mps
void write_trajectories(std::ostream &os, const std::vector<Trajectory> &trajectories);
std::vector<Trajectory> read_trajectories(std::istream &is, const std::string &name);

// Sidecar listing trajectory files and the nozzle orientation they were
// recorded under; paths are relative to the sidecar:
//   trajectory_file,pan_deg,tilt_deg
struct TrajectoryFileRef {
    std::string file;
    NozzleOrientation orientation;
};
void write_sidecar(std::ostream &os, const std::vector<TrajectoryFileRef> &refs);
std::vector<TrajectoryFileRef> read_sidecar(std::istream &is, const std::string &name);

// Path-based helpers. Loaders throw InputError (line 0) when a file cannot be opened.
VelocityGrid load_grid(const std::filesystem::path &path);
void save_grid(const std::filesystem::path &path, const VelocityGrid &grid);
FieldModel load_field_model(const std::filesystem::path &path);
void save_field_model(const std::filesystem::path &path, const FieldModel &model);
std::vector<Trajectory> load_trajectories(const std::filesystem::path &path);
void save_trajectories(const std::filesystem::path &path, const std::vector<Trajectory> &trajectories);
/// Every trajectory of every listed file, tagged with its file's orientation.
std::vector<OrientedTrajectory> load_trajectory_set(const std::filesystem::path &sidecar);

/// `key: value` block: terms, discrete and continuous coefficients, active set, R^2.
void write_sindy_report(std::ostream &os, const SindyResult &result);
/// Object tracks and the stagnation point.
void write_trajectory_svg(std::ostream &os, const std::vector<Trajectory> &trajectories, const Vec2 &stagnation);

} // namespace airflow

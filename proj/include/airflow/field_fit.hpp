// Fitting the radial-profile coefficient table from gridded speed data.
#pragma once

#include "airflow/field_model.hpp"
#include "airflow/vec2.hpp"

#include <array>
#include <string>
#include <vector>

namespace airflow {

enum class GridSource { measurement, cfd, fused, synthetic };

std::string to_string(GridSource s);
GridSource grid_source_from_string(const std::string &s);

struct GridPoint {
    Vec2 position; ///< m
    double speed;  ///< m/s
};

/// Air-speed samples on the floor for one nozzle tilt. Grids are recorded
/// with the nozzle panned to `pan_deg` (90 by default: the data-collection
/// heading).
struct VelocityGrid {
    double tilt_deg = 0.0;
    double pan_deg = 90.0;
    GridSource source = GridSource::synthetic;
    std::vector<GridPoint> points;

    NozzleOrientation orientation() const { return {pan_deg, tilt_deg}; }
    /// Throws InvalidArgument on negative speeds or duplicate locations.
    void validate() const;
};

/// Blends co-registered CFD and measurement grids:
///   fused = w cfd + (1 - w) meas,   w = exp(-|p - s| / r0).
/// Throws InvalidArgument when the grids differ in tilt, size or point locations.
VelocityGrid fuse_grids(const VelocityGrid &meas, const VelocityGrid &cfd, const Vec2 &s,
                        double fusion_scale_m = 0.2);

struct ProfileFitOptions {
    double pool_halfwidth_deg = 5.0;     ///< initial angular pooling window (+/-)
    double max_pool_halfwidth_deg = 45.0; ///< widest window tried before giving up
    double pool_step_deg = 5.0;
    std::size_t min_samples = 8;         ///< samples with distinct radii per bin
    int max_iterations = 200;
    double step_tolerance = 1e-8;        ///< relative parameter step
};

struct BinFitDiagnostics {
    std::size_t samples = 0;
    double pool_halfwidth_deg = 0.0;
    double rms_residual = 0.0; ///< weighted RMS of speed residuals, m/s
    int iterations = 0;
    bool converged = false;
};

struct ProfileFit {
    AlphaTable profiles;
    std::array<BinFitDiagnostics, kAlphaBins> diagnostics;
};

/// Weighted nonlinear least-squares fit of one radial profile to (r, speed, weight)
/// samples. Optimizes in a log parametrization so b1 > 0 and b3 < b2 < 0 always hold.
struct RadialSample {
    double r;
    double speed;
    double weight = 1.0;
};
RadialProfile fit_radial_profile(const std::vector<RadialSample> &samples,
                                 const ProfileFitOptions &opt = {},
                                 BinFitDiagnostics *diag = nullptr);

/// Fits one profile per 1-degree alpha bin (relative to the grid's pan
/// heading) from samples binned by bearing around `s`. Throws InvalidArgument
/// naming the bin when a bin cannot be fitted, or when the grid has no flow.
ProfileFit fit_profiles(const VelocityGrid &grid, const Vec2 &s, const ProfileFitOptions &opt = {});

} // namespace airflow

// Cross-entropy-method planning of the stagnation point.
//
// Each control step draws candidate stagnation points from a Gaussian, scores
// them by forward-simulating every object for one actuation interval, and
// refits the Gaussian to the elite candidates. The cost of a candidate is the
// summed distance of the predicted end positions to their references, or a
// fixed penalty when the candidate sits within delta_min of any object.
#pragma once

#include "airflow/dynamics.hpp"
#include "airflow/field_model.hpp"
#include "airflow/vec2.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace airflow {

/// All lengths in metres and variances in m^2 (config files use cm / cm^2).
struct CemConfig {
    double mu0_line_m = 0.418;
    double sigma0_line_m2 = 20.9e-4;
    std::optional<Vec2> mu0_plane; ///< unset: centroid of the objects (task runs pick their own)
    Eigen::Matrix2d sigma0_plane_m2 = 31.3e-4 * Eigen::Matrix2d::Identity();
    int n = 25;
    int n_elite = 3;
    int i_max = 5;
    double sigma_star_m2 = 0.3e-4; ///< variance (line) or Frobenius norm (plane)
    double variance_floor_m2 = 0.0;
    double delta_min_m = 0.10;
    double penalty = 1e3;
    double delta_t_s = 1.5;
    std::uint64_t seed = 0;

    void validate() const;

    /// Single- and multi-object path following, aggregation.
    static CemConfig line_defaults() { return {}; }
    /// Sorting: bivariate sampling.
    static CemConfig plane_defaults();
};

struct SamplingSpace {
    enum class Mode { line, plane };
    Mode mode = Mode::plane;
    Vec2 anchor;   ///< line mode: object position
    Vec2 away_dir; ///< line mode: unit vector pointing away from the reference

    static SamplingSpace plane() { return {}; }
    /// Line through `object` along the direction from `reference` to `object`.
    /// Throws InvalidArgument when the two coincide.
    static SamplingSpace line_away(const Vec2 &object, const Vec2 &reference);
    Vec2 to_point(const Eigen::VectorXd &x) const;
    void validate() const;
};

// Generic minimizer ---------------------------------------------------------

struct CemSettings {
    int n = 25;
    int n_elite = 3;
    int i_max = 5;
    double sigma_star = 0.0;   ///< convergence threshold on the spread measure
    double variance_floor = 0.0;
    std::uint64_t seed = 0;
};

struct CemIteration {
    Eigen::VectorXd mean;      ///< distribution sampled this iteration
    Eigen::MatrixXd cov;
    Eigen::MatrixXd samples;   ///< dim x n
    std::vector<double> costs;
    std::vector<int> elite;    ///< sample indices, best first
};

struct CemResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::VectorXd best_sample;
    double best_sample_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<CemIteration> history;
};

/// Spread used for convergence: the variance in 1D, the Frobenius norm otherwise.
double cem_spread(const Eigen::MatrixXd &cov);

/// Elite refit uses the population (co)variance of the n_elite lowest-cost
/// samples; ties are broken by sample index.
CemResult cem_minimize(const std::function<double(const Eigen::VectorXd &)> &cost,
                       const Eigen::VectorXd &mu0, const Eigen::MatrixXd &sigma0,
                       const CemSettings &settings);

// Stagnation-point planning ------------------------------------------------

struct PlanningProblem {
    const FieldModel *field = nullptr;
    std::vector<ObjectState> objects;
    std::vector<Vec2> references; ///< one per object
    SimConfig sim;                ///< noise and delay are ignored when planning
};

/// End states after delta_t under the orientation that places the stagnation
/// point at `s`; nullopt when `s` is not reachable.
std::optional<std::vector<ObjectState>> predict_end_states(const Vec2 &s, const PlanningProblem &problem,
                                                           const CemConfig &cfg);

/// Penalized cost: cfg.penalty when any object lies within delta_min of `s`
/// or `s` is unreachable, else the summed end-position error in metres.
double stagnation_cost(const Vec2 &s, const PlanningProblem &problem, const CemConfig &cfg);

struct CemOutcome {
    Vec2 s_star;
    NozzleOrientation orientation;
    double best_cost = 0.0;
    int iterations_used = 0;
    bool converged = false;
    bool feasible = false;           ///< best_cost below the penalty
    bool used_best_sample = false;   ///< final mean was infeasible
    std::vector<ObjectState> predicted; ///< planner's end states at s_star (when feasible)
    std::vector<CemIteration> history;  ///< samples mapped to 2D points (x, y)
};

/// Throws InvalidArgument on invalid config, missing field or reference/object mismatch.
CemOutcome optimize(const SamplingSpace &space, const PlanningProblem &problem, const CemConfig &cfg);

} // namespace airflow

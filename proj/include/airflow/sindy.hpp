// Sparse identification of the object speed model from trajectories.
//
// The one-step map v[k+1] = Theta(v[k], a[k]) xi is regressed on a polynomial
// library in object speed v and air speed a, with bisquare-weighted IRLS,
// sequential thresholding and bootstrap ensembling (median of nonzero
// coefficients). Continuous-time coefficients follow from the forward
// difference v[k+1] = v[k] + dt f(v[k], a[k]).
#pragma once

#include "airflow/dynamics.hpp"
#include "airflow/field_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace airflow {

struct SnapshotData {
    std::vector<double> v_now;  ///< m/s
    std::vector<double> v_next; ///< m/s, one sample later
    std::vector<double> v_air;  ///< m/s at the object position at v_now's time
    double dt = 0.025;          ///< s

    std::size_t size() const { return v_now.size(); }
    bool empty() const { return v_now.empty(); }
    /// Throws InvalidArgument: equal lengths >= 10, entries >= 0, dt > 0.
    void validate() const;
    void append(const SnapshotData &other);
};

struct OrientedTrajectory {
    Trajectory trajectory;
    NozzleOrientation orientation;
};

struct PreprocessOptions {
    double stationary_threshold = 1e-3; ///< m/s
};

struct PreprocessResult {
    SnapshotData data;
    std::vector<std::string> warnings;
};

/// Central-difference speeds v[k] = |p[k+1] - p[k-1]| / (2 dt), pairs (v[k], v[k+1])
/// within each trajectory, air speed from the field model at p[k]. Pairs with
/// both speeds below the stationary threshold are dropped. Trajectories with
/// fewer than 3 samples are skipped with a warning. Throws InvalidArgument on
/// non-uniform sampling or mixed sample intervals.
PreprocessResult preprocess(const std::vector<OrientedTrajectory> &trajectories,
                            const FieldModel &field, const PreprocessOptions &opt = {});

struct LibrarySpec {
    int max_degree = 3;
    bool include_constant = true;
};

struct Library {
    Eigen::MatrixXd matrix;         ///< k x m
    std::vector<std::string> names; ///< m term names
    std::vector<std::pair<int, int>> powers; ///< (power of v, power of a) per column
};

/// Columns: constant, then for each degree d = 1..max_degree the monomials
/// v^i a^(d-i) for i = d down to 0. Degree 3 gives
/// [1, v, a, v^2, v*a, a^2, v^3, v^2*a, v*a^2, a^3].
Library build_library(const SnapshotData &data, const LibrarySpec &spec);
Library library_terms(const LibrarySpec &spec);

enum class ThresholdMode {
    normalized, ///< threshold |coef| * rms(column)
    raw,        ///< threshold |coef|
};

struct SindyConfig {
    double lambda = 0.07;
    int n_bootstraps = 15;
    double bootstrap_fraction = 1.0; ///< rows per bootstrap, drawn with replacement
    double bisquare_c = 4.685;
    double inclusion_threshold = 0.5;
    int max_irls_iter = 50;
    double irls_weight_tol = 1e-8;
    ThresholdMode threshold_mode = ThresholdMode::normalized;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Bisquare-weighted least squares (IRLS, scale = 1.4826 MAD of residuals).
/// Returns the coefficients; `weights` (optional) receives the final row weights.
Eigen::VectorXd bisquare_irls(const Eigen::MatrixXd &a, const Eigen::VectorXd &y, double c,
                              int max_iter, double weight_tol, Eigen::VectorXd *weights = nullptr);

/// One sparse robust fit: IRLS, zero coefficients below lambda, refit the
/// survivors, repeat until the active set is stable. Rank-deficient active
/// sets lose their highest-index dependent column (with a warning).
Eigen::VectorXd robust_sparse_fit(const Eigen::MatrixXd &library, const Eigen::VectorXd &target,
                                  const SindyConfig &cfg, std::vector<std::string> *warnings = nullptr);

struct SindyResult {
    std::vector<std::string> term_names;
    std::vector<std::pair<int, int>> powers;
    Eigen::VectorXd xi_discrete;
    Eigen::VectorXd xi_continuous;
    std::vector<std::string> active_terms;
    double r_squared = 0.0;
    Eigen::MatrixXd per_bootstrap; ///< m x n_bootstraps
    double dt = 0.025;
    std::size_t rows = 0;
    std::vector<std::string> warnings;

    /// Continuous coefficient of a term by name, 0 when absent.
    double continuous(const std::string &term) const;
    /// (xi1, xi2, xi3) = continuous coefficients of v, a and 1.
    DynamicsModel to_dynamics(std::string label) const;
};

/// Row indices of bootstrap `b` (deterministic in cfg.seed).
std::vector<std::size_t> bootstrap_rows(std::size_t rows, const SindyConfig &cfg, int b);

/// Ensemble fit over cfg.n_bootstraps resamples. Throws InvalidArgument on empty data.
SindyResult ensemble_fit(const SnapshotData &data, const LibrarySpec &spec, const SindyConfig &cfg);

/// Same, with caller-supplied resamples (one row-index list per bootstrap).
SindyResult ensemble_fit(const SnapshotData &data, const LibrarySpec &spec, const SindyConfig &cfg,
                         const std::vector<std::vector<std::size_t>> &resamples);

} // namespace airflow

#include "airflow/cem.hpp"

#include "airflow/errors.hpp"
#include "airflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace airflow {

void CemConfig::validate() const {
    if (n < 1 || n_elite < 1 || n_elite > n) throw InvalidArgument("cem: need 1 <= n_elite <= n");
    if (i_max < 1) throw InvalidArgument("cem: i_max must be >= 1");
    if (!(sigma0_line_m2 > 0.0)) throw InvalidArgument("cem: line sigma0 must be positive");
    Eigen::LLT<Eigen::Matrix2d> llt(sigma0_plane_m2);
    if (llt.info() != Eigen::Success || !sigma0_plane_m2.isApprox(sigma0_plane_m2.transpose()))
        throw InvalidArgument("cem: plane sigma0 must be symmetric positive definite");
    if (!(sigma_star_m2 >= 0.0) || !(variance_floor_m2 >= 0.0))
        throw InvalidArgument("cem: sigma_star and variance floor must be non-negative");
    if (!(delta_min_m > 0.0)) throw InvalidArgument("cem: delta_min must be positive");
    if (!(penalty > 0.0)) throw InvalidArgument("cem: penalty must be positive");
    if (!(delta_t_s > 0.0)) throw InvalidArgument("cem: delta_t must be positive");
}

CemConfig CemConfig::plane_defaults() {
    CemConfig c;
    c.n = 100;
    c.n_elite = 10;
    c.sigma0_plane_m2 = 31.3e-4 * Eigen::Matrix2d::Identity();
    c.sigma_star_m2 = 0.5e-4;
    return c;
}

SamplingSpace SamplingSpace::line_away(const Vec2 &object, const Vec2 &reference) {
    const double d = distance(object, reference);
    if (!(d > 0.0)) throw InvalidArgument("line sampling: object coincides with its reference");
    return {Mode::line, object, (1.0 / d) * (object - reference)};
}

Vec2 SamplingSpace::to_point(const Eigen::VectorXd &x) const {
    if (mode == Mode::line) return anchor + x(0) * away_dir;
    return {x(0), x(1)};
}

void SamplingSpace::validate() const {
    if (mode == Mode::line && std::abs(norm(away_dir) - 1.0) > 1e-12)
        throw InvalidArgument("line sampling: away_dir must be a unit vector");
}

double cem_spread(const Eigen::MatrixXd &cov) {
    return cov.rows() == 1 ? cov(0, 0) : cov.norm();
}

CemResult cem_minimize(const std::function<double(const Eigen::VectorXd &)> &cost,
                       const Eigen::VectorXd &mu0, const Eigen::MatrixXd &sigma0,
                       const CemSettings &st) {
    const Eigen::Index dim = mu0.size();
    if (sigma0.rows() != dim || sigma0.cols() != dim) throw InvalidArgument("cem: covariance shape mismatch");
    if (st.n < 1 || st.n_elite < 1 || st.n_elite > st.n || st.i_max < 1)
        throw InvalidArgument("cem: need 1 <= n_elite <= n and i_max >= 1");

    std::mt19937_64 rng(st.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    CemResult res;
    res.mean = mu0;
    res.cov = sigma0;
    res.best_sample = mu0;
    res.best_sample_cost = std::numeric_limits<double>::infinity();

    for (int it = 0; it < st.i_max; ++it) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(res.cov);
        const Eigen::MatrixXd root =
            eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

        CemIteration step;
        step.mean = res.mean;
        step.cov = res.cov;
        step.samples.resize(dim, st.n);
        step.costs.resize(static_cast<std::size_t>(st.n));
        for (int i = 0; i < st.n; ++i) {
            Eigen::VectorXd z(dim);
            for (Eigen::Index d = 0; d < dim; ++d) z(d) = normal(rng);
            step.samples.col(i) = res.mean + root * z;
        }
        for (int i = 0; i < st.n; ++i) {
            const double c = cost(step.samples.col(i));
            step.costs[static_cast<std::size_t>(i)] = c;
            if (c < res.best_sample_cost) {
                res.best_sample_cost = c;
                res.best_sample = step.samples.col(i);
            }
        }

        std::vector<int> order(static_cast<std::size_t>(st.n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return step.costs[static_cast<std::size_t>(a)] < step.costs[static_cast<std::size_t>(b)];
        });
        step.elite.assign(order.begin(), order.begin() + st.n_elite);

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
        for (int e : step.elite) mean += step.samples.col(e);
        mean /= st.n_elite;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
        for (int e : step.elite) {
            const Eigen::VectorXd d = step.samples.col(e) - mean;
            cov += d * d.transpose();
        }
        cov /= st.n_elite;
        cov.diagonal().array() += st.variance_floor;

        res.history.push_back(std::move(step));
        res.mean = mean;
        res.cov = cov;
        res.iterations = it + 1;
        if (cem_spread(cov) <= st.sigma_star) {
            res.converged = true;
            break;
        }
    }
    return res;
}

namespace {

void check_problem(const PlanningProblem &p) {
    if (!p.field) throw InvalidArgument("planning: no field model");
    if (p.objects.size() != p.references.size())
        throw InvalidArgument("planning: one reference per object required");
    if (p.objects.empty()) throw InvalidArgument("planning: no objects");
}

SimConfig planning_sim(const SimConfig &sim) {
    SimConfig s = sim;
    s.noise_sigma = 0.0;
    s.delay_s = 0.0;
    return s;
}

} // namespace

std::optional<std::vector<ObjectState>> predict_end_states(const Vec2 &s, const PlanningProblem &problem,
                                                           const CemConfig &cfg) {
    check_problem(problem);
    const FieldGeometry &g = problem.field->geometry();
    if (!(norm(s) <= g.max_stagnation_radius())) return std::nullopt;
    NozzleOrientation o;
    try {
        o = orientation_for_stagnation(s, g);
    } catch (const DomainError &) {
        return std::nullopt;
    }
    const FieldSnapshot field = problem.field->snapshot(o);
    return simulate_end_states(problem.objects, field, cfg.delta_t_s, planning_sim(problem.sim));
}

double stagnation_cost(const Vec2 &s, const PlanningProblem &problem, const CemConfig &cfg) {
    check_problem(problem);
    for (const auto &o : problem.objects)
        if (distance(o.position, s) < cfg.delta_min_m) return cfg.penalty;
    const auto ends = predict_end_states(s, problem, cfg);
    if (!ends) return cfg.penalty;
    double j = 0.0;
    for (std::size_t i = 0; i < ends->size(); ++i) j += distance((*ends)[i].position, problem.references[i]);
    return j;
}

CemOutcome optimize(const SamplingSpace &space, const PlanningProblem &problem, const CemConfig &cfg) {
    cfg.validate();
    space.validate();
    check_problem(problem);

    Eigen::VectorXd mu0;
    Eigen::MatrixXd sigma0;
    if (space.mode == SamplingSpace::Mode::line) {
        mu0 = Eigen::VectorXd::Constant(1, cfg.mu0_line_m);
        sigma0 = Eigen::MatrixXd::Constant(1, 1, cfg.sigma0_line_m2);
    } else {
        Vec2 c = cfg.mu0_plane.value_or(Vec2{0.0, 0.0});
        if (!cfg.mu0_plane) {
            for (const auto &o : problem.objects) c += o.position;
            c = (1.0 / static_cast<double>(problem.objects.size())) * c;
        }
        mu0 = Eigen::Vector2d(c.x, c.y);
        sigma0 = cfg.sigma0_plane_m2;
    }

    const CemSettings st{cfg.n, cfg.n_elite, cfg.i_max, cfg.sigma_star_m2, cfg.variance_floor_m2, cfg.seed};
    const CemResult r = cem_minimize(
        [&](const Eigen::VectorXd &x) { return stagnation_cost(space.to_point(x), problem, cfg); }, mu0, sigma0,
        st);

    CemOutcome out;
    out.iterations_used = r.iterations;
    out.converged = r.converged;
    out.s_star = space.to_point(r.mean);
    out.best_cost = stagnation_cost(out.s_star, problem, cfg);
    if (out.best_cost >= cfg.penalty && r.best_sample_cost < out.best_cost) {
        out.s_star = space.to_point(r.best_sample);
        out.best_cost = r.best_sample_cost;
        out.used_best_sample = true;
    }
    out.feasible = out.best_cost < cfg.penalty;
    if (!out.feasible) out.converged = false;

    const FieldGeometry &g = problem.field->geometry();
    if (norm(out.s_star) <= g.max_stagnation_radius()) {
        out.orientation = orientation_for_stagnation(out.s_star, g);
        if (out.feasible) out.predicted = *predict_end_states(out.s_star, problem, cfg);
    } else {
        // Unreachable: aim at the boundary along the same bearing.
        const double rmax = g.max_stagnation_radius();
        out.orientation = orientation_for_stagnation(((1.0 - 1e-9) * rmax / norm(out.s_star)) * out.s_star, g);
    }

    for (const auto &it : r.history) {
        CemIteration h = it;
        h.samples.resize(2, it.samples.cols());
        for (Eigen::Index i = 0; i < it.samples.cols(); ++i) {
            const Vec2 p = space.to_point(it.samples.col(i));
            h.samples(0, i) = p.x;
            h.samples(1, i) = p.y;
        }
        out.history.push_back(std::move(h));
    }
    return out;
}

} // namespace airflow

#include "airflow/field_fit.hpp"

#include "airflow/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace airflow {

std::string to_string(GridSource s) {
    switch (s) {
    case GridSource::measurement: return "measurement";
    case GridSource::cfd: return "cfd";
    case GridSource::fused: return "fused";
    case GridSource::synthetic: return "synthetic";
    }
    return "synthetic";
}

GridSource grid_source_from_string(const std::string &s) {
    if (s == "measurement") return GridSource::measurement;
    if (s == "cfd") return GridSource::cfd;
    if (s == "fused") return GridSource::fused;
    if (s == "synthetic") return GridSource::synthetic;
    throw InvalidArgument("unknown grid source '" + s + "'");
}

void VelocityGrid::validate() const {
    std::set<std::pair<double, double>> seen;
    for (const auto &p : points) {
        if (!(p.speed >= 0.0)) throw InvalidArgument("velocity grid: negative or NaN speed");
        if (!seen.emplace(p.position.x, p.position.y).second)
            throw InvalidArgument("velocity grid: duplicate point (" + std::to_string(p.position.x) +
                                  ", " + std::to_string(p.position.y) + ")");
    }
}

VelocityGrid fuse_grids(const VelocityGrid &meas, const VelocityGrid &cfd, const Vec2 &s,
                        double fusion_scale_m) {
    if (!(fusion_scale_m > 0.0)) throw InvalidArgument("fuse: fusion scale must be > 0");
    if (meas.tilt_deg != cfd.tilt_deg || meas.pan_deg != cfd.pan_deg)
        throw InvalidArgument("fuse: grids recorded at different nozzle orientations");
    if (meas.points.size() != cfd.points.size())
        throw InvalidArgument("fuse: grids have different point counts");
    VelocityGrid out{meas.tilt_deg, meas.pan_deg, GridSource::fused, {}};
    out.points.reserve(meas.points.size());
    for (std::size_t i = 0; i < meas.points.size(); ++i) {
        const auto &m = meas.points[i];
        const auto &c = cfd.points[i];
        if (distance(m.position, c.position) > 1e-9)
            throw InvalidArgument("fuse: point " + std::to_string(i) + " is not co-registered");
        const double w = std::exp(-distance(m.position, s) / fusion_scale_m);
        out.points.push_back({m.position, w * c.speed + (1.0 - w) * m.speed});
    }
    return out;
}

namespace {

struct Params {
    double u1, u2, u3; // b1 = e^u1, b2 = -e^u2, b3 = b2 - e^u3
};

RadialProfile to_profile(const Params &p) {
    const double b2 = -std::exp(p.u2);
    return {std::exp(p.u1), b2, b2 - std::exp(p.u3)};
}

Params from_profile(const RadialProfile &b) {
    return {std::log(b.b1), std::log(-b.b2), std::log(b.b2 - b.b3)};
}

double weighted_cost(const std::vector<RadialSample> &s, const RadialProfile &b) {
    double cost = 0.0;
    for (const auto &x : s) {
        const double r = b.b1 * (std::exp(b.b2 * x.r) - std::exp(b.b3 * x.r)) - x.speed;
        cost += x.weight * r * r;
    }
    return cost;
}

struct LmResult {
    Params params;
    double cost;
    int iterations;
    bool converged;
};

LmResult levenberg_marquardt(const std::vector<RadialSample> &s, Params p,
                             const ProfileFitOptions &opt) {
    double cost = weighted_cost(s, to_profile(p));
    double damping = 1e-3;
    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        const RadialProfile b = to_profile(p);
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (const auto &x : s) {
            const double e2 = std::exp(b.b2 * x.r);
            const double e3 = std::exp(b.b3 * x.r);
            const double res = b.b1 * (e2 - e3) - x.speed;
            const double d_b2 = b.b1 * x.r * e2;
            const double d_b3 = -b.b1 * x.r * e3;
            const Eigen::Vector3d j(b.b1 * (e2 - e3), (d_b2 + d_b3) * b.b2, d_b3 * (b.b3 - b.b2));
            jtj += x.weight * j * j.transpose();
            jtr += x.weight * res * j;
        }
        bool accepted = false;
        Eigen::Vector3d step = Eigen::Vector3d::Zero();
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Eigen::Matrix3d a = jtj;
            for (int k = 0; k < 3; ++k) a(k, k) += damping * std::max(jtj(k, k), 1e-12);
            step = a.ldlt().solve(-jtr);
            const Params trial{p.u1 + step(0), p.u2 + step(1), p.u3 + step(2)};
            const double trial_cost = weighted_cost(s, to_profile(trial));
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                p = trial;
                cost = trial_cost;
                damping = std::max(damping / 3.0, 1e-12);
                accepted = true;
            } else {
                damping *= 4.0;
            }
        }
        const double scale = Eigen::Vector3d(p.u1, p.u2, p.u3).norm() + 1e-8;
        if (!accepted || step.norm() / scale < opt.step_tolerance) {
            converged = accepted || cost == 0.0 || step.norm() / scale < opt.step_tolerance;
            ++it;
            break;
        }
    }
    return {p, cost, it, converged};
}

RadialProfile grid_start(const std::vector<RadialSample> &s) {
    constexpr int kDecaySteps = 48;
    constexpr int kRatioSteps = 40;
    RadialProfile best{1.0, -1.0, -5.0};
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kDecaySteps; ++i) {
        const double b2 = -0.05 * std::pow(400.0, i / double(kDecaySteps - 1)); // -0.05 .. -20
        for (int j = 0; j < kRatioSteps; ++j) {
            const double b3 = b2 * 1.05 * std::pow(100.0, j / double(kRatioSteps - 1)); // ratio 1.05 .. 105
            double num = 0.0, den = 0.0;
            for (const auto &x : s) {
                const double f = std::exp(b2 * x.r) - std::exp(b3 * x.r);
                num += x.weight * f * x.speed;
                den += x.weight * f * f;
            }
            if (!(den > 0.0) || !(num > 0.0)) continue;
            const RadialProfile trial{num / den, b2, b3};
            const double cost = weighted_cost(s, trial);
            if (cost < best_cost) {
                best_cost = cost;
                best = trial;
            }
        }
    }
    return best;
}

} // namespace

RadialProfile fit_radial_profile(const std::vector<RadialSample> &samples,
                                 const ProfileFitOptions &opt, BinFitDiagnostics *diag) {
    double peak_speed = 0.0;
    double peak_r = 0.0;
    double weight_sum = 0.0;
    for (const auto &x : samples) {
        weight_sum += x.weight;
        if (x.speed > peak_speed) {
            peak_speed = x.speed;
            peak_r = x.r;
        }
    }
    if (!(peak_speed > 0.0) || !(peak_r > 0.0))
        throw InvalidArgument("radial fit: no flow peak to fit");

    // Starts: b1 = peak speed, b2 = -1/r_peak, b3 = 5 b2; plus the best point of
    // a log grid over (b2, b3/b2) with b1 solved in closed form, since the
    // e^{b3 r} term can vanish on every sample and stall a single start.
    std::vector<RadialProfile> starts{{peak_speed, -1.0 / peak_r, -5.0 / peak_r}};
    starts.push_back(grid_start(samples));
    LmResult best{{}, std::numeric_limits<double>::infinity(), 0, false};
    for (const auto &start : starts) {
        const LmResult r = levenberg_marquardt(samples, from_profile(start), opt);
        if (r.cost < best.cost) best = r;
    }
    const RadialProfile fitted = to_profile(best.params);
    if (!fitted.valid()) throw InvalidArgument("radial fit: optimizer left the admissible region");
    if (diag) {
        diag->samples = samples.size();
        diag->rms_residual = weight_sum > 0.0 ? std::sqrt(best.cost / weight_sum) : 0.0;
        diag->iterations = best.iterations;
        diag->converged = best.converged;
    }
    return fitted;
}

ProfileFit fit_profiles(const VelocityGrid &grid, const Vec2 &s, const ProfileFitOptions &opt) {
    grid.validate();
    struct Polar {
        double alpha_rel;
        double r;
        double speed;
    };
    std::vector<Polar> polar;
    polar.reserve(grid.points.size());
    bool any_flow = false;
    for (const auto &p : grid.points) {
        const Vec2 d = p.position - s;
        const double r = norm(d);
        if (r < 1e-9) continue;
        any_flow = any_flow || p.speed > 0.0;
        polar.push_back({wrap_deg(rad_to_deg(std::atan2(d.y, d.x)) - grid.pan_deg), r, p.speed});
    }
    if (!any_flow) throw InvalidArgument("fit_profiles: grid has no nonzero speeds (no peak to fit)");

    ProfileFit out;
    std::vector<RadialSample> samples;
    for (std::size_t bin = 0; bin < kAlphaBins; ++bin) {
        const double center = alpha_bin_center(bin);
        bool done = false;
        for (double half = opt.pool_halfwidth_deg; half <= opt.max_pool_halfwidth_deg + 1e-9;
             half += opt.pool_step_deg) {
            samples.clear();
            std::set<double> radii;
            bool has_flow = false;
            for (const auto &p : polar) {
                const double off = std::abs(wrap_deg(p.alpha_rel - center));
                if (off > half) continue;
                // Triangular kernel of half-width (half + 1 deg): edge samples keep a small weight.
                samples.push_back({p.r, p.speed, 1.0 - off / (half + 1.0)});
                radii.insert(std::round(p.r * 1e9));
                has_flow = has_flow || p.speed > 0.0;
            }
            if (radii.size() < opt.min_samples || !has_flow) continue;
            BinFitDiagnostics diag;
            out.profiles[bin] = fit_radial_profile(samples, opt, &diag);
            diag.pool_halfwidth_deg = half;
            out.diagnostics[bin] = diag;
            done = true;
            break;
        }
        if (!done)
            throw InvalidArgument("fit_profiles: alpha bin " + std::to_string(center) +
                                  " deg is underdetermined (fewer than " +
                                  std::to_string(opt.min_samples) + " usable samples within +/-" +
                                  std::to_string(opt.max_pool_halfwidth_deg) + " deg)");
    }
    return out;
}

} // namespace airflow

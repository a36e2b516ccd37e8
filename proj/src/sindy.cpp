#include "airflow/sindy.hpp"

#include "airflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace airflow {

namespace {

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

double rms(const Eigen::VectorXd &x) {
    return x.size() == 0 ? 0.0 : std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

Eigen::VectorXd weighted_lstsq(const Eigen::MatrixXd &a, const Eigen::VectorXd &y,
                               const Eigen::VectorXd &w) {
    const Eigen::VectorXd sw = w.cwiseSqrt();
    return (sw.asDiagonal() * a).colPivHouseholderQr().solve(sw.cwiseProduct(y));
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd &a, const std::vector<int> &cols) {
    Eigen::MatrixXd out(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = a.col(cols[j]);
    return out;
}

Eigen::Index rank_of(const Eigen::MatrixXd &a) {
    if (a.cols() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    return qr.rank();
}

// Keeps columns in order, dropping each one that does not raise the rank of
// those kept before it.
std::vector<int> drop_colinear(const Eigen::MatrixXd &a, const std::vector<int> &active,
                               const std::vector<std::string> *names,
                               std::vector<std::string> *warnings) {
    std::vector<int> kept;
    for (int j : active) {
        std::vector<int> trial = kept;
        trial.push_back(j);
        if (rank_of(select_columns(a, trial)) == static_cast<Eigen::Index>(trial.size())) {
            kept = std::move(trial);
        } else if (warnings) {
            std::ostringstream msg;
            msg << "rank-deficient library: dropped colinear column ";
            if (names) msg << (*names)[static_cast<std::size_t>(j)];
            else msg << j;
            warnings->push_back(msg.str());
        }
    }
    return kept;
}

std::string term_name(int pv, int pa) {
    auto factor = [](const char *sym, int p) {
        std::string s = sym;
        if (p > 1) s += "^" + std::to_string(p);
        return s;
    };
    if (pv == 0 && pa == 0) return "1";
    if (pa == 0) return factor("v", pv);
    if (pv == 0) return factor("a", pa);
    return factor("v", pv) + "*" + factor("a", pa);
}

Eigen::VectorXd column_scales(const Eigen::MatrixXd &a) {
    Eigen::VectorXd s(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double r = rms(a.col(j));
        s(j) = r > 0.0 ? r : 1.0;
    }
    return s;
}

double threshold_measure(double coef, double scale, ThresholdMode mode) {
    return std::abs(mode == ThresholdMode::normalized ? coef * scale : coef);
}

} // namespace

void SnapshotData::validate() const {
    if (v_now.size() != v_next.size() || v_now.size() != v_air.size())
        throw InvalidArgument("snapshot data: v_now, v_next and v_air differ in length");
    if (v_now.size() < 10)
        throw InvalidArgument("snapshot data: need at least 10 rows, got " + std::to_string(v_now.size()));
    if (!(dt > 0.0)) throw InvalidArgument("snapshot data: dt must be positive");
    for (std::size_t i = 0; i < v_now.size(); ++i)
        if (!(v_now[i] >= 0.0) || !(v_next[i] >= 0.0) || !(v_air[i] >= 0.0))
            throw InvalidArgument("snapshot data: negative or non-finite speed in row " + std::to_string(i));
}

void SnapshotData::append(const SnapshotData &other) {
    v_now.insert(v_now.end(), other.v_now.begin(), other.v_now.end());
    v_next.insert(v_next.end(), other.v_next.begin(), other.v_next.end());
    v_air.insert(v_air.end(), other.v_air.begin(), other.v_air.end());
}

PreprocessResult preprocess(const std::vector<OrientedTrajectory> &trajectories,
                            const FieldModel &field, const PreprocessOptions &opt) {
    constexpr double time_tol = 1e-6;
    PreprocessResult out;
    bool have_dt = false;
    for (std::size_t t = 0; t < trajectories.size(); ++t) {
        const auto &samples = trajectories[t].trajectory.samples;
        const std::string tag = "trajectory " + std::to_string(t);
        if (samples.size() < 3) {
            out.warnings.push_back(tag + ": fewer than 3 samples, skipped");
            continue;
        }
        const double dt = samples[1].t - samples[0].t;
        if (!(dt > 0.0)) throw InvalidArgument(tag + ": sample times not increasing");
        for (std::size_t k = 1; k + 1 < samples.size(); ++k)
            if (std::abs(samples[k + 1].t - samples[k].t - dt) > time_tol)
                throw InvalidArgument(tag + ": non-uniform sampling at sample " + std::to_string(k + 1));
        if (!have_dt) {
            out.data.dt = dt;
            have_dt = true;
        } else if (std::abs(dt - out.data.dt) > time_tol) {
            throw InvalidArgument(tag + ": sample interval differs from earlier trajectories");
        }

        const FieldSnapshot snap = field.snapshot(trajectories[t].orientation);
        const std::size_t n = samples.size();
        std::vector<double> v(n, 0.0);
        for (std::size_t k = 1; k + 1 < n; ++k)
            v[k] = distance(samples[k + 1].position, samples[k - 1].position) / (2.0 * dt);

        std::size_t rows = 0;
        for (std::size_t k = 1; k + 2 < n; ++k) {
            if (v[k] < opt.stationary_threshold && v[k + 1] < opt.stationary_threshold) continue;
            out.data.v_now.push_back(v[k]);
            out.data.v_next.push_back(v[k + 1]);
            out.data.v_air.push_back(snap.air_speed(samples[k].position));
            ++rows;
        }
        if (rows == 0) out.warnings.push_back(tag + ": stationary throughout, no rows kept");
    }
    return out;
}

Library library_terms(const LibrarySpec &spec) {
    if (spec.max_degree < 1) throw InvalidArgument("library: max_degree must be >= 1");
    Library lib;
    if (spec.include_constant) lib.powers.emplace_back(0, 0);
    for (int d = 1; d <= spec.max_degree; ++d)
        for (int i = d; i >= 0; --i) lib.powers.emplace_back(i, d - i);
    for (const auto &[pv, pa] : lib.powers) lib.names.push_back(term_name(pv, pa));
    return lib;
}

Library build_library(const SnapshotData &data, const LibrarySpec &spec) {
    Library lib = library_terms(spec);
    const auto k = static_cast<Eigen::Index>(data.size());
    lib.matrix.resize(k, static_cast<Eigen::Index>(lib.powers.size()));
    for (Eigen::Index r = 0; r < k; ++r) {
        const double v = data.v_now[static_cast<std::size_t>(r)];
        const double a = data.v_air[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < lib.powers.size(); ++j) {
            const auto [pv, pa] = lib.powers[j];
            lib.matrix(r, static_cast<Eigen::Index>(j)) = std::pow(v, pv) * std::pow(a, pa);
        }
    }
    return lib;
}

void SindyConfig::validate() const {
    if (!(lambda > 0.0)) throw InvalidArgument("sindy: lambda must be positive");
    if (n_bootstraps < 1) throw InvalidArgument("sindy: n_bootstraps must be >= 1");
    if (!(bootstrap_fraction > 0.0) || bootstrap_fraction > 1.0)
        throw InvalidArgument("sindy: bootstrap_fraction must be in (0, 1]");
    if (!(bisquare_c > 0.0)) throw InvalidArgument("sindy: bisquare_c must be positive");
    if (!(inclusion_threshold > 0.0) || inclusion_threshold > 1.0)
        throw InvalidArgument("sindy: inclusion_threshold must be in (0, 1]");
    if (max_irls_iter < 1) throw InvalidArgument("sindy: max_irls_iter must be >= 1");
}

Eigen::VectorXd bisquare_irls(const Eigen::MatrixXd &a, const Eigen::VectorXd &y, double c,
                              int max_iter, double weight_tol, Eigen::VectorXd *weights) {
    const Eigen::Index k = a.rows();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(k);
    Eigen::VectorXd x = weighted_lstsq(a, y, w);
    // Scale floor keeps noiseless data from collapsing the weights.
    const double floor = 1e-6 * rms(y);

    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd r = y - a * x;
        std::vector<double> res(r.data(), r.data() + k);
        const double med = median(res);
        for (double &e : res) e = std::abs(e - med);
        const double sigma = std::max(1.4826 * median(res), floor);
        if (!(sigma > 0.0)) break;

        Eigen::VectorXd w_new(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            const double u = r(i) / (c * sigma);
            w_new(i) = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
        }
        if ((w_new.array() > 0.0).count() <= a.cols()) break;
        const double change = (w_new - w).cwiseAbs().maxCoeff();
        w = w_new;
        x = weighted_lstsq(a, y, w);
        if (change < weight_tol) break;
    }
    if (weights) *weights = w;
    return x;
}

Eigen::VectorXd robust_sparse_fit(const Eigen::MatrixXd &library, const Eigen::VectorXd &target,
                                  const SindyConfig &cfg, std::vector<std::string> *warnings) {
    cfg.validate();
    const Eigen::Index m = library.cols();
    if (target.size() != library.rows())
        throw InvalidArgument("sparse fit: library and target differ in row count");
    if (library.rows() <= m)
        throw InvalidArgument("sparse fit: need more rows than library columns");

    const Eigen::VectorXd scale = column_scales(library);
    const Eigen::MatrixXd an = library * scale.cwiseInverse().asDiagonal();

    std::vector<int> active(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) active[static_cast<std::size_t>(j)] = static_cast<int>(j);

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
    for (Eigen::Index pass = 0; pass <= m && !active.empty(); ++pass) {
        active = drop_colinear(an, active, nullptr, warnings);
        const Eigen::VectorXd cn = bisquare_irls(select_columns(an, active), target, cfg.bisquare_c,
                                                 cfg.max_irls_iter, cfg.irls_weight_tol);
        coef.setZero();
        std::vector<int> survivors;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const int j = active[i];
            const double raw = cn(static_cast<Eigen::Index>(i)) / scale(j);
            if (threshold_measure(raw, scale(j), cfg.threshold_mode) >= cfg.lambda) {
                survivors.push_back(j);
                coef(j) = raw;
            }
        }
        if (survivors.size() == active.size()) return coef;
        active = std::move(survivors);
    }
    if (active.empty()) coef.setZero();
    return coef;
}

double SindyResult::continuous(const std::string &term) const {
    for (std::size_t j = 0; j < term_names.size(); ++j)
        if (term_names[j] == term) return xi_continuous(static_cast<Eigen::Index>(j));
    return 0.0;
}

DynamicsModel SindyResult::to_dynamics(std::string label) const {
    for (std::size_t j = 0; j < term_names.size(); ++j) {
        const auto [pv, pa] = powers[j];
        if (pv + pa > 1 && xi_discrete(static_cast<Eigen::Index>(j)) != 0.0)
            throw InvalidArgument("identified model has nonlinear term " + term_names[j]);
    }
    DynamicsModel m{continuous("v"), continuous("a"), continuous("1"), std::move(label)};
    m.validate();
    return m;
}

std::vector<std::size_t> bootstrap_rows(std::size_t rows, const SindyConfig &cfg, int b) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.bootstrap_fraction * static_cast<double>(rows))));
    std::vector<std::size_t> out(n);
    for (auto &i : out) i = pick(rng);
    return out;
}

SindyResult ensemble_fit(const SnapshotData &data, const LibrarySpec &spec, const SindyConfig &cfg) {
    if (data.empty()) throw InvalidArgument("ensemble fit: no data rows");
    cfg.validate();
    std::vector<std::vector<std::size_t>> resamples;
    for (int b = 0; b < cfg.n_bootstraps; ++b) resamples.push_back(bootstrap_rows(data.size(), cfg, b));
    return ensemble_fit(data, spec, cfg, resamples);
}

SindyResult ensemble_fit(const SnapshotData &data, const LibrarySpec &spec, const SindyConfig &cfg,
                         const std::vector<std::vector<std::size_t>> &resamples) {
    if (data.empty()) throw InvalidArgument("ensemble fit: no data rows");
    data.validate();
    cfg.validate();
    if (resamples.empty()) throw InvalidArgument("ensemble fit: no resamples");

    const Library lib = build_library(data, spec);
    const Eigen::Map<const Eigen::VectorXd> y(data.v_next.data(), static_cast<Eigen::Index>(data.size()));
    const Eigen::Index m = lib.matrix.cols();
    const auto nb = static_cast<Eigen::Index>(resamples.size());

    SindyResult res;
    res.term_names = lib.names;
    res.powers = lib.powers;
    res.dt = data.dt;
    res.rows = data.size();
    res.per_bootstrap.resize(m, nb);

    for (Eigen::Index b = 0; b < nb; ++b) {
        const auto &rows = resamples[static_cast<std::size_t>(b)];
        Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), m);
        Eigen::VectorXd t(a.rows());
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const std::size_t r = rows[static_cast<std::size_t>(i)];
            if (r >= data.size()) throw InvalidArgument("ensemble fit: resample row out of range");
            a.row(i) = lib.matrix.row(static_cast<Eigen::Index>(r));
            t(i) = y(static_cast<Eigen::Index>(r));
        }
        std::vector<std::string> warn;
        res.per_bootstrap.col(b) = robust_sparse_fit(a, t, cfg, &warn);
        for (auto &w : warn) res.warnings.push_back("bootstrap " + std::to_string(b) + ": " + w);
    }

    const Eigen::VectorXd scale = column_scales(lib.matrix);
    res.xi_discrete = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        std::vector<double> nonzero;
        for (Eigen::Index b = 0; b < nb; ++b)
            if (res.per_bootstrap(j, b) != 0.0) nonzero.push_back(res.per_bootstrap(j, b));
        if (static_cast<double>(nonzero.size()) < cfg.inclusion_threshold * static_cast<double>(nb)) continue;
        const double med = median(nonzero);
        if (threshold_measure(med, scale(j), cfg.threshold_mode) < cfg.lambda) {
            res.warnings.push_back("term " + lib.names[static_cast<std::size_t>(j)] +
                                   " fell below lambda after aggregation");
            continue;
        }
        res.xi_discrete(j) = med;
    }

    res.xi_continuous = res.xi_discrete / data.dt;
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto [pv, pa] = lib.powers[static_cast<std::size_t>(j)];
        if (pv == 1 && pa == 0) res.xi_continuous(j) = (res.xi_discrete(j) - 1.0) / data.dt;
        if (res.xi_discrete(j) != 0.0) res.active_terms.push_back(lib.names[static_cast<std::size_t>(j)]);
    }

    const Eigen::VectorXd pred = lib.matrix * res.xi_discrete;
    const double ss_res = (y - pred).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    res.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return res;
}

} // namespace airflow

#include "airflow/io.hpp"

#include "airflow/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace airflow {

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto pos = s.find(sep);
        out.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) return out;
        s.remove_prefix(pos + 1);
    }
}

// Line-oriented CSV: optional `#` metadata lines, a fixed header, data rows.
class CsvReader {
public:
    CsvReader(std::istream &is, std::string name, std::string_view header)
        : is_(is), name_(std::move(name)) {
        std::string raw;
        while (std::getline(is_, raw)) {
            ++line_;
            const std::string_view s = trim(raw);
            if (s.empty()) continue;
            if (s.front() == '#') {
                meta_.emplace_back(trim(s.substr(1)));
                continue;
            }
            if (s != header) fail("expected header '" + std::string(header) + "'");
            width_ = split(header, ',').size();
            return;
        }
        fail("missing header '" + std::string(header) + "'");
    }

    bool next() {
        while (std::getline(is_, row_)) {
            ++line_;
            const std::string_view s = trim(row_);
            if (s.empty() || s.front() == '#') continue;
            fields_ = split(s, ',');
            if (fields_.size() != width_)
                fail("expected " + std::to_string(width_) + " fields, got " + std::to_string(fields_.size()));
            return true;
        }
        return false;
    }

    double number(std::size_t i) const {
        const std::string_view f = fields_[i];
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
            fail("not a finite number: '" + std::string(f) + "'");
        return v;
    }

    long integer(std::size_t i) const {
        const std::string_view f = fields_[i];
        long v = 0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size()) fail("not an integer: '" + std::string(f) + "'");
        return v;
    }

    std::string text(std::size_t i) const { return std::string(fields_[i]); }

    /// `key=value` pairs from the metadata lines.
    std::map<std::string, std::string> metadata() const {
        std::map<std::string, std::string> kv;
        for (const auto &m : meta_)
            for (auto tok : split(m, ' ')) {
                if (tok.empty()) continue;
                const auto eq = tok.find('=');
                if (eq == std::string_view::npos) continue;
                kv[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
            }
        return kv;
    }

    double meta_number(const std::map<std::string, std::string> &kv, const std::string &key) const {
        const auto it = kv.find(key);
        if (it == kv.end()) throw InputError(name_, 1, "missing metadata '" + key + "'");
        double v = 0.0;
        const auto &s = it->second;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            throw InputError(name_, 1, "metadata '" + key + "' is not a number");
        return v;
    }

    [[noreturn]] void fail(const std::string &what) const { throw InputError(name_, line_, what); }
    std::size_t line() const { return line_; }
    const std::string &name() const { return name_; }

private:
    std::istream &is_;
    std::string name_;
    std::size_t line_ = 0;
    std::size_t width_ = 0;
    std::string row_;
    std::vector<std::string_view> fields_;
    std::vector<std::string> meta_;
};

std::ifstream open_in(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) throw InputError(path.string(), 0, "cannot open file");
    return f;
}

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream f(path);
    if (!f) throw InputError(path.string(), 0, "cannot write file");
    return f;
}

} // namespace

void write_grid(std::ostream &os, const VelocityGrid &grid) {
    os << "# tilt_deg=" << num(grid.tilt_deg) << " pan_deg=" << num(grid.pan_deg)
       << " source=" << to_string(grid.source) << "\nx_m,y_m,speed_mps\n";
    for (const auto &p : grid.points) os << num(p.position.x) << ',' << num(p.position.y) << ',' << num(p.speed) << '\n';
}

VelocityGrid read_grid(std::istream &is, const std::string &name) {
    CsvReader r(is, name, "x_m,y_m,speed_mps");
    const auto kv = r.metadata();
    VelocityGrid g;
    g.tilt_deg = r.meta_number(kv, "tilt_deg");
    if (kv.count("pan_deg")) g.pan_deg = r.meta_number(kv, "pan_deg");
    if (const auto it = kv.find("source"); it != kv.end()) {
        try {
            g.source = grid_source_from_string(it->second);
        } catch (const InvalidArgument &e) {
            throw InputError(name, 1, e.what());
        }
    }
    std::map<std::pair<double, double>, std::size_t> seen;
    while (r.next()) {
        const GridPoint p{{r.number(0), r.number(1)}, r.number(2)};
        if (p.speed < 0.0) r.fail("negative speed");
        if (!seen.emplace(std::pair{p.position.x, p.position.y}, r.line()).second) r.fail("duplicate grid point");
        g.points.push_back(p);
    }
    if (g.points.empty()) r.fail("no grid points");
    return g;
}

void write_field_model(std::ostream &os, const FieldModel &model) {
    const FieldGeometry &g = model.geometry();
    os << "# h=" << num(g.h) << " a1=" << num(g.a1) << " a2=" << num(g.a2) << "\ntilt_deg,alpha_deg,b1,b2,b3\n";
    for (std::size_t i = 0; i < model.tilt_nodes().size(); ++i)
        for (std::size_t bin = 0; bin < kAlphaBins; ++bin) {
            const RadialProfile &p = model.stored(i, bin);
            os << num(model.tilt_nodes()[i]) << ',' << num(alpha_bin_center(bin)) << ',' << num(p.b1) << ','
               << num(p.b2) << ',' << num(p.b3) << '\n';
        }
}

FieldModel read_field_model(std::istream &is, const std::string &name) {
    CsvReader r(is, name, "tilt_deg,alpha_deg,b1,b2,b3");
    const auto kv = r.metadata();
    FieldGeometry geom;
    geom.h = r.meta_number(kv, "h");
    geom.a1 = r.meta_number(kv, "a1");
    geom.a2 = r.meta_number(kv, "a2");

    std::vector<double> tilts;
    std::vector<AlphaTable> tables;
    std::vector<std::vector<bool>> filled;
    while (r.next()) {
        const double tilt = r.number(0), alpha = r.number(1);
        if (tilts.empty() || tilts.back() != tilt) {
            if (std::find(tilts.begin(), tilts.end(), tilt) != tilts.end())
                r.fail("rows of tilt node " + num(tilt) + " are not contiguous");
            if (!tilts.empty() && tilt < tilts.back()) r.fail("tilt nodes must be ascending");
            tilts.push_back(tilt);
            tables.emplace_back();
            filled.emplace_back(kAlphaBins, false);
        }
        if (alpha < -180.0 || alpha >= 180.0) r.fail("alpha_deg outside [-180, 180)");
        const std::size_t bin = nearest_alpha_bin(alpha);
        if (std::abs(alpha_bin_center(bin) - alpha) > 1e-9) r.fail("alpha_deg is not a bin centre");
        if (filled.back()[bin]) r.fail("duplicate alpha bin " + num(alpha));
        const RadialProfile p{r.number(2), r.number(3), r.number(4)};
        if (!p.valid()) r.fail("profile needs b1 > 0 and b3 < b2 < 0");
        tables.back()[bin] = p;
        filled.back()[bin] = true;
    }
    for (std::size_t i = 0; i < tilts.size(); ++i)
        if (std::count(filled[i].begin(), filled[i].end(), true) != static_cast<long>(kAlphaBins))
            throw InputError(name, r.line(), "tilt node " + num(tilts[i]) + " lacks some of the 360 alpha bins");
    try {
        return FieldModel(geom, std::move(tilts), std::move(tables));
    } catch (const InvalidArgument &e) {
        throw InputError(name, r.line(), e.what());
    }
}

void write_trajectories(std::ostream &os, const std::vector<Trajectory> &trajectories) {
    os << "object_id,t_s,x_m,y_m,speed_mps\n";
    for (std::size_t j = 0; j < trajectories.size(); ++j)
        for (const auto &s : trajectories[j].samples)
            os << j << ',' << num(s.t) << ',' << num(s.position.x) << ',' << num(s.position.y) << ',' << num(s.speed)
               << '\n';
}

std::vector<Trajectory> read_trajectories(std::istream &is, const std::string &name) {
    CsvReader r(is, name, "object_id,t_s,x_m,y_m,speed_mps");
    std::vector<long> ids;
    std::vector<Trajectory> out;
    while (r.next()) {
        const long id = r.integer(0);
        if (id < 0) r.fail("negative object_id");
        if (ids.empty() || ids.back() != id) {
            if (std::find(ids.begin(), ids.end(), id) != ids.end())
                r.fail("rows of object " + std::to_string(id) + " are not contiguous");
            ids.push_back(id);
            out.emplace_back();
        }
        const TrajectorySample s{r.number(1), {r.number(2), r.number(3)}, r.number(4)};
        if (s.speed < 0.0) r.fail("negative speed");
        if (!out.back().samples.empty() && !(s.t > out.back().samples.back().t)) r.fail("time must increase");
        out.back().samples.push_back(s);
    }
    if (out.empty()) r.fail("no trajectory rows");
    return out;
}

void write_sidecar(std::ostream &os, const std::vector<TrajectoryFileRef> &refs) {
    os << "trajectory_file,pan_deg,tilt_deg\n";
    for (const auto &f : refs)
        os << f.file << ',' << num(f.orientation.pan_deg) << ',' << num(f.orientation.tilt_deg) << '\n';
}

std::vector<TrajectoryFileRef> read_sidecar(std::istream &is, const std::string &name) {
    CsvReader r(is, name, "trajectory_file,pan_deg,tilt_deg");
    std::vector<TrajectoryFileRef> out;
    while (r.next()) {
        TrajectoryFileRef f{r.text(0), {r.number(1), r.number(2)}};
        if (f.file.empty()) r.fail("empty trajectory_file");
        try {
            validate(f.orientation);
        } catch (const std::exception &e) {
            r.fail(e.what());
        }
        out.push_back(std::move(f));
    }
    if (out.empty()) r.fail("no trajectory files listed");
    return out;
}

VelocityGrid load_grid(const std::filesystem::path &path) {
    auto f = open_in(path);
    return read_grid(f, path.string());
}

void save_grid(const std::filesystem::path &path, const VelocityGrid &grid) {
    auto f = open_out(path);
    write_grid(f, grid);
}

FieldModel load_field_model(const std::filesystem::path &path) {
    auto f = open_in(path);
    return read_field_model(f, path.string());
}

void save_field_model(const std::filesystem::path &path, const FieldModel &model) {
    auto f = open_out(path);
    write_field_model(f, model);
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path &path) {
    auto f = open_in(path);
    return read_trajectories(f, path.string());
}

void save_trajectories(const std::filesystem::path &path, const std::vector<Trajectory> &trajectories) {
    auto f = open_out(path);
    write_trajectories(f, trajectories);
}

std::vector<OrientedTrajectory> load_trajectory_set(const std::filesystem::path &sidecar) {
    auto f = open_in(sidecar);
    const auto refs = read_sidecar(f, sidecar.string());
    std::vector<OrientedTrajectory> out;
    for (const auto &ref : refs)
        for (auto &t : load_trajectories(sidecar.parent_path() / ref.file))
            out.push_back({std::move(t), ref.orientation});
    return out;
}

void write_sindy_report(std::ostream &os, const SindyResult &r) {
    auto list = [&](const char *key, auto &&value) {
        os << key << ": [";
        for (std::size_t i = 0; i < r.term_names.size(); ++i) os << (i ? ", " : "") << value(i);
        os << "]\n";
    };
    list("terms", [&](std::size_t i) { return r.term_names[i]; });
    list("xi_discrete", [&](std::size_t i) { return num(r.xi_discrete(static_cast<Eigen::Index>(i))); });
    list("xi_continuous", [&](std::size_t i) { return num(r.xi_continuous(static_cast<Eigen::Index>(i))); });
    os << "active_terms: [";
    for (std::size_t i = 0; i < r.active_terms.size(); ++i) os << (i ? ", " : "") << r.active_terms[i];
    os << "]\n"
       << "xi1_per_s: " << num(r.continuous("v")) << '\n'
       << "xi2_per_s: " << num(r.continuous("a")) << '\n'
       << "xi3_m_per_s2: " << num(r.continuous("1")) << '\n'
       << "r_squared: " << num(r.r_squared) << '\n'
       << "rows: " << r.rows << '\n'
       << "dt_s: " << num(r.dt) << '\n'
       << "bootstraps: " << r.per_bootstrap.cols() << '\n';
    for (const auto &w : r.warnings) os << "warning: " << w << '\n';
}

void write_trajectory_svg(std::ostream &os, const std::vector<Trajectory> &trajectories, const Vec2 &stagnation) {
    Vec2 lo = stagnation, hi = stagnation;
    for (const auto &t : trajectories)
        for (const auto &s : t.samples) {
            lo = {std::min(lo.x, s.position.x), std::min(lo.y, s.position.y)};
            hi = {std::max(hi.x, s.position.x), std::max(hi.y, s.position.y)};
        }
    constexpr double px = 200.0, margin = 0.1;
    lo = lo - Vec2{margin, margin};
    hi = hi + Vec2{margin, margin};
    auto X = [&](double x) { return num(std::round((x - lo.x) * px * 100) / 100); };
    auto Y = [&](double y) { return num(std::round((hi.y - y) * px * 100) / 100); };
    const std::string w = X(hi.x), h = Y(lo.y);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
       << w << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t j = 0; j < trajectories.size(); ++j) {
        os << "<polyline fill=\"none\" stroke=\"" << colors[j % 6] << "\" stroke-width=\"1.5\" points=\"";
        for (const auto &s : trajectories[j].samples) os << X(s.position.x) << ',' << Y(s.position.y) << ' ';
        os << "\"/>\n";
    }
    os << "<circle cx=\"" << X(stagnation.x) << "\" cy=\"" << Y(stagnation.y)
       << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
}

} // namespace airflow

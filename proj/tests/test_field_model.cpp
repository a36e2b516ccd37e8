#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "airflow/errors.hpp"
#include "airflow/field_model.hpp"
#include "airflow/interp.hpp"
#include "airflow/synthetic.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace airflow;

TEST_CASE("radial speed") {
    const RadialProfile p{2.0, -1.0, -5.0};
    CHECK(radial_speed(p, 0.0) == 0.0);
    // 2 (e^-1 - e^-5)
    CHECK(radial_speed(p, 1.0) == doctest::Approx(0.7222829883447137).epsilon(1e-14));

    // ln(b2/b3)/(b3-b2) = ln(5)/4
    CHECK(p.peak_radius() == doctest::Approx(0.40235947810852507).epsilon(1e-14));
    double best_r = 0.0, best_v = -1.0;
    for (int i = 0; i <= 500000; ++i) {
        const double r = i * 1e-5;
        if (const double v = radial_speed(p, r); v > best_v) {
            best_v = v;
            best_r = r;
        }
    }
    CHECK(best_r == doctest::Approx(0.40235947810852507).epsilon(1e-4));
}

TEST_CASE("profile invariants") {
    CHECK(RadialProfile{1.0, -1.0, -2.0}.valid());
    CHECK_FALSE(RadialProfile{0.0, -1.0, -2.0}.valid());
    CHECK_FALSE(RadialProfile{1.0, -2.0, -1.0}.valid());
    CHECK_FALSE(RadialProfile{1.0, 0.0, -1.0}.valid());
    CHECK_THROWS_AS(RadialProfile({1.0, -2.0, -1.0}).validate(), InvalidArgument);
}

TEST_CASE("makima") {
    const std::vector<double> x{0.0, 22.5, 45.0};
    SUBCASE("hand-computed three-node value") {
        // secants 2/45 and 2/15, interior slope is their harmonic mean 1/15
        const Makima m(x, std::vector<double>{1.0, 2.0, 5.0});
        CHECK(m.derivatives()[1] == doctest::Approx(1.0 / 15.0).epsilon(1e-14));
        CHECK(m(11.25) == doctest::Approx(1.4375).epsilon(1e-14));
        CHECK(m(22.5) == 2.0);
        CHECK(m(-3.0) == 1.0);
        CHECK(m(50.0) == 5.0);
    }
    SUBCASE("linear data is reproduced") {
        const Makima m(x, std::vector<double>{-1.0, -2.0, -3.0});
        for (double t = 0.0; t <= 45.0; t += 0.7) CHECK(m(t) == doctest::Approx(-1.0 - t / 22.5));
    }
    SUBCASE("two nodes fall back to linear") {
        const Makima m(std::vector<double>{0.0, 10.0}, std::vector<double>{0.0, 4.0});
        CHECK(m(2.5) == doctest::Approx(1.0));
    }
    SUBCASE("bad nodes") {
        CHECK_THROWS_AS(Makima(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 2.0}), InvalidArgument);
    }
}

namespace {

FieldModel small_model() {
    // Two nodes with alpha-dependent b1 only in the first table.
    std::vector<AlphaTable> tables(2);
    for (std::size_t bin = 0; bin < kAlphaBins; ++bin) {
        tables[0][bin] = {3.0 + 0.01 * static_cast<double>(bin % 7), -1.2, -9.0 - 0.001 * bin};
        tables[1][bin] = {4.0, -1.0, -8.0};
    }
    return FieldModel(FieldGeometry{}, {0.0, 30.0}, tables);
}

} // namespace

TEST_CASE("air velocity") {
    const FieldModel model = reference_field().to_model();

    SUBCASE("zero at the stagnation point") {
        const NozzleOrientation o{40.0, 22.5};
        const Vec2 s = stagnation_point(o, model.geometry());
        const auto v = air_velocity(model, o, s);
        CHECK(v.velocity == Vec2{0.0, 0.0});
    }

    SUBCASE("node identity") {
        const FieldModel m = small_model();
        const NozzleOrientation o{0.0, 0.0}; // s = origin, alpha_rel = alpha
        for (std::size_t bin : {0u, 17u, 180u, 359u}) {
            const double a = alpha_bin_center(bin);
            const Vec2 p = 0.37 * unit_from_angle(deg_to_rad(a));
            const auto got = air_velocity(m, o, p);
            const double expect = radial_speed(m.stored(0, bin), 0.37);
            CHECK(norm(got.velocity) == doctest::Approx(expect).epsilon(1e-12));
            CHECK(got.velocity.x == doctest::Approx(expect * std::cos(deg_to_rad(a))).epsilon(1e-12));
            CHECK_FALSE(got.extrapolated);
        }
    }

    SUBCASE("midpoint between bins interpolates coefficients") {
        const FieldModel m = small_model();
        const auto snap = m.snapshot({0.0, 0.0});
        const RadialProfile lo = m.stored(0, 10), hi = m.stored(0, 11);
        const RadialProfile mid{0.5 * (lo.b1 + hi.b1), 0.5 * (lo.b2 + hi.b2), 0.5 * (lo.b3 + hi.b3)};
        const double a = 0.5 * (alpha_bin_center(10) + alpha_bin_center(11));
        const Vec2 p = 0.5 * unit_from_angle(deg_to_rad(a));
        CHECK(snap.air_speed(p) == doctest::Approx(radial_speed(mid, 0.5)).epsilon(1e-12));
        // periodic seam between +179 and -180
        const RadialProfile w0 = m.stored(0, 359), w1 = m.stored(0, 0);
        const RadialProfile seam{0.5 * (w0.b1 + w1.b1), 0.5 * (w0.b2 + w1.b2), 0.5 * (w0.b3 + w1.b3)};
        const Vec2 q = 0.5 * unit_from_angle(deg_to_rad(179.5));
        CHECK(snap.air_speed(q) == doctest::Approx(radial_speed(seam, 0.5)).epsilon(1e-12));
    }

    SUBCASE("tilt outside nodes is clamped and flagged") {
        const NozzleOrientation o{90.0, 50.0};
        const auto v = air_velocity(model, o, {0.3, 0.2});
        CHECK(v.extrapolated);
        const auto snap = model.snapshot(o);
        CHECK(snap.effective_tilt_deg() == 45.0);
        CHECK_FALSE(air_velocity(model, {90.0, 30.0}, {0.3, 0.2}).extrapolated);
    }

    SUBCASE("flow points away from the stagnation point") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> pan(-180.0, 180.0), tilt(0.0, 45.0), xy(-1.5, 1.5);
        for (int i = 0; i < 2000; ++i) {
            const NozzleOrientation o{pan(rng), tilt(rng)};
            const Vec2 p{xy(rng), xy(rng)};
            const Vec2 s = stagnation_point(o, model.geometry());
            CHECK(dot(air_velocity(model, o, p).velocity, p - s) >= 0.0);
        }
    }

    SUBCASE("pan rotation rotates the field") {
        for (double delta : {13.0, 90.0, -120.0}) {
            const NozzleOrientation o{20.0, 30.0};
            const NozzleOrientation rotated{wrap_deg(o.pan_deg + delta), o.tilt_deg};
            for (const Vec2 p : {Vec2{0.4, -0.2}, Vec2{-0.9, 0.6}, Vec2{0.05, 1.1}}) {
                const Vec2 a = rotate(air_velocity(model, o, p).velocity, deg_to_rad(delta));
                const Vec2 b = air_velocity(model, rotated, rotate(p, deg_to_rad(delta))).velocity;
                CHECK(distance(a, b) < 1e-9);
            }
        }
    }
}

TEST_CASE("field model validation") {
    std::vector<AlphaTable> tables(1);
    for (auto &p : tables[0]) p = {1.0, -1.0, -2.0};
    CHECK_NOTHROW(FieldModel(FieldGeometry{}, {10.0}, tables));
    CHECK_THROWS_AS(FieldModel(FieldGeometry{}, {10.0, 5.0}, {tables[0], tables[0]}), InvalidArgument);
    CHECK_THROWS_AS(FieldModel(FieldGeometry{}, {95.0}, tables), InvalidArgument);
    tables[0][42] = {1.0, -3.0, -2.0};
    CHECK_THROWS_AS(FieldModel(FieldGeometry{}, {10.0}, tables), InvalidArgument);
}

TEST_CASE("interpolated tables keep the profile shape") {
    const FieldModel model = reference_field().to_model();
    for (double tilt = 0.0; tilt <= 45.0; tilt += 2.5) {
        const AlphaTable table = model.table_at_tilt(tilt);
        for (const auto &p : table) REQUIRE(p.valid());
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "airflow/errors.hpp"
#include "airflow/geometry.hpp"

#include <cmath>

using namespace airflow;

namespace {
// g(x) = x - a1 x^a2, evaluated independently of the library.
double offset(double x) { return x - 0.1 * std::pow(x, 2.33); }
} // namespace

TEST_CASE("projection point") {
    const FieldGeometry g;
    SUBCASE("pan 90, tilt 45") {
        const Vec2 c = projection_point({90.0, 45.0}, g);
        CHECK(c.x == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(c.y == doctest::Approx(1.43).epsilon(1e-12));
    }
    SUBCASE("tilt 0 is the origin for any pan") {
        for (double pan : {-180.0, -33.0, 0.0, 127.0, 180.0}) {
            const Vec2 c = projection_point({pan, 0.0}, g);
            CHECK(c.x == 0.0);
            CHECK(c.y == 0.0);
        }
    }
    SUBCASE("tilt 22.5") {
        // 1.43 * tan(22.5 deg), scalar calculator
        const Vec2 c = projection_point({0.0, 22.5}, g);
        CHECK(c.x == doctest::Approx(0.5923253941935259).epsilon(1e-14));
        CHECK(std::abs(c.y) < 1e-15);
    }
    SUBCASE("tilt at 90 is a domain error") {
        CHECK_THROWS_AS(projection_point({0.0, 90.0}, g), DomainError);
        CHECK_THROWS_AS(projection_point({0.0, -1.0}, g), DomainError);
        CHECK_THROWS_AS(projection_point({181.0, 10.0}, g), DomainError);
    }
}

TEST_CASE("orientation from projection") {
    const FieldGeometry g;
    auto o = orientation_from_projection({0.0, 1.43}, g);
    CHECK(o.pan_deg == doctest::Approx(90.0));
    CHECK(o.tilt_deg == doctest::Approx(45.0));
    o = orientation_from_projection({0.0, 0.0}, g);
    CHECK(o.pan_deg == 0.0);
    CHECK(o.tilt_deg == 0.0);
    o = orientation_from_projection({0.5923253941935259, 0.0}, g);
    CHECK(o.pan_deg == doctest::Approx(0.0));
    CHECK(o.tilt_deg == doctest::Approx(22.5).epsilon(1e-12));
}

TEST_CASE("orientation roundtrip over a 1 degree grid") {
    const FieldGeometry g;
    double worst = 0.0;
    for (int pan = -179; pan <= 180; ++pan)
        for (int tilt = 1; tilt <= 89; ++tilt) {
            const NozzleOrientation o{double(pan), double(tilt)};
            const auto back = orientation_from_projection(projection_point(o, g), g);
            worst = std::max(worst, std::abs(back.pan_deg - o.pan_deg));
            worst = std::max(worst, std::abs(back.tilt_deg - o.tilt_deg));
        }
    CHECK(worst < 1e-9);
}

TEST_CASE("stagnation offset law") {
    const FieldGeometry g;
    CHECK(stagnation_from_projection({0, 0}, g) == Vec2{0, 0});
    const Vec2 s = stagnation_from_projection({0.5, 0.0}, g);
    CHECK(0.5 - s.x == doctest::Approx(0.019888412093872966).epsilon(1e-12));
    CHECK(s.y == 0.0);
    const Vec2 s1 = stagnation_from_projection({0.0, -1.0}, g);
    CHECK(norm(Vec2{0.0, -1.0} - s1) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s1.y < 0.0); // stays on the ray towards c

    SUBCASE("monotone limit") {
        // root of g'(x) = 1 - 0.233 x^1.33
        CHECK(g.monotone_limit() == doctest::Approx(2.990007239340527).epsilon(1e-12));
        CHECK_THROWS_AS(stagnation_from_projection({3.0, 0.0}, g), DomainError);
    }
}

TEST_CASE("projection from stagnation") {
    const FieldGeometry g;
    CHECK(projection_from_stagnation({0, 0}, g) == Vec2{0, 0});
    const Vec2 c = projection_from_stagnation({offset(0.5), 0.0}, g);
    CHECK(c.x == doctest::Approx(0.5).epsilon(1e-10));
    const Vec2 c9 = projection_from_stagnation({0.0, 0.9}, g);
    CHECK(std::abs(offset(norm(c9)) - 0.9) <= 1e-6);
    CHECK(c9.x == 0.0);
    CHECK(norm(c9) == doctest::Approx(1.0).epsilon(1e-9)); // g(1) = 0.9 exactly
    CHECK_THROWS_AS(projection_from_stagnation({1.8, 0.0}, g), DomainError);
}

TEST_CASE("stagnation roundtrip inside the monotone domain") {
    const FieldGeometry g;
    for (double r = 0.01; r < g.monotone_limit() - 0.01; r += 0.01)
        for (double ang : {0.3, 2.0, -2.9}) {
            const Vec2 c = r * unit_from_angle(ang);
            const Vec2 back = projection_from_stagnation(stagnation_from_projection(c, g), g);
            CHECK(distance(back, c) < 1e-6);
        }
}

TEST_CASE("geometry validation") {
    CHECK_THROWS_AS((FieldGeometry{0.0, 0.1, 2.33}.validate()), InvalidArgument);
    CHECK_THROWS_AS((FieldGeometry{1.0, -0.1, 2.33}.validate()), InvalidArgument);
    CHECK_THROWS_AS((FieldGeometry{1.0, 0.1, 1.0}.validate()), InvalidArgument);
    FieldGeometry plain{1.43, 0.0, 2.0};
    CHECK(std::isinf(plain.monotone_limit()));
    CHECK(projection_from_stagnation({0.4, 0.1}, plain) == Vec2{0.4, 0.1});
}

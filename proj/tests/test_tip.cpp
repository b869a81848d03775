#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <latwave/tip.hpp>

#include <cstdio>

using namespace latwave;

namespace {
constexpr double pi = std::numbers::pi;

Grid from_function(const GridSpec& g, double (*f)(double, double)) {
    Grid out(g.n, g.n);
    for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) out(ix, iy) = f(g.x(ix), g.x(iy));
    return out;
}

TipTrajectory synthetic(double t_end, double dt, Vec2 (*f)(double)) {
    TipTrajectory traj;
    traj.sample_dt = dt;
    for (double t = 0.0; t <= t_end; t += dt) traj.append(t, f(t));
    return traj;
}
}  // namespace

TEST_CASE("vertical-line contour") {
    const GridSpec g(100);
    const Grid f = from_function(g, [](double x, double) { return x; });
    const auto segs = extract_zero_contours(f, g);
    CHECK(!segs.empty());
    for (const auto& s : segs) {
        CHECK(std::abs(s.a.x()) < g.dx() / 2);
        CHECK(std::abs(s.b.x()) < g.dx() / 2);
    }
}

TEST_CASE("circle contour radius") {
    const GridSpec g(200);
    const Grid f = from_function(g, [](double x, double y) { return x * x + y * y - 25.0; });
    const auto segs = extract_zero_contours(f, g);
    CHECK(!segs.empty());
    for (const auto& s : segs) {
        CHECK(std::abs(s.a.norm() - 5.0) <= g.dx());
        CHECK(std::abs(s.b.norm() - 5.0) <= g.dx());
    }
}

TEST_CASE("strictly positive field has no contour") {
    const GridSpec g(64);
    const Grid f = from_function(g, [](double, double) { return 1.0; });
    CHECK(extract_zero_contours(f, g).empty());
}

TEST_CASE("tip of crossing planes") {
    const GridSpec g(100);
    const Grid u = from_function(g, [](double x, double) { return x; });
    const Grid v = from_function(g, [](double, double y) { return y; });
    const auto tip = find_tip(u, v, g);
    REQUIRE(tip.has_value());
    CHECK(tip->norm() < 1e-10);

    const Grid u2 = from_function(g, [](double x, double) { return x - 1.0; });
    const Grid v2 = from_function(g, [](double x, double y) { return x + y; });
    const auto tip2 = find_tip(u2, v2, g);
    REQUIRE(tip2.has_value());
    CHECK((*tip2 - Vec2(1.0, -1.0)).norm() < 1e-10);
}

TEST_CASE("nearest-to-previous selection") {
    const GridSpec g(100);
    // u = 0 on two vertical lines x = 0 and x = 5; v = 0 on y = 0
    const Grid u = from_function(g, [](double x, double) { return x * (x - 5.0); });
    const Grid v = from_function(g, [](double, double y) { return y; });
    // the quadratic profile biases the interpolated crossing by O(dx^2)
    const auto near_origin = find_tip(u, v, g, Vec2(1.0, 1.0));
    REQUIRE(near_origin.has_value());
    CHECK(std::abs(near_origin->x()) < g.dx() / 10);
    const auto near_five = find_tip(u, v, g, Vec2(4.4, 0.5));
    REQUIRE(near_five.has_value());
    CHECK(std::abs(near_five->x() - 5.0) < g.dx() / 10);
}

TEST_CASE("no intersection reports tip loss") {
    const GridSpec g(64);
    const Grid u = from_function(g, [](double x, double) { return x; });
    const Grid v = from_function(g, [](double, double) { return 1.0; });
    CHECK(!find_tip(u, v, g).has_value());
}

TEST_CASE("find_tip is equivariant under grid rotation") {
    const GridSpec g(128);
    const Grid u = from_function(g, [](double x, double y) {
        return x - 2.0 + 0.3 * std::sin(0.2 * y);
    });
    const Grid v = from_function(g, [](double x, double y) {
        return y + 1.0 + 0.2 * std::cos(0.15 * x);
    });
    const auto tip = find_tip(u, v, g, Vec2(2.0, -1.0));
    REQUIRE(tip.has_value());
    const auto tip_rot = find_tip(rotate90(u), rotate90(v), g, apply_j(-*tip) * -1.0);
    REQUIRE(tip_rot.has_value());
    // rotating the fields by +90 deg rotates the tip by +90 deg
    const Vec2 expected = rotation(pi / 2) * (*tip);
    CHECK((*tip_rot - expected).norm() < g.dx() / 10);
}

TEST_CASE("classify a synthetic circle") {
    const auto traj = synthetic(80.0, 0.01, [](double t) {
        return Vec2(std::cos(t), std::sin(t));
    });
    const auto cls = classify(traj, 0.2);
    CHECK(cls.kind == MotionClassification::Kind::AnchoredRotation);
    REQUIRE(cls.anchor.has_value());
    CHECK(cls.anchor->norm() < 0.01);
    REQUIRE(cls.primary_period.has_value());
    CHECK(std::abs(*cls.primary_period - 2 * pi) < 0.01 * 2 * pi);
    CHECK(cls.mean_radius == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("classify a synthetic epicycle as meander") {
    const auto traj = synthetic(300.0, 0.02, [](double t) {
        return Vec2(std::cos(t) + 0.3 * std::cos(0.05 * t),
                    std::sin(t) + 0.3 * std::sin(0.05 * t));
    });
    const auto cls = classify(traj, 0.0);
    CHECK(cls.kind == MotionClassification::Kind::Meander);
    REQUIRE(cls.secondary_period.has_value());
    CHECK(std::abs(*cls.secondary_period - 2 * pi / 0.05) < 0.05 * 2 * pi / 0.05);
}

TEST_CASE("classify linear drift") {
    const auto traj = synthetic(50.0, 0.05, [](double t) { return Vec2(t, 2 * t); });
    const auto cls = classify(traj, 0.0);
    CHECK(cls.kind == MotionClassification::Kind::LinearDrift);
    REQUIRE(cls.drift_velocity.has_value());
    CHECK((*cls.drift_velocity - Vec2(1.0, 2.0)).norm() < 1e-9);
}

TEST_CASE("classification is translation invariant") {
    const auto base = synthetic(80.0, 0.01, [](double t) {
        return Vec2(std::cos(t), std::sin(t));
    });
    TipTrajectory moved = base;
    for (auto& p : moved.xy) p += Vec2(17.0, -4.0);
    const auto cls = classify(moved, 0.2);
    CHECK(cls.kind == MotionClassification::Kind::AnchoredRotation);
    REQUIRE(cls.anchor.has_value());
    CHECK((*cls.anchor - Vec2(17.0, -4.0)).norm() < 0.01);
}

TEST_CASE("insufficient samples raise") {
    const auto traj = synthetic(1.0, 0.01, [](double t) { return Vec2(t, t); });
    CHECK_THROWS_AS(classify(traj, 0.9), ValidationError);
}

TEST_CASE("quarter-period symmetry of a centered circle") {
    const auto traj = synthetic(40.0, 0.01, [](double t) {
        return Vec2(2 * std::cos(t), 2 * std::sin(t));
    });
    const double res = st_symmetry_test(traj, Vec2(0, 0), 2 * pi / 4);
    CHECK(res < 1e-3);
    // wrong chirality is far from symmetric
    CHECK(st_symmetry_test(traj, Vec2(0, 0), -2 * pi / 4) > 1.0);
}

TEST_CASE("off-anchor circle residual is sqrt(2) * offset") {
    const Vec2 center(0.5, 0.0);
    const auto traj = synthetic(40.0, 0.01, [](double t) {
        return Vec2(0.5 + std::cos(t), std::sin(t));
    });
    const double res = st_symmetry_test(traj, Vec2(0, 0), 2 * pi / 4);
    CHECK(res == doctest::Approx(center.norm() * std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("four-petal symmetric meander has small residual") {
    // r(t) = R + a cos(4t) keeps the quarter-turn symmetry about the origin
    const auto traj = synthetic(60.0, 0.005, [](double t) {
        const double r = 2.0 + 0.4 * std::cos(4 * t);
        return Vec2(r * std::cos(t), r * std::sin(t));
    });
    const double res = st_symmetry_test(traj, Vec2(0, 0), 2 * pi / 4);
    CHECK(res < 1e-3);
}

TEST_CASE("tip CSV round trip") {
    const auto traj = synthetic(5.0, 0.1, [](double t) {
        return Vec2(std::cos(t), 0.5 * std::sin(t));
    });
    const std::string path = "/tmp/latwave_test_tips.csv";
    traj.write_csv(path);
    const auto back = TipTrajectory::read_csv(path);
    REQUIRE(back.size() == traj.size());
    for (size_t i = 0; i < traj.size(); ++i) {
        CHECK(back.t[i] == traj.t[i]);
        CHECK((back.xy[i] - traj.xy[i]).norm() == 0.0);
    }
    std::remove(path.c_str());
}

TEST_CASE("spawn with zero settling returns the raw stimulus") {
    const GridSpec g(64);
    SpawnOptions so;
    so.settle_time = 0.0;
    const FieldPair a = spawn_spiral(g, so);
    const FieldPair b = spawn_spiral(g, so);
    CHECK((a.u == b.u).all());  // deterministic construction
    CHECK((a.v == b.v).all());
    const auto [ur, vr] = rest_state();
    // excited below the x axis, rest above; refractory left of the y axis
    CHECK(a.u(32, 10) == so.u_excited);
    CHECK(a.u(32, 50) == ur);
    CHECK(a.v(10, 32) == vr + so.v_elevated);
    CHECK(a.v(50, 32) == vr);
}

TEST_CASE("trajectory interpolation") {
    TipTrajectory traj;
    traj.append(0.0, Vec2(0, 0));
    traj.append(1.0, Vec2(2, -2));
    CHECK((traj.interpolate(0.25) - Vec2(0.5, -0.5)).norm() < 1e-15);
    CHECK((traj.interpolate(-5.0) - Vec2(0, 0)).norm() == 0.0);
    CHECK((traj.interpolate(9.0) - Vec2(2, -2)).norm() == 0.0);
    CHECK_THROWS_AS(traj.append(0.5, Vec2(1, 1)), ValidationError);
}

TEST_CASE("classification JSON includes lattice distances") {
    const auto traj = synthetic(80.0, 0.01, [](double t) {
        return Vec2(4 * pi + std::cos(t), std::sin(t));
    });
    auto cls = classify(traj, 0.2);
    const std::string json = classification_to_json(cls, 4 * pi);
    CHECK(json.find("anchored_rotation") != std::string::npos);
    CHECK(json.find("lattice_distance") != std::string::npos);
    CHECK(json.find("dual_lattice_distance") != std::string::npos);
}

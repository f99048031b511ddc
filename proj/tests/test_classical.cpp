#include "afa/classical.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace afa;

namespace {

ClassicalState with_energy(const PhysParams& p, double E, double u, double phase, double frac) {
    return state_on_energy_sphere(p, E, u, phase, frac);
}

} // namespace

TEST_CASE("wall free motion") {
    const auto p = PhysParams::make(0.01);
    ClassicalState s;
    s.R = p.R0();
    auto w = wall_free_motion(s, 3.7, p);
    CHECK(w.R == doctest::Approx(p.R0()));
    CHECK(w.P == doctest::Approx(0.0));

    s.R = p.R0() + 1.0;
    w = wall_free_motion(s, std::numbers::pi / p.omega(), p);
    CHECK(w.R == doctest::Approx(p.R0() - 1.0).epsilon(1e-14));
    CHECK(std::abs(w.P) < 1e-14);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        s.R = p.R0() + U(rng);
        s.P = U(rng);
        w = wall_free_motion(s, 2.0 * std::numbers::pi / p.omega(), p);
        CHECK(w.R == doctest::Approx(s.R).epsilon(1e-13));
        CHECK(w.P == doctest::Approx(s.P).epsilon(1e-13).scale(1.0));
    }
}

TEST_CASE("next collision examples") {
    const auto p = PhysParams::make(0.01);
    ClassicalState s;
    s.t = 2.0;
    s.R = 6.3;
    s.P = 0.4;
    s.r = 1.0;
    s.p = -1.0;
    auto ev = next_collision(s, p);
    CHECK(ev.kind == CollisionKind::FixedWall);
    CHECK(ev.t == doctest::Approx(2.0 + 0.01).epsilon(1e-14));
    CHECK(ev.state_after.r == 0.0);
    CHECK(ev.state_after.p == 1.0);

    s = {};
    s.R = 5.0;
    s.r = 0.0;
    s.p = 0.3;
    ev = next_collision(s, p);
    CHECK(ev.kind == CollisionKind::MovingWall);
    CHECK(ev.t == doctest::Approx(5.0 * p.m() / 0.3).epsilon(1e-12));
    CHECK(ev.state_after.r == ev.state_after.R);
}

TEST_CASE("collision root residual on random states") {
    const auto p = PhysParams::make(0.01);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const auto s = with_energy(p, 12.0, U(rng), U(rng), U(rng));
        const auto ev = next_collision(s, p);
        CHECK(ev.t > s.t);
        const double dt = ev.t - s.t;
        if (ev.kind == CollisionKind::MovingWall) {
            CHECK(std::abs(flight_gap(s, dt, p)) < 1e-10 * p.R0());
        } else {
            CHECK(std::abs(s.r + s.p / p.m() * dt) < 1e-10 * p.R0());
        }
    }
}

TEST_CASE("motionless configuration has no events") {
    const auto p = PhysParams::make(0.01);
    ClassicalState s;
    s.R = p.R0();
    s.r = p.R0() / 2;
    CHECK_THROWS_AS(simulate(s, 5, p), NoRootInHorizon);
    try {
        simulate(s, 5, p);
    } catch (const NoRootInHorizon& e) {
        CHECK(e.event_index() == 0);
    }
}

TEST_CASE("invalid initial states are rejected") {
    const auto p = PhysParams::make(0.01);
    ClassicalState s;
    s.R = 5.0;
    s.r = 6.0;
    s.p = 1.0;
    CHECK_THROWS_AS(simulate(s, 5, p), GeometryError);
}

TEST_CASE("trajectory invariants at eta 0.01") {
    const auto p = PhysParams::make(0.01);
    const auto s0 = with_energy(p, 12.0, 0.45, 0.3, 0.4);
    const double E0 = total_energy(s0, p);
    const auto events = simulate(s0, 20000, p);
    REQUIRE(events.size() == 20000);

    double worst = 0.0;
    bool ordered = true;
    bool confined = true;
    bool flags_ok = true;
    ClassicalState prev = s0;
    CollisionKind last = CollisionKind::FixedWall;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        worst = std::max(worst, std::abs(total_energy(ev.state_after, p) - E0) / E0);
        ordered = ordered && ev.t > prev.t;
        for (int k = 1; k <= 16; ++k) {
            const double dt = (ev.t - prev.t) * k / 17.0;
            const double r = prev.r + prev.p / p.m() * dt;
            const double R = wall_free_motion(prev, dt, p).R;
            confined = confined && r >= -1e-12 && r <= R + 1e-12;
        }
        if (ev.kind == CollisionKind::MovingWall) {
            flags_ok = flags_ok && ev.state_after.r == ev.state_after.R;
        } else {
            flags_ok = flags_ok && ev.state_after.r == 0.0;
        }
        const bool expect_double = i > 0 && ev.kind == CollisionKind::MovingWall && last == CollisionKind::MovingWall;
        flags_ok = flags_ok && ev.double_flag == expect_double;
        last = ev.kind;
        prev = ev.state_after;
    }
    CHECK(worst < 1e-8);
    CHECK(ordered);
    CHECK(confined);
    CHECK(flags_ok);

    for (const auto& sp : poincare_section(events, SectionFrame::CenterOfMass, p)) {
        const double e = sp.sphere.X * sp.sphere.X + sp.sphere.Y * sp.sphere.Y + sp.sphere.Z * sp.sphere.Z;
        REQUIRE(std::abs(e - E0) / E0 < 1e-9);
    }
}

TEST_CASE("regular island start has no double collisions") {
    const auto p = PhysParams::make(0.01);
    const auto s0 = with_energy(p, 12.0, 0.985, 0.0, 0.5);
    const auto events = simulate(s0, 10000, p);
    CHECK(std::none_of(events.begin(), events.end(), [](const CollisionEvent& e) { return e.double_flag; }));
}

TEST_CASE("time reversal retraces a regular trajectory") {
    const auto p = PhysParams::make(0.01);
    const auto s0 = with_energy(p, 12.0, 0.985, 0.2, 0.5);
    const std::size_t N = 150;
    const auto fwd = simulate(s0, N + 1, p);
    const auto& last = fwd[N - 1];
    const double half = 0.5 * (fwd[N].t - last.t);
    ClassicalState mid = last.state_after;
    const auto w = wall_free_motion(mid, half, p);
    mid.R = w.R;
    mid.P = -w.P;
    mid.r = mid.r + mid.p / p.m() * half;
    mid.p = -mid.p;
    mid.t = 0.0;
    const auto back = simulate(mid, 120, p);
    double worst = 0.0;
    for (std::size_t j = 0; j < back.size(); ++j) {
        const auto& f = fwd[N - 1 - j];
        worst = std::max(worst, std::abs(back[j].t - (last.t + half - f.t)));
        worst = std::max(worst, std::abs(back[j].state_after.R - f.state_after.R));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("section projection") {
    const auto p = PhysParams::make(0.01);
    CollisionEvent ev;
    ev.kind = CollisionKind::MovingWall;
    ev.state_after = {0.0, 5.2, 0.3, 5.2, -0.1};
    std::vector<CollisionEvent> evs{ev};
    auto part = poincare_section(evs, SectionFrame::Particle, p);
    auto cm = poincare_section(evs, SectionFrame::CenterOfMass, p);
    REQUIRE(part.size() == 1);
    CHECK(part[0].q == 5.2);
    CHECK(part[0].mom == -0.1);
    CHECK(cm[0].q == 5.2);
    CHECK(cm[0].mom == 0.3);
    CHECK(poincare_section({}, SectionFrame::Particle, p).empty());
}

TEST_CASE("box counting") {
    std::vector<Point2> same(150, Point2{0.31, -0.27});
    auto a = chaotic_area_estimate(same, 0.1);
    CHECK(a.occupied_cells == 1);
    CHECK(a.area == doctest::Approx(0.01));
    CHECK_FALSE(a.insufficient_sampling);
    CHECK(chaotic_area_estimate(std::span<const Point2>(same).first(10), 0.1).insufficient_sampling);
    CHECK_THROWS(chaotic_area_estimate(same, 0.0));

    const auto p = PhysParams::make(0.01);
    const auto events = simulate(with_energy(p, 12.0, 0.5, 0.1, 0.5), 4000, p);
    std::vector<Point2> pts;
    for (const auto& sp : poincare_section(events, SectionFrame::CenterOfMass, p)) {
        pts.push_back({sp.q, sp.mom});
    }
    double prev = 0.0;
    for (std::size_t n = 100; n <= pts.size(); n += 300) {
        const double area = chaotic_area_estimate(std::span<const Point2>(pts).first(n), 0.05).area;
        CHECK(area >= prev);
        prev = area;
    }
}

TEST_CASE("ensemble is deterministic and ordered") {
    const auto p = PhysParams::make(0.1);
    EnsembleOptions o;
    o.n_trajectories = 6;
    o.n_events = 300;
    o.seed = 42;
    const auto a = run_ensemble(p, o);
    const auto b = run_ensemble(p, o);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == i);
        REQUIRE(a[i].events.size() == b[i].events.size());
        CHECK(a[i].events.back().t == b[i].events.back().t);
        CHECK(total_energy(a[i].initial, p) == doctest::Approx(12.0).epsilon(1e-12));
    }
}

TEST_CASE("action-angle chart") {
    const auto p = PhysParams::make(0.01);
    const double v_in = 20.0;
    const auto out = elastic_collision(v_in, 0.0, p.eta());
    ClassicalState s{0.0, 5.0, p.M() * out.wall, 5.0, p.m() * out.particle};
    const auto q = action_angle_point(s, p);
    CHECK(q.x >= 0.0);
    CHECK(q.x < 2.0 * std::numbers::pi);
    const double J = p.m() * 5.0 * 0.5 * (v_in + std::abs(out.particle));
    CHECK(q.y == doctest::Approx(J / std::numbers::pi).epsilon(1e-12));
}

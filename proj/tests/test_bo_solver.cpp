#include "afa/bo_solver.hpp"
#include "afa/errors.hpp"
#include "afa/fem.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace afa;

namespace {

double V(int n, double R, const PhysParams& p) { return effective_potential(n, R, p); }

// Minimizer of V_eff by bisection on a central-difference slope.
double minimizer(int n, const PhysParams& p) {
    auto slope = [&](double R) { return (V(n, R + 1e-6, p) - V(n, R - 1e-6, p)) / 2e-6; };
    double lo = 0.5, hi = p.R0() + 5.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

int sign_changes(const std::vector<double>& v) {
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    int count = 0;
    double last = 0.0;
    for (double x : v) {
        if (std::abs(x) < 1e-8 * peak) continue;
        if (last != 0.0 && (x > 0.0) != (last > 0.0)) ++count;
        last = x;
    }
    return count;
}

} // namespace

TEST_CASE("effective potential") {
    const auto p = PhysParams::make(0.01);
    CHECK(V(1, p.R0(), p) == doctest::Approx(0.02 * std::numbers::pi * std::numbers::pi).epsilon(1e-14));
    CHECK(V(1, 1e-3, p) > 1e5);
    CHECK(V(1, 1e-4, p) > 100.0 * V(1, 1e-3, p) * 0.99);
    CHECK(effective_potential(2, 3.0, p, BOOptions{false, false}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(V(1, 0.0, p), GeometryError);
    CHECK_THROWS_AS(V(0, 1.0, p), ConfigError);
    const double with = effective_potential(3, 4.0, p, BOOptions{true, true});
    CHECK(with - V(3, 4.0, p) == doctest::Approx(diagonal_correction(3, 4.0, p)));
}

TEST_CASE("diagonal correction matches quadrature of the channel derivative") {
    const auto p = PhysParams::make(0.05);
    std::vector<double> x, w;
    gauss_legendre01(60, x, w);
    for (int n : {1, 4}) {
        const double R = 3.3;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = channel_function_dR(n, x[i] * R, R);
            s += w[i] * R * d * d;
        }
        CHECK(p.hbar() * p.hbar() / (2.0 * p.M()) * s == doctest::Approx(diagonal_correction(n, R, p)).epsilon(1e-12));
    }
}

TEST_CASE("harmonic hook") {
    const auto p = PhysParams::make(0.01);
    const auto g = default_bo_grid(p, 12.0);
    const auto sol = solve_channel(1, p, g, 12.0, BOOptions{false, false});
    REQUIRE(sol.levels.size() > 10);
    CHECK(sol.levels[0].E == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(sol.levels[1].E == doctest::Approx(0.15).epsilon(1e-4));
    CHECK(sol.levels[2].E == doctest::Approx(0.25).epsilon(1e-4));
    for (std::size_t i = 1; i < sol.levels.size(); ++i) CHECK(sol.levels[i].E > sol.levels[i - 1].E);
}

TEST_CASE("stiff-well expansion") {
    const auto p = PhysParams::make(0.01);
    const auto g = default_bo_grid(p, 12.0);
    for (int n : {1, 5, 10}) {
        const double Rs = minimizer(n, p);
        const double d = 1e-3;
        const double V2 = (V(n, Rs + d, p) - 2.0 * V(n, Rs, p) + V(n, Rs - d, p)) / (d * d);
        const double Omega = std::sqrt(V2 / p.M());
        const auto sol = solve_channel(n, p, g, 12.0);
        REQUIRE(!sol.levels.empty());
        const double predicted = V(n, Rs, p) + 0.5 * p.hbar() * Omega;
        CHECK(sol.levels[0].E == doctest::Approx(predicted).epsilon(0.02));
    }
}

TEST_CASE("node count equals nu and profiles are normalized") {
    const auto p = PhysParams::make(0.01);
    const auto g = default_bo_grid(p, 12.0);
    const auto sol = solve_channel(4, p, g, 12.0);
    REQUIRE(sol.levels.size() > 20);
    CHECK(!sol.resolution_warning);
    for (const auto& l : sol.levels) {
        if (l.nu > 40) break;
        CHECK(sign_changes(l.xi) == l.nu);
        double s = 0.0;
        for (double x : l.xi) s += x * x * l.dR;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(l.xi.front() == 0.0);
        CHECK(l.xi.back() == 0.0);
    }
    const auto& a = sol.levels[3].xi;
    const auto& b = sol.levels[7].xi;
    double o = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) o += a[i] * b[i] * sol.levels[3].dR;
    CHECK(std::abs(o) < 1e-10);
}

TEST_CASE("coarse grid warns") {
    const auto p = PhysParams::make(0.01);
    auto g = default_bo_grid(p, 12.0);
    g.n_points = 300;
    CHECK(solve_channel(1, p, g, 12.0).resolution_warning);
    g.n_points = 100;
    CHECK_THROWS_AS(solve_channel(1, p, g, 12.0), ConfigError);
}

TEST_CASE("channel orthonormality") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.2, 12.0);
    std::vector<double> x, w;
    gauss_legendre01(40, x, w);
    for (int k = 0; k < 20; ++k) {
        const double R = u(rng);
        for (int n = 1; n <= 10; ++n) {
            for (int m = 1; m <= 10; ++m) {
                double s = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    s += w[i] * R * channel_function(n, x[i] * R, R) * channel_function(m, x[i] * R, R);
                }
                CHECK(s == doctest::Approx(n == m ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));
            }
        }
    }
}

TEST_CASE("BO field on the wedge") {
    const auto p = PhysParams::make(0.01);
    const auto g = default_bo_grid(p, 12.0);
    const auto sol = solve_channel(3, p, g, 12.0);
    const BOField f(sol.levels[2], p);
    const double t = p.tan_theta();
    for (double x : {3.0, 4.5, 5.2, 7.0}) {
        CHECK(std::abs(f(x, 0.0)) < 1e-14);
        CHECK(std::abs(f(x, t * x)) < 1e-12);
    }
    CHECK_THROWS_AS(f(5.0, -0.01), GeometryError);
    CHECK_THROWS_AS(f(5.0, 0.6), GeometryError);
    std::vector<double> gx, gw;
    gauss_legendre01(10, gx, gw);
    double norm = 0.0;
    const int panels = 2000;
    const double a = g.R_min, b = g.R_max;
    for (int k = 0; k < panels; ++k) {
        const double x0 = a + (b - a) * k / panels;
        const double dx = (b - a) / panels;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double x = x0 + gx[i] * dx;
            const double H = t * x;
            double col = 0.0;
            for (std::size_t j = 0; j < gx.size(); ++j) {
                const double v = f(x, gx[j] * H);
                col += gw[j] * H * v * v;
            }
            norm += gw[i] * dx * col;
        }
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("merged levels are sorted") {
    const auto p = PhysParams::make(0.1);
    const auto lv = solve_levels(p, 5, default_bo_grid(p, 12.0), 12.0);
    for (std::size_t i = 1; i < lv.size(); ++i) CHECK(lv[i].E >= lv[i - 1].E);
}

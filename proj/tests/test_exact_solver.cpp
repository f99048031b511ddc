#include "afa/errors.hpp"
#include "afa/exact_solver.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace afa;

TEST_CASE("truncation rule") {
    const auto p = PhysParams::make(0.1);
    const auto t = truncation_rule(p, 12.0);
    CHECK(t.x_max == doctest::Approx(5.0 + std::sqrt(26.0)).epsilon(1e-14));
    CHECK(p.wall_potential(t.x_max) == doctest::Approx(12.0 + 10.0 * p.hbar() * p.omega()));
    CHECK(p.channel_energy(1, t.x_cut) == doctest::Approx(120.0));
    CHECK(element_size_for(p, 12.0, 0.7) == doctest::Approx(0.7 * 0.1 / std::sqrt(24.0)));
}

TEST_CASE("triangle exact levels and crossings") {
    const auto lv = triangle_exact_levels(1.0, 4);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(lv[0].exact == doctest::Approx(5.0 * pi2));
    CHECK(lv[1].exact == doctest::Approx(10.0 * pi2));
    CHECK(lv[2].exact == doctest::Approx(13.0 * pi2));
    CHECK(lv[3].exact == doctest::Approx(17.0 * pi2));
    CHECK(triangle_exact_crossings(1.0, 2, 1) == 0);
    CHECK(triangle_exact_crossings(1.0, 3, 1) == 1);
}

TEST_CASE("triangle oracle at moderate resolution") {
    const auto r = validate_triangle_spectrum(1.0, 1.0 / 40.0, 2, ElementOrder::P1);
    REQUIRE(r.levels.size() >= 10);
    CHECK(r.max_rel_error[0] < 0.03);
    for (double o : r.orders) CHECK(o == doctest::Approx(2.0).epsilon(0.1));
    const auto exact = triangle_exact_levels(1.0, 4);
    REQUIRE(r.nodal_crossings.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(r.nodal_crossings[i] == triangle_exact_crossings(1.0, exact[i].m, exact[i].n));
    }
    const auto r2 = validate_triangle_spectrum(1.0, 1.0 / 20.0, 1, ElementOrder::P2);
    CHECK(r2.orders[0] > 3.5);
}

TEST_CASE("spectrum: Dirichlet zeros, normalization and residuals") {
    const auto p = PhysParams::make(0.1);
    SpectrumOptions o;
    o.target = 3.0;
    o.n_pairs = 6;
    const auto s = solve_spectrum(p, o);
    REQUIRE(s.pairs.size() == 6);
    CHECK(!s.h_coarsened);
    for (const auto& e : s.pairs) {
        CHECK(e.residual < 1e-8);
        for (int i = 0; i < s.dofs.n_dofs; ++i) {
            if (s.dofs.constrained[i]) CHECK(e.psi[i] == 0.0);
        }
        Eigen::VectorXd f(s.dofs.n_free);
        for (int k = 0; k < s.dofs.n_free; ++k) f[k] = e.psi[s.dofs.free_to_dof[k]];
        CHECK(f.dot(s.B * f) == doctest::Approx(1.0).epsilon(1e-10));
        Eigen::Index imax = 0;
        e.psi.cwiseAbs().maxCoeff(&imax);
        CHECK(e.psi[imax] > 0.0);
    }
    for (std::size_t i = 1; i < s.pairs.size(); ++i) {
        CHECK(std::abs(s.pairs[i].E - 3.0) >= std::abs(s.pairs[i - 1].E - 3.0));
    }
}

TEST_CASE("extending x_max by 20% leaves the levels in place") {
    const auto p = PhysParams::make(0.1);
    SpectrumOptions o;
    o.target = 3.0;
    o.n_pairs = 6;
    const auto a = solve_spectrum(p, o);
    o.x_max = 1.2 * a.x_max;
    const auto b = solve_spectrum(p, o);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(a.pairs[i].E - b.pairs[i].E) < 2e-5 * a.pairs[i].E);
}

TEST_CASE("triangle cap coarsens h") {
    const auto p = PhysParams::make(0.1);
    SpectrumOptions o;
    o.target = 3.0;
    o.n_pairs = 3;
    o.max_triangles = 5000;
    const auto s = solve_spectrum(p, o);
    CHECK(s.h_coarsened);
    CHECK(s.mesh.n_triangles() <= 5000);
}

#include "afa/core_model.hpp"
#include "afa/fem.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace afa;

namespace {

WedgeMesh small_mesh() { return build_mesh(WedgeGeometry{0.4, 0.2, 3.0}, MeshOptions{0.15, 0.0}); }

double sym_error(const SpMat& A) {
    const SpMat d = SpMat(A.transpose()) - A;
    return d.norm() / A.norm();
}

} // namespace

TEST_CASE("assembled matrices are symmetric") {
    const auto mesh = small_mesh();
    for (auto order : {ElementOrder::P1, ElementOrder::P2}) {
        const auto a = assemble(mesh, FemProblem{0.5, 1.0, 1.5}, order);
        CHECK(sym_error(a.H) < 1e-14);
        CHECK(sym_error(a.B) < 1e-14);
        CHECK(a.H.rows() == a.dofs.n_free);
    }
}

TEST_CASE("constants: zero stiffness and exact area without Dirichlet") {
    const auto mesh = small_mesh();
    const double area = 0.5 * 0.4 * (9.0 - 0.04);
    for (auto order : {ElementOrder::P1, ElementOrder::P2}) {
        const auto a = assemble(mesh, FemProblem{1.0, 0.0, 0.0}, order, false);
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(a.dofs.n_dofs);
        CHECK((a.H * one).norm() < 1e-10);
        CHECK(one.dot(a.B * one) == doctest::Approx(area).epsilon(1e-12));
    }
}

TEST_CASE("potential integrates x^2 exactly") {
    const auto mesh = small_mesh();
    // int (x - c)^2 / 2 over the wedge with spring 1, c = 0: int_x 0.4 x^3 / 2
    const double exact = 0.4 * (std::pow(3.0, 4) - std::pow(0.2, 4)) / 8.0;
    for (auto order : {ElementOrder::P1, ElementOrder::P2}) {
        const auto a = assemble(mesh, FemProblem{0.0, 1.0, 0.0}, order, false);
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(a.dofs.n_dofs);
        const double tol = order == ElementOrder::P2 ? 1e-12 : 1e-2;
        CHECK(one.dot(a.H * one) == doctest::Approx(exact).epsilon(tol));
    }
}

TEST_CASE("Rayleigh quotients are non-negative") {
    const auto mesh = small_mesh();
    const auto a = assemble(mesh, FemProblem{0.005, 1.0, 1.5}, ElementOrder::P2);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd v(a.dofs.n_free);
        for (int i = 0; i < v.size(); ++i) v[i] = nd(rng);
        CHECK(v.dot(a.H * v) >= 0.0);
        CHECK(v.dot(a.B * v) > 0.0);
    }
}

TEST_CASE("Dirichlet dofs lie on the boundary") {
    const auto mesh = small_mesh();
    const auto d = build_dofs(mesh, ElementOrder::P2, true);
    const double t = mesh.geom.tan_theta;
    int n_constrained = 0;
    for (int i = 0; i < d.n_dofs; ++i) {
        if (!d.constrained[i]) continue;
        ++n_constrained;
        const double x = d.coords[i][0];
        const double y = d.coords[i][1];
        const bool on = std::abs(y) < 1e-12 || std::abs(y - t * x) < 1e-12 || std::abs(x - 0.2) < 1e-12 ||
                        std::abs(x - 3.0) < 1e-12;
        CHECK(on);
    }
    CHECK(n_constrained + d.n_free == d.n_dofs);
    CHECK(d.n_dofs > static_cast<int>(mesh.n_nodes()));
}

TEST_CASE("field evaluation reproduces a quadratic") {
    const auto mesh = small_mesh();
    const auto d = build_dofs(mesh, ElementOrder::P2, false);
    Eigen::VectorXd f(d.n_dofs);
    auto g = [](double x, double y) { return 1.0 + 2.0 * x - y + 0.5 * x * y + y * y; };
    for (int i = 0; i < d.n_dofs; ++i) f[i] = g(d.coords[i][0], d.coords[i][1]);
    FieldEvaluator ev(mesh, d);
    for (double x : {0.31, 1.0, 2.77}) {
        const double y = 0.3 * 0.4 * x;
        const int t = ev.locate(x, y);
        REQUIRE(t >= 0);
        CHECK(ev.value(f, t, x, y) == doctest::Approx(g(x, y)).epsilon(1e-12));
        const auto grad = ev.gradient(f, t, x, y);
        CHECK(grad[0] == doctest::Approx(2.0 + 0.5 * y).epsilon(1e-10));
        CHECK(grad[1] == doctest::Approx(-1.0 + 0.5 * x + 2.0 * y).epsilon(1e-10));
        const double H = 0.4 * x;
        const double exact = H + 2.0 * x * H - H * H / 2.0 + 0.25 * x * H * H + H * H * H / 3.0;
        CHECK(ev.line_integral(f, x, [](double) { return 1.0; }) == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK(ev.locate(1.0, 0.5) == -1);
}

TEST_CASE("vertical line pieces cover the column") {
    const auto mesh = small_mesh();
    for (double x : {0.2, 0.777, 1.5, 3.0}) {
        const auto segs = vertical_line(mesh, x);
        REQUIRE(!segs.empty());
        CHECK(segs.front().y0 == doctest::Approx(0.0));
        CHECK(segs.back().y1 == doctest::Approx(0.4 * x));
        for (std::size_t i = 1; i < segs.size(); ++i) CHECK(segs[i].y0 == doctest::Approx(segs[i - 1].y1));
    }
}

TEST_CASE("Gauss-Legendre rule") {
    std::vector<double> x, w;
    gauss_legendre01(5, x, w);
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += w[i] * std::pow(x[i], 9);
    CHECK(s == doctest::Approx(0.1).epsilon(1e-14));
}

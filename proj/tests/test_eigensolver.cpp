#include "afa/eigensolver.hpp"
#include "afa/errors.hpp"

#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace afa;

namespace {

// P1 mass and stiffness of -u'' + x^2 u on [0, L] with Dirichlet ends.
void pencil(int n, double L, Eigen::SparseMatrix<double>& H, Eigen::SparseMatrix<double>& B) {
    const double h = L / (n + 1);
    std::vector<Eigen::Triplet<double>> th, tb;
    for (int i = 0; i < n; ++i) {
        const double x = (i + 1) * h;
        th.emplace_back(i, i, 2.0 / h + x * x * h);
        tb.emplace_back(i, i, 4.0 * h / 6.0);
        if (i + 1 < n) {
            th.emplace_back(i, i + 1, -1.0 / h);
            th.emplace_back(i + 1, i, -1.0 / h);
            tb.emplace_back(i, i + 1, h / 6.0);
            tb.emplace_back(i + 1, i, h / 6.0);
        }
    }
    H.resize(n, n);
    B.resize(n, n);
    H.setFromTriplets(th.begin(), th.end());
    B.setFromTriplets(tb.begin(), tb.end());
}

} // namespace

TEST_CASE("matches a dense generalized solve") {
    Eigen::SparseMatrix<double> H, B;
    pencil(400, 6.0, H, B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense{Eigen::MatrixXd(H), Eigen::MatrixXd(B)};
    const Eigen::VectorXd all = dense.eigenvalues();
    const double target = 40.0;
    std::vector<double> ref(all.data(), all.data() + all.size());
    std::sort(ref.begin(), ref.end(), [&](double a, double b) { return std::abs(a - target) < std::abs(b - target); });

    EigenOptions o;
    o.target = target;
    o.n_pairs = 12;
    const auto r = solve_eigen(H, B, o);
    REQUIRE(r.values.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(r.values[i] == doctest::Approx(ref[i]).epsilon(1e-10));

    const Eigen::MatrixXd G = r.vectors.transpose() * (B * r.vectors);
    CHECK((G - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);
    for (double res : r.residuals) CHECK(res < 1e-8);
    CHECK(r.factorization == "ldlt");
}

TEST_CASE("doubling the pair count keeps the first pairs") {
    Eigen::SparseMatrix<double> H, B;
    pencil(600, 8.0, H, B);
    EigenOptions o;
    o.target = 25.0;
    o.n_pairs = 8;
    const auto a = solve_eigen(H, B, o);
    o.n_pairs = 16;
    const auto b = solve_eigen(H, B, o);
    for (int i = 0; i < 8; ++i) {
        CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-11));
        const double c = std::abs(a.vectors.col(i).dot(B * b.vectors.col(i)));
        CHECK(c == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("shift on an eigenvalue") {
    Eigen::SparseMatrix<double> H, B;
    pencil(200, 5.0, H, B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense{Eigen::MatrixXd(H), Eigen::MatrixXd(B)};
    EigenOptions o;
    o.target = dense.eigenvalues()[3];
    o.n_pairs = 4;
    const auto r = solve_eigen(H, B, o);
    CHECK(r.values[0] == doctest::Approx(dense.eigenvalues()[3]).epsilon(1e-10));
}

TEST_CASE("deterministic for a fixed seed") {
    Eigen::SparseMatrix<double> H, B;
    pencil(300, 6.0, H, B);
    EigenOptions o;
    o.target = 30.0;
    o.n_pairs = 6;
    const auto a = solve_eigen(H, B, o);
    const auto b = solve_eigen(H, B, o);
    CHECK(a.values == b.values);
    CHECK((a.vectors - b.vectors).norm() == 0.0);
}

TEST_CASE("too many pairs is rejected") {
    Eigen::SparseMatrix<double> H, B;
    pencil(20, 1.0, H, B);
    EigenOptions o;
    o.n_pairs = 30;
    CHECK_THROWS(solve_eigen(H, B, o));
}

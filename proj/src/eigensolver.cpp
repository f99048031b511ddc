#include "afa/eigensolver.hpp"

#include "afa/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace afa {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

class ShiftedSolve {
public:
    virtual ~ShiftedSolve() = default;
    virtual Vec solve(const Vec& rhs) const = 0;
};

class LdltSolve : public ShiftedSolve {
public:
    explicit LdltSolve(const SpMat& K) { ldlt_.compute(K); }
    bool ok() const {
        if (ldlt_.info() != Eigen::Success) return false;
        const Vec d = ldlt_.vectorD();
        const double big = d.cwiseAbs().maxCoeff();
        return d.cwiseAbs().minCoeff() > 1e-13 * big && d.allFinite();
    }
    Vec solve(const Vec& rhs) const override { return ldlt_.solve(rhs); }

private:
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

class LuSolve : public ShiftedSolve {
public:
    explicit LuSolve(const SpMat& K) {
        lu_.analyzePattern(K);
        lu_.factorize(K);
    }
    bool ok() const { return lu_.info() == Eigen::Success; }
    Vec solve(const Vec& rhs) const override { return lu_.solve(rhs); }

private:
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

struct Factored {
    std::unique_ptr<ShiftedSolve> solver;
    double shift;
    std::string kind;
};

Factored factor_near(const SpMat& H, const SpMat& B, double target) {
    const double scale = 1.0 + std::abs(target);
    for (double delta : {0.0, 1e-7 * scale, -3.1e-7 * scale}) {
        const double sigma = target + delta;
        SpMat K = H - sigma * B;
        auto ldlt = std::make_unique<LdltSolve>(K);
        if (ldlt->ok()) {
            return {std::move(ldlt), sigma, "ldlt"};
        }
    }
    const double sigma = target + 1e-7 * scale;
    SpMat K = H - sigma * B;
    auto lu = std::make_unique<LuSolve>(K);
    if (lu->ok()) {
        return {std::move(lu), sigma, "lu"};
    }
    std::ostringstream os;
    os << "cannot factor H - sigma B near sigma = " << target;
    throw NumericalError(os.str());
}

} // namespace

EigenResult solve_eigen(const SpMat& H, const SpMat& B, const EigenOptions& opts) {
    const int n = static_cast<int>(H.rows());
    if (H.cols() != n || B.rows() != n || B.cols() != n) {
        throw NumericalError("solve_eigen: matrix size mismatch");
    }
    const int nev = opts.n_pairs;
    if (nev < 1 || nev >= n) {
        throw NumericalError("solve_eigen: need 1 <= n_pairs < problem size");
    }
    int m = opts.ncv > 0 ? opts.ncv : std::max(2 * nev + 1, nev + 30);
    m = std::min(m, n);
    if (m <= nev) {
        throw NumericalError("solve_eigen: Krylov dimension must exceed n_pairs");
    }

    Factored fac = factor_near(H, B, opts.target);
    EigenResult res;
    res.shift = fac.shift;
    res.factorization = fac.kind;

    auto bnorm = [&](const Vec& v) { return std::sqrt(std::max(v.dot(B * v), 0.0)); };

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss;
    auto random_vec = [&] {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = gauss(rng);
        return v;
    };

    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    {
        Vec v0 = fac.solver->solve(B * random_vec()); // smooth start in the range of the operator
        V.col(0) = v0 / bnorm(v0);
    }

    // Orthogonalize w against the first `cols` basis vectors (twice), return coefficients.
    auto orthogonalize = [&](Vec& w, int cols) {
        Vec h = Vec::Zero(cols);
        for (int pass = 0; pass < 2; ++pass) {
            const Vec Bw = B * w;
            const Vec c = V.leftCols(cols).transpose() * Bw;
            w -= V.leftCols(cols) * c;
            h += c;
        }
        return h;
    };

    int k = 0;
    double beta = 0.0;
    Eigen::VectorXd theta;
    Eigen::MatrixXd S;
    std::vector<int> order;
    for (int restart = 0;; ++restart) {
        for (int j = k; j < m; ++j) {
            Vec w = fac.solver->solve(B * V.col(j));
            ++res.op_applications;
            const Vec h = orthogonalize(w, j + 1);
            G.col(j).head(j + 1) = h;
            beta = bnorm(w);
            if (beta < 1e-14 * std::abs(h[j]) || beta == 0.0) {
                // invariant subspace: continue with a fresh direction
                w = random_vec();
                orthogonalize(w, j + 1);
                w /= bnorm(w);
                beta = 0.0;
            } else {
                w /= beta;
            }
            V.col(j + 1) = w;
            if (j + 1 < m) {
                G(j + 1, j) = beta;
            }
        }
        const Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gs);
        theta = es.eigenvalues();
        S = es.eigenvectors();
        order.resize(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(theta[a]) > std::abs(theta[b]); });

        int nconv = 0;
        double worst = 0.0;
        for (int i = 0; i < nev; ++i) {
            const int c = order[i];
            const double r = std::abs(beta * S(m - 1, c));
            worst = std::max(worst, r / std::abs(theta[c]));
            if (r <= opts.tol * std::abs(theta[c])) ++nconv;
        }
        res.restarts = restart;
        if (nconv >= nev) break;
        if (restart >= opts.max_restarts) {
            std::ostringstream os;
            os << "shift-invert Lanczos did not converge after " << restart << " restarts (" << nconv << "/" << nev
               << " converged, worst relative Ritz residual " << worst << ")";
            throw NumericalError(os.str());
        }

        k = std::min(nev + (m - nev) / 2, m - 1);
        Eigen::MatrixXd Sk(m, k);
        for (int i = 0; i < k; ++i) Sk.col(i) = S.col(order[i]);
        const Vec next = V.col(m);
        V.leftCols(k) = (V.leftCols(m) * Sk).eval();
        V.col(k) = next;
        G.setZero();
        for (int i = 0; i < k; ++i) {
            G(i, i) = theta[order[i]];
            G(k, i) = G(i, k) = beta * Sk(m - 1, i);
        }
        // the column k entries above are overwritten by the next expansion step
    }

    std::vector<int> wanted(order.begin(), order.begin() + nev);
    std::vector<double> lambda(nev);
    for (int i = 0; i < nev; ++i) lambda[i] = fac.shift + 1.0 / theta[wanted[i]];
    std::vector<int> idx(nev);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(lambda[a] - opts.target) < std::abs(lambda[b] - opts.target);
    });

    res.vectors.resize(n, nev);
    for (int i = 0; i < nev; ++i) {
        const int c = wanted[idx[i]];
        Vec x = V.leftCols(m) * S.col(c);
        x /= bnorm(x);
        const double E = lambda[idx[i]];
        const Vec Bx = B * x;
        res.values.push_back(E);
        res.residuals.push_back((H * x - E * Bx).norm() / Bx.norm());
        res.vectors.col(i) = x;
    }
    return res;
}

} // namespace afa

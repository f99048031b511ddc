#pragma once

// Shift-invert Lanczos with Krylov-Schur restarts for the symmetric-definite
// pencil H x = lambda B x. The operator (H - sigma B)^{-1} B is self-adjoint in
// the B inner product; its largest Ritz values map to eigenvalues near sigma.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

namespace afa {

struct EigenOptions {
    double target = 12.0;
    int n_pairs = 50;
    int ncv = 0;            // Krylov dimension; 0 picks max(2 n_pairs + 1, n_pairs + 30)
    int max_restarts = 300;
    double tol = 1e-12;     // on Ritz residuals of the inverted operator, relative
    std::uint64_t seed = 1; // start vector
};

struct EigenResult {
    std::vector<double> values;     // ascending distance to the target
    Eigen::MatrixXd vectors;        // B-orthonormal columns
    std::vector<double> residuals;  // ||H x - E B x|| / ||B x||
    double shift = 0.0;             // shift actually factored
    int restarts = 0;
    int op_applications = 0;
    std::string factorization;      // "ldlt" or "lu"
};

// Throws NumericalError when no shift can be factored or the iteration stalls.
EigenResult solve_eigen(const Eigen::SparseMatrix<double>& H, const Eigen::SparseMatrix<double>& B,
                        const EigenOptions& opts);

} // namespace afa

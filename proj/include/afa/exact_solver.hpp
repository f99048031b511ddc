#pragma once

// Exact quantum problem on the wedge: mesh, assemble, shift-invert solve.

#include "afa/core_model.hpp"
#include "afa/eigensolver.hpp"
#include "afa/fem.hpp"
#include "afa/mesh.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace afa {

struct Truncation {
    double x_max;
    double x_cut;
};

// x_max: k (x_max - R0)^2 / 2 = E + 10 hbar omega.
// x_cut: the lowest channel at R = x_cut costs 10 E.
Truncation truncation_rule(const PhysParams& params, double energy);

// Element size giving k_E h = kh with k_E = sqrt(2 M E) / hbar.
double element_size_for(const PhysParams& params, double energy, double kh);

struct EigenPair {
    double E = 0.0;
    Eigen::VectorXd psi; // all dofs, zero on Dirichlet dofs; vertex values first
    double norm = 1.0;   // B norm
    double residual = 0.0;
};

struct SpectrumOptions {
    double target = 12.0;
    int n_pairs = 50;
    double h = 0.0;            // 0: from kh
    double kh = 0.7;
    ElementOrder order = ElementOrder::P2;
    double edge_grading = 0.0;
    double x_max = 0.0;        // 0: truncation rule
    double x_cut = -1.0;       // < 0: truncation rule
    std::size_t max_triangles = 200000;
    std::uint64_t seed = 1;
};

struct Spectrum {
    WedgeMesh mesh;
    DofMap dofs;
    SpMat B;                   // on free dofs
    std::vector<EigenPair> pairs;
    double x_max = 0.0;
    double x_cut = 0.0;
    double h = 0.0;
    bool h_coarsened = false;  // h was enlarged to respect max_triangles
    double shift = 0.0;
    int restarts = 0;
    std::string factorization;
};

Spectrum solve_spectrum(const PhysParams& params, const SpectrumOptions& opts);

struct TriangleLevel {
    int m = 0;
    int n = 0;
    double exact = 0.0;
    double computed = 0.0;
    double rel_error = 0.0;
};

struct TriangleReport {
    double L = 1.0;
    std::vector<double> h;               // h, h/2, h/4, ...
    std::vector<double> max_rel_error;   // per mesh
    std::vector<double> orders;          // log2 of consecutive error ratios
    std::vector<TriangleLevel> levels;   // at the first mesh
    // Interior sign changes of the first computed modes along the line y = x/2,
    // in ascending order of energy (coarsest mesh).
    std::vector<int> nodal_crossings;
};

// Sign changes along y = x/2 of sin(m pi x/L) sin(n pi y/L) - sin(n pi x/L) sin(m pi y/L).
int triangle_exact_crossings(double L, int m, int n);

// Exact levels pi^2 (m^2 + n^2) / L^2 with m > n >= 1, ascending.
std::vector<TriangleLevel> triangle_exact_levels(double L, int count);

// Dirichlet Laplacian on {0 <= y <= x <= L}, solved at h, h/2, ... (refinements extra meshes).
TriangleReport validate_triangle_spectrum(double L, double h, int refinements = 2,
                                          ElementOrder order = ElementOrder::P1);

} // namespace afa

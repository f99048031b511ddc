#pragma once

// Lagrange finite elements on a WedgeMesh: dof numbering, assembly of
//   H = c_kin * (grad u, grad v) + (V u, v),   V(x) = k/2 (x - x0)^2,
//   B = (u, v),
// and evaluation of discrete fields at points and along vertical lines.

#include "afa/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace afa {

class PhysParams;

using SpMat = Eigen::SparseMatrix<double>;

enum class ElementOrder { P1 = 1, P2 = 2 };

// Local P2 numbering: vertices 0,1,2 then edge midpoints (0,1), (1,2), (2,0).
struct DofMap {
    ElementOrder order = ElementOrder::P2;
    int n_dofs = 0;
    int n_free = 0;
    std::vector<std::array<int, 6>> cell_dofs;
    std::vector<std::array<double, 2>> coords;
    std::vector<char> constrained;  // Dirichlet dof
    std::vector<int> free_index;    // -1 for constrained dofs
    std::vector<int> free_to_dof;

    int dofs_per_cell() const { return order == ElementOrder::P1 ? 3 : 6; }
};

// Vertex dofs keep the mesh node numbering; edge dofs follow.
DofMap build_dofs(const WedgeMesh& mesh, ElementOrder order, bool impose_dirichlet = true);

struct FemProblem {
    double kinetic = 1.0;  // hbar^2 / 2M
    double spring = 0.0;   // k; zero switches the potential off
    double center = 0.0;   // R0
};

FemProblem physical_problem(const PhysParams& params);

struct Assembled {
    DofMap dofs;
    SpMat H;
    SpMat B;
};

// Matrices act on free dofs only (all dofs when impose_dirichlet is false).
// Throws GeometryError naming the first non-positive-area triangle.
Assembled assemble(const WedgeMesh& mesh, const FemProblem& problem, ElementOrder order,
                   bool impose_dirichlet = true);

// Scatter a free-dof vector into a full dof vector with zeros on constrained dofs.
Eigen::VectorXd expand(const DofMap& dofs, const Eigen::VectorXd& free_values);

struct LineSegment {
    int tri;
    double y0;
    double y1;
};

// Pieces of the vertical line at x inside each triangle, bottom to top.
std::vector<LineSegment> vertical_line(const WedgeMesh& mesh, double x);

class FieldEvaluator {
public:
    FieldEvaluator(const WedgeMesh& mesh, const DofMap& dofs) : mesh_(mesh), dofs_(dofs) {}

    // Triangle containing (x, y), or -1.
    int locate(double x, double y) const;
    double value(const Eigen::VectorXd& field, int tri, double x, double y) const;
    std::array<double, 2> gradient(const Eigen::VectorXd& field, int tri, double x, double y) const;

    // Integral over 0 <= y <= H(x) of field(x, y) * weight(y).
    template <class F>
    double line_integral(const Eigen::VectorXd& field, double x, F&& weight, int points = 6) const;

    const WedgeMesh& mesh() const { return mesh_; }
    const DofMap& dofs() const { return dofs_; }

private:
    std::array<double, 3> barycentric(int tri, double x, double y) const;

    const WedgeMesh& mesh_;
    const DofMap& dofs_;
};

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights);

template <class F>
double FieldEvaluator::line_integral(const Eigen::VectorXd& field, double x, F&& weight, int points) const {
    std::vector<double> gx, gw;
    gauss_legendre01(points, gx, gw);
    double sum = 0.0;
    for (const LineSegment& s : vertical_line(mesh_, x)) {
        const double len = s.y1 - s.y0;
        for (int q = 0; q < points; ++q) {
            const double y = s.y0 + gx[q] * len;
            sum += gw[q] * len * value(field, s.tri, x, y) * weight(y);
        }
    }
    return sum;
}

} // namespace afa

#pragma once

// Boundary Husimi densities. The normal derivative of a Dirichlet mode on the
// wedge edge y = tan(theta) x is windowed with Gaussian coherent states in the
// arclength s. The result is expressed in the impact chart (R, P + p) through
// R = s cos(theta) and P + p = p_s / cos(theta).

#include "afa/analysis.hpp"

#include <complex>
#include <vector>

namespace afa {

struct BoundarySamples {
    double s0 = 0.0;
    double ds = 0.0;
    std::vector<std::complex<double>> u;
    double s_at(std::size_t k) const { return s0 + static_cast<double>(k) * ds; }
};

// Outward normal derivative on the wedge edge between x_cut and x_max, sampled
// every ds in arclength (0: a quarter of the mesh size).
BoundarySamples boundary_normal_derivative(const FieldEvaluator& ev, const Eigen::VectorXd& psi,
                                           const PhysParams& params, double ds = 0.0);

// H(q, p) = |sum_k u(s_k) exp(-(s_k - q)^2 / (2 sigma^2)) exp(-i p (s_k - q) / hbar) ds|^2 on a
// grid in (s, p_s) units, normalized to unit sum. Throws NumericalError when
// sigma is below two sample spacings.
std::vector<double> husimi_transform(const BoundarySamples& u, double sigma, const ChartGrid& grid, double hbar);

// Coherent-state width along the edge: sqrt(hbar / (M omega)) / cos(theta).
double default_boundary_sigma(const PhysParams& params);

// (R, P + p) chart covering the energy shell at `energy`.
ChartGrid default_impact_chart(const PhysParams& params, double energy, double x_min, double x_max, int nq = 120,
                               int np = 120);

// Husimi density of a mode on an impact-chart grid. mesh_h is the element size
// used for the undersampling check (sigma >= 2 mesh_h).
HusimiGrid husimi_boundary(const BoundarySamples& u, double sigma, const ChartGrid& chart, const PhysParams& params,
                           double mesh_h);

} // namespace afa

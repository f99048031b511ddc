#pragma once

// Channel analysis of wedge eigenmodes and the semiclassical criteria.

#include "afa/bo_solver.hpp"
#include "afa/classical.hpp"
#include "afa/core_model.hpp"
#include "afa/fem.hpp"

#include <functional>
#include <string>
#include <vector>

namespace afa {

// Quadrature along the vertical line x of a wedge field: nodes y, weights w, values f.
class LineField {
public:
    virtual ~LineField() = default;
    virtual void line(double x, std::vector<double>& y, std::vector<double>& w, std::vector<double>& f) const = 0;
};

// Piecewise-polynomial FEM field; Gauss points on every element piece.
class FemLineField : public LineField {
public:
    FemLineField(const FieldEvaluator& ev, const Eigen::VectorXd& psi, int points = 6)
        : ev_(ev), psi_(psi), points_(points) {}
    void line(double x, std::vector<double>& y, std::vector<double>& w, std::vector<double>& f) const override;

private:
    const FieldEvaluator& ev_;
    const Eigen::VectorXd& psi_;
    int points_;
};

// Any callable f(x, y) on 0 <= y <= tan_theta x; composite Gauss rule with `panels` panels.
class FunctionLineField : public LineField {
public:
    FunctionLineField(std::function<double(double, double)> f, double tan_theta, int panels = 64, int points = 8)
        : f_(std::move(f)), tan_(tan_theta), panels_(panels), points_(points) {}
    void line(double x, std::vector<double>& y, std::vector<double>& w, std::vector<double>& f) const override;

private:
    std::function<double(double, double)> f_;
    double tan_;
    int panels_;
    int points_;
};

struct XGrid {
    double x_min = 0.1;
    double x_max = 10.0;
    int n_points = 1501;
    double at(int i) const { return x_min + (x_max - x_min) * i / (n_points - 1); }
    double dx() const { return (x_max - x_min) / (n_points - 1); }
};

// Simpson weights on a uniform grid (trapezoid on a trailing odd interval).
std::vector<double> integration_weights(const XGrid& g);

struct ChannelSpectrum {
    int mode_id = -1;
    double E = 0.0;
    std::vector<double> F;       // |F(n)| = |int int Psi sin(n pi y / (x tan)) dy dx|, n = 1..n_max
    std::vector<double> weights; // w_n = int psi_n(x)^2 dx
    double captured = 0.0;       // sum of weights
    int dominant = 0;            // n with the largest weight
    double dominant_weight = 0.0;
    double participation = 0.0;  // 1 / sum (w_n / sum w)^2
    bool truncation_warning = false; // captured < 0.99
    std::vector<std::vector<double>> profiles; // psi_n(x) on the grid, kept when requested
};

ChannelSpectrum channel_decomposition(const LineField& field, const XGrid& grid, int n_max,
                                      const PhysParams& params, bool keep_profiles = false);

struct WallProfile {
    int n = 0;
    XGrid grid;
    std::vector<double> psi; // unit L2 norm on the grid
    double raw_norm = 0.0;   // before normalization
};

// Throws NumericalError when the raw projection norm is below min_norm.
WallProfile extract_wall_wavefunction(const LineField& field, int n, const XGrid& grid, const PhysParams& params,
                                      double min_norm = 1e-3);

struct BOComparison {
    double overlap = 0.0;  // |<psi|xi>|^2
    double l2_error = 0.0; // min over sign of ||psi -+ xi||
};

// Resamples xi onto the profile grid. Throws NumericalError when the profile
// grid leaves the BO grid.
BOComparison compare_bo(const WallProfile& psi, const BOEigenPair& xi);

struct BOMatch {
    int nu_overlap = -1;    // level of channel n with the largest overlap
    double overlap = 0.0;
    double l2_error = 0.0;
    double E_bo = 0.0;
    int nu_energy = -1;     // level of channel n nearest in energy
    double overlap_energy = 0.0;
    double E_bo_energy = 0.0;
};

BOMatch match_bo_level(const WallProfile& psi, double E_exact, const std::vector<BOEigenPair>& channel_levels);

// ----------------------------------------------------------------------------
// Phase-space classification

enum class MaskCell : unsigned char { Unvisited = 0, Island = 1, Sea = 2 };

struct ChartGrid {
    std::string chart = "R,P+p";
    double q_min = 0.0, q_max = 1.0;
    int nq = 1;
    double p_min = -1.0, p_max = 1.0;
    int np = 1;

    double q_at(int i) const { return q_min + (q_max - q_min) * (i + 0.5) / nq; }
    double p_at(int j) const { return p_min + (p_max - p_min) * (j + 0.5) / np; }
    int q_index(double q) const;
    int p_index(double p) const;
};

struct PhaseMask {
    ChartGrid grid;
    std::vector<MaskCell> cells; // row-major in q
    MaskCell at(double q, double p) const;
    double island_fraction() const; // island cells / visited cells
};

// Impact points of regular trajectories mark Island, of chaotic ones Sea; Sea wins.
PhaseMask build_phase_mask(std::span<const Trajectory> ensemble, const ChartGrid& grid);

// Unvisited regions enclosed by island cells become island. A torus is a curve
// on the section, so a finite ensemble leaves the island core empty while the
// sea fills its area. Components touching the sea or the chart edge are kept.
// Returns the number of cells filled.
std::size_t fill_enclosed_islands(PhaseMask& mask);

struct HusimiGrid {
    ChartGrid grid;
    std::vector<double> values; // row-major in q, non-negative, sum = 1
    double sigma = 0.0;         // coherent-state width along the boundary
};

enum class ModeClass { Regular, Chaotic };
const char* to_string(ModeClass c);

struct Classification {
    ModeClass label = ModeClass::Chaotic;
    double fraction = 0.0;  // island mass / (island + sea mass)
    double unvisited = 0.0; // Husimi mass on cells no trajectory reached
};

// Throws ConfigError when the charts differ.
Classification classify_mode(const HusimiGrid& husimi, const PhaseMask& mask, double threshold = 0.7);

// ----------------------------------------------------------------------------
// Adiabaticity and Planck cells

// <phi_n | d_R phi_m> by Gauss-Legendre quadrature over [0, R]; at least 4 (n + m) nodes.
double coupling_element(int n, int m, double R, int points = 200);
// |2 n m / ((m^2 - n^2) R)|
double coupling_element_closed_form(int n, int m, double R);

enum class WallSpeedRule { ZeroPoint, EnergyShare };
const char* to_string(WallSpeedRule r);

// ZeroPoint: sqrt(hbar omega / M). EnergyShare: sqrt(2 (E - eps_nbar(R0)) / M);
// throws NumericalError when the channel takes all the energy.
double typical_wall_speed(WallSpeedRule rule, const PhysParams& params, double energy, int n_bar);

// hbar |<phi_n|d_R phi_m>| |Rdot| / |eps_n(R) - eps_m(R)|; rejects n == m.
double adiabaticity_ratio(const PhysParams& params, int n, int m, double R_eval, double R_dot);

enum class PlanckVerdict { Unresolvable, Resolvable };
const char* to_string(PlanckVerdict v);

struct PlanckComparison {
    double cells = 0.0;
    PlanckVerdict verdict = PlanckVerdict::Unresolvable;
};

// cells = area / cell_area; cell_area defaults to hbar.
PlanckComparison planck_cell_comparison(double area, const PhysParams& params, double threshold = 2.0,
                                        double cell_area = 0.0);

// Area of the chaotic sea in the (wall phase, particle action) chart from the
// impact points of chaotic trajectories, by box counting with n_phase x n_action cells.
AreaEstimate chaotic_action_area(std::span<const Trajectory> ensemble, const PhysParams& params, int n_phase = 64,
                                 double action_cell = 0.0);

} // namespace afa

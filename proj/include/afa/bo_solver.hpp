#pragma once

// Born-Oppenheimer reduction: the particle sits in an instantaneous box
// eigenstate phi_n(r; R) and the wall moves in
//   V_eff(R) = k (R - R0)^2 / 2 + (hbar n pi)^2 / (2 m R^2).

#include "afa/core_model.hpp"

#include <vector>

namespace afa {

// sqrt(2/R) sin(n pi r / R)
double channel_function(int n, double r, double R);

// d/dR of channel_function at fixed r.
double channel_function_dR(int n, double r, double R);

struct BOOptions {
    bool channel_term = true;          // false leaves the bare oscillator (test hook)
    bool diagonal_correction = false;  // adds hbar^2/(2M) <d_R phi_n | d_R phi_n>
};

// Throws GeometryError for R <= 0 and ConfigError for n < 1.
double effective_potential(int n, double R, const PhysParams& params, const BOOptions& opts = {});

// hbar^2/(2M) (pi^2 n^2 / 3 + 1/4) / R^2
double diagonal_correction(int n, double R, const PhysParams& params);

struct BOGrid {
    double R_min = 0.1;
    double R_max = 10.0;
    int n_points = 4000; // including both Dirichlet endpoints
};

struct BOEigenPair {
    int n = 1;
    int nu = 0;
    double E = 0.0;
    double R_min = 0.0;
    double dR = 0.0;
    std::vector<double> xi; // on R_min + i dR, zero at both ends, sum xi^2 dR = 1

    double R_at(std::size_t i) const { return R_min + static_cast<double>(i) * dR; }
    double R_max() const { return R_at(xi.size() - 1); }
    // Linear interpolation; zero outside the grid.
    double value_at(double R) const;
};

struct ChannelSolution {
    std::vector<BOEigenPair> levels; // ascending
    double points_per_wavelength = 0.0;
    bool resolution_warning = false; // fewer than 10 points per local wavelength at e_ref
};

// Second-order finite differences, Dirichlet at both ends; returns every level
// below V_eff(R_max). e_ref sets the wavelength used by the resolution check.
ChannelSolution solve_channel(int n, const PhysParams& params, const BOGrid& grid, double e_ref,
                              const BOOptions& opts = {});

// Default grid [x_cut, x_max] from the wedge truncation at energy e_ref.
BOGrid default_bo_grid(const PhysParams& params, double e_ref);

// Levels of channels 1..n_max merged and sorted by energy.
std::vector<BOEigenPair> solve_levels(const PhysParams& params, int n_max, const BOGrid& grid, double e_ref,
                                      const BOOptions& opts = {});

// Single-channel product state on the wedge, evaluated at (x, y).
// Throws GeometryError outside 0 <= y <= tan(theta) x.
class BOField {
public:
    BOField(const BOEigenPair& pair, const PhysParams& params) : pair_(pair), tan_(params.tan_theta()) {}
    double operator()(double x, double y) const;

private:
    const BOEigenPair& pair_;
    double tan_;
};

} // namespace afa

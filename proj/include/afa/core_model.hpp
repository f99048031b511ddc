#pragma once

// Physical parameters, the elastic collision rule and the wedge coordinate
// map shared by the classical and quantum parts of the autonomous Fermi
// accelerator (a light particle between a fixed wall at r = 0 and a heavy
// wall on a spring at r = R).

#include <cmath>
#include <numbers>

namespace afa {

// Wedge half-opening angle for mass ratio eta: arctan(sqrt(eta)).
inline double wedge_angle(double eta) { return std::atan(std::sqrt(eta)); }

class PhysParams {
public:
    // Validates 0 < eta < 1 and M, k, hbar, R0 > 0; throws ConfigError.
    static PhysParams make(double eta, double M = 1.0, double k = 1.0, double hbar = 0.1,
                           double R0 = 5.0);

    double eta() const { return eta_; }
    double M() const { return M_; }
    double k() const { return k_; }
    double hbar() const { return hbar_; }
    double R0() const { return R0_; }

    double m() const { return eta_ * M_; }
    double omega() const { return std::sqrt(k_ / M_); }
    double theta() const { return wedge_angle(eta_); }
    double tan_theta() const { return std::sqrt(eta_); }

    // Harmonic wall potential k (R - R0)^2 / 2.
    double wall_potential(double R) const { return 0.5 * k_ * (R - R0_) * (R - R0_); }

    // Particle-in-box channel energy (hbar n pi)^2 / (2 m R^2).
    double channel_energy(int n, double R) const {
        const double a = hbar_ * n * std::numbers::pi;
        return a * a / (2.0 * m() * R * R);
    }

private:
    PhysParams(double eta, double M, double k, double hbar, double R0)
        : eta_(eta), M_(M), k_(k), hbar_(hbar), R0_(R0) {}

    double eta_;
    double M_;
    double k_;
    double hbar_;
    double R0_;
};

struct ClassicalState {
    double t = 0.0;
    double R = 0.0; // wall position
    double P = 0.0; // wall momentum
    double r = 0.0; // particle position, 0 <= r <= R
    double p = 0.0; // particle momentum
};

// P^2/2M + p^2/2m + k (R - R0)^2 / 2
double total_energy(const ClassicalState& s, const PhysParams& params);

struct Velocities {
    double particle; // v
    double wall;     // V
};

// Post-collision velocities of a perfectly elastic particle/wall impact.
// Only the mass ratio enters; eta = 1 exchanges the velocities.
Velocities elastic_collision(double v, double V, double eta);

struct WedgePoint {
    double x;
    double y;
};

struct PhysicalPoint {
    double R;
    double r;
};

// x = R, y = sqrt(eta) r. Maps 0 <= r <= R onto 0 <= y <= tan(theta) x.
// Throws GeometryError for r > R or negative coordinates.
WedgePoint to_wedge(double R, double r, const PhysParams& params);
PhysicalPoint from_wedge(double x, double y, const PhysParams& params);

} // namespace afa

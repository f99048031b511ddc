#pragma once

// Event-driven dynamics of the autonomous Fermi accelerator. Between impacts
// the wall moves on its analytic harmonic orbit and the particle flies freely,
// so the only numerical step is locating impact times.

#include "afa/core_model.hpp"
#include "afa/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace afa {

enum class CollisionKind { MovingWall, FixedWall };

const char* to_string(CollisionKind kind);

struct CollisionEvent {
    double t = 0.0;
    CollisionKind kind = CollisionKind::FixedWall;
    ClassicalState state_after;
    // Second MovingWall impact with no FixedWall impact in between.
    bool double_flag = false;
};

// Thrown when an impact search fails. event_index is filled in by simulate().
class CollisionError : public NumericalError {
public:
    CollisionError(const std::string& what, long event_index = -1)
        : NumericalError(what), event_index_(event_index) {}
    long event_index() const { return event_index_; }

private:
    long event_index_;
};

class NoRootInHorizon : public CollisionError {
public:
    using CollisionError::CollisionError;
};

class GrazingContact : public CollisionError {
public:
    using CollisionError::CollisionError;
};

struct CollisionOptions {
    int scan_steps_per_period = 256;
    double rel_time_tol = 1e-12;
    double horizon_periods = 10.0;
    // Impacts slower than graze_factor * sqrt(2E/m) are reported as grazing.
    double graze_factor = 1e-10;
};

struct WallState {
    double R;
    double P;
};

// Exact harmonic evolution of the wall over dt >= 0.
WallState wall_free_motion(const ClassicalState& state, double dt, const PhysParams& params);

CollisionEvent next_collision(const ClassicalState& state, const PhysParams& params,
                              const CollisionOptions& opts = {});

// Signed gap R(t) - r(t) after free evolution by dt; negative means the
// particle has crossed the moving wall.
double flight_gap(const ClassicalState& state, double dt, const PhysParams& params);

std::vector<CollisionEvent> simulate(const ClassicalState& initial, std::size_t n_events,
                                     const PhysParams& params, const CollisionOptions& opts = {});

// ---------------------------------------------------------------------------
// Surfaces of section

enum class SectionFrame { Particle, CenterOfMass };

const char* to_string(SectionFrame frame);

// Axes scaled so that the energy surface is the sphere X^2 + Y^2 + Z^2 = E.
struct SphereCoords {
    double X; // P / sqrt(2M)
    double Y; // p / sqrt(2m)
    double Z; // sqrt(k/2) (R - R0)
};

SphereCoords sphere_coords(const ClassicalState& s, const PhysParams& params);

struct SectionPoint {
    SectionFrame frame = SectionFrame::CenterOfMass;
    double q = 0.0;   // R in both frames
    double mom = 0.0; // p (particle frame) or P (center-of-mass frame)
    double t = 0.0;
    double R = 0.0;
    double P = 0.0;
    double p = 0.0;
    SphereCoords sphere{};
};

std::vector<SectionPoint> poincare_section(std::span<const CollisionEvent> events,
                                           SectionFrame frame, const PhysParams& params);

// ---------------------------------------------------------------------------
// Box counting

struct Point2 {
    double x;
    double y;
};

struct AreaEstimate {
    double area = 0.0;
    std::size_t occupied_cells = 0;
    std::size_t n_points = 0;
    bool insufficient_sampling = false; // fewer than 100 points
};

// Area of the union of grid cells (cell_dx by cell_dy, anchored at the origin)
// that contain at least one point.
AreaEstimate chaotic_area_estimate(std::span<const Point2> points, double cell_dx, double cell_dy);
inline AreaEstimate chaotic_area_estimate(std::span<const Point2> points, double cell_size) {
    return chaotic_area_estimate(points, cell_size, cell_size);
}

// ---------------------------------------------------------------------------
// Ensembles

struct Trajectory {
    std::uint64_t id = 0;
    ClassicalState initial;
    std::vector<CollisionEvent> events;
    std::size_t double_count = 0;
    std::string failure; // empty unless the event loop stopped early
    bool regular() const { return double_count == 0; }
};

struct EnsembleOptions {
    int n_trajectories = 64;
    std::size_t n_events = 5000;
    std::uint64_t seed = 1;
    double energy = 12.0;
    CollisionOptions collision{};
};

// Initial condition on the energy sphere. `u` in [0,1) stratifies the Y axis
// (uniform in Y is uniform in area on a sphere); `phase` in [0,1) sets the
// azimuth in the X-Z plane and `frac` in [0,1] the particle position r / R.
ClassicalState state_on_energy_sphere(const PhysParams& params, double energy, double u, double phase,
                                      double frac);

// Trajectories are independent; they run on a worker pool and come back in id order.
std::vector<Trajectory> run_ensemble(const PhysParams& params, const EnsembleOptions& opts);

// Center-of-mass box-counting split of an ensemble section.
struct IslandFraction {
    std::size_t regular_cells = 0;
    std::size_t chaotic_cells = 0;
    std::size_t total_cells = 0;
    double fraction = 0.0; // regular-only cells / all occupied cells
};

IslandFraction regular_island_fraction(std::span<const Trajectory> ensemble, const PhysParams& params,
                                       double cell_size);

// Chart used to compare with boundary Husimi densities: q = R at impact,
// p = P + p (total momentum, unchanged by the impact and equal to the
// tangential wedge-edge momentum divided by cos(theta)).
Point2 boundary_chart_point(const ClassicalState& s);

// Wall phase angle in [0, 2 pi) and particle action |p| R / pi averaged over
// the incoming and outgoing legs of a moving-wall impact.
Point2 action_angle_point(const ClassicalState& after, const PhysParams& params);

} // namespace afa

#include "afa/classical.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>
#include <unordered_set>

namespace afa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct WallOrbit {
    double R0, A, B, omega, M;
    double R(double s) const { return R0 + A * std::cos(omega * s) + B * std::sin(omega * s); }
    double V(double s) const { return omega * (-A * std::sin(omega * s) + B * std::cos(omega * s)); }
};

WallOrbit orbit_of(const ClassicalState& st, const PhysParams& params) {
    const double w = params.omega();
    return {params.R0(), st.R - params.R0(), st.P / (params.M() * w), w, params.M()};
}

std::uint64_t cell_key(double x, double y, double dx, double dy) {
    const auto ix = static_cast<std::int64_t>(std::floor(x / dx));
    const auto iy = static_cast<std::int64_t>(std::floor(y / dy));
    return (static_cast<std::uint64_t>(ix) << 32) ^ (static_cast<std::uint64_t>(iy) & 0xffffffffULL);
}

void check_state(const ClassicalState& s) {
    if (!std::isfinite(s.R) || !std::isfinite(s.P) || !std::isfinite(s.r) || !std::isfinite(s.p)) {
        throw GeometryError("classical state is not finite");
    }
    if (s.r < 0.0 || s.r > s.R * (1.0 + 1e-12) || s.R <= 0.0) {
        throw GeometryError("classical state violates 0 <= r <= R");
    }
}

// Runs the event loop, appending to `out` so that a failure keeps the prefix.
void simulate_into(const ClassicalState& initial, std::size_t n_events, const PhysParams& params,
                   const CollisionOptions& opts, std::vector<CollisionEvent>& out) {
    check_state(initial);
    out.reserve(out.size() + n_events);
    ClassicalState st = initial;
    bool last_moving = false;
    for (std::size_t i = 0; i < n_events; ++i) {
        CollisionEvent ev;
        try {
            ev = next_collision(st, params, opts);
        } catch (const GrazingContact& e) {
            throw GrazingContact(e.what(), static_cast<long>(i));
        } catch (const NoRootInHorizon& e) {
            throw NoRootInHorizon(e.what(), static_cast<long>(i));
        }
        const bool moving = ev.kind == CollisionKind::MovingWall;
        ev.double_flag = moving && last_moving;
        last_moving = moving;
        st = ev.state_after;
        out.push_back(ev);
    }
}

} // namespace

const char* to_string(CollisionKind kind) {
    return kind == CollisionKind::MovingWall ? "moving" : "fixed";
}

const char* to_string(SectionFrame frame) {
    return frame == SectionFrame::Particle ? "particle" : "cm";
}

WallState wall_free_motion(const ClassicalState& state, double dt, const PhysParams& params) {
    const WallOrbit w = orbit_of(state, params);
    return {w.R(dt), params.M() * w.V(dt)};
}

double flight_gap(const ClassicalState& state, double dt, const PhysParams& params) {
    return orbit_of(state, params).R(dt) - (state.r + state.p / params.m() * dt);
}

CollisionEvent next_collision(const ClassicalState& state, const PhysParams& params,
                              const CollisionOptions& opts) {
    const WallOrbit w = orbit_of(state, params);
    const double m = params.m();
    const double v = state.p / m;
    const double T = kTwoPi / w.omega;
    const double vref = std::sqrt(2.0 * std::max(total_energy(state, params), 0.0) / m);

    const double t_fixed = v < 0.0 ? state.r / (-v) : std::numeric_limits<double>::infinity();
    const double horizon = std::min(t_fixed, opts.horizon_periods * T);

    auto gap = [&](double s) { return w.R(s) - (state.r + v * s); };

    // Scan nodes: a uniform grid plus every extremum of the gap, so that the
    // gap is monotone between consecutive nodes.
    std::vector<double> nodes;
    const double ds = T / opts.scan_steps_per_period;
    for (double s = ds; s < horizon; s += ds) {
        nodes.push_back(s);
    }
    nodes.push_back(horizon);
    const double C = std::hypot(w.A, w.B);
    if (C > 0.0 && std::abs(v) <= w.omega * C) {
        // B cos(x) - A sin(x) = C cos(x + phi0)
        const double phi0 = std::atan2(w.A, w.B);
        const double a = std::acos(std::clamp(v / (w.omega * C), -1.0, 1.0));
        const double jmax = std::ceil((w.omega * horizon + std::abs(phi0) + a) / kTwoPi) + 1.0;
        for (double j = -1.0; j <= jmax; j += 1.0) {
            for (double sgn : {1.0, -1.0}) {
                const double s = (sgn * a - phi0 + kTwoPi * j) / w.omega;
                if (s > 0.0 && s < horizon) {
                    nodes.push_back(s);
                }
            }
        }
    }
    std::sort(nodes.begin(), nodes.end());

    double s_prev = 0.0;
    // A state sitting on the wall may show a gap of -1 ulp.
    double g_prev = std::max(gap(0.0), 0.0);
    for (double s : nodes) {
        if (!std::isfinite(s)) {
            break;
        }
        const double g = gap(s);
        if (g < 0.0 && g_prev >= 0.0) {
            double a = s_prev;
            double b = s;
            const double tol = opts.rel_time_tol * b;
            while (b - a > tol) {
                const double mid = 0.5 * (a + b);
                if (mid <= a || mid >= b) {
                    break;
                }
                if (gap(mid) >= 0.0) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            const double V = w.V(a);
            const double approach = v - V;
            if (!(approach > opts.graze_factor * vref)) {
                throw GrazingContact("grazing impact on the moving wall (approach speed " +
                                     std::to_string(approach) + ")");
            }
            const Velocities out = elastic_collision(v, V, params.eta());
            CollisionEvent ev;
            ev.t = state.t + a;
            ev.kind = CollisionKind::MovingWall;
            ev.state_after.t = ev.t;
            ev.state_after.R = w.R(a);
            ev.state_after.P = params.M() * out.wall;
            ev.state_after.r = ev.state_after.R;
            ev.state_after.p = m * out.particle;
            return ev;
        }
        s_prev = s;
        g_prev = g;
        if (s >= horizon) {
            break;
        }
    }

    if (std::isfinite(t_fixed) && t_fixed <= horizon) {
        CollisionEvent ev;
        ev.t = state.t + t_fixed;
        ev.kind = CollisionKind::FixedWall;
        ev.state_after.t = ev.t;
        ev.state_after.R = w.R(t_fixed);
        ev.state_after.P = params.M() * w.V(t_fixed);
        ev.state_after.r = 0.0;
        ev.state_after.p = -state.p;
        return ev;
    }
    throw NoRootInHorizon("no impact within " + std::to_string(opts.horizon_periods) + " wall periods");
}

std::vector<CollisionEvent> simulate(const ClassicalState& initial, std::size_t n_events,
                                     const PhysParams& params, const CollisionOptions& opts) {
    std::vector<CollisionEvent> out;
    simulate_into(initial, n_events, params, opts, out);
    return out;
}

SphereCoords sphere_coords(const ClassicalState& s, const PhysParams& params) {
    return {s.P / std::sqrt(2.0 * params.M()), s.p / std::sqrt(2.0 * params.m()),
            std::sqrt(0.5 * params.k()) * (s.R - params.R0())};
}

std::vector<SectionPoint> poincare_section(std::span<const CollisionEvent> events, SectionFrame frame,
                                           const PhysParams& params) {
    std::vector<SectionPoint> pts;
    for (const CollisionEvent& ev : events) {
        if (ev.kind != CollisionKind::MovingWall) {
            continue;
        }
        const ClassicalState& s = ev.state_after;
        SectionPoint sp;
        sp.frame = frame;
        sp.q = s.R;
        sp.mom = frame == SectionFrame::Particle ? s.p : s.P;
        sp.t = ev.t;
        sp.R = s.R;
        sp.P = s.P;
        sp.p = s.p;
        sp.sphere = sphere_coords(s, params);
        pts.push_back(sp);
    }
    return pts;
}

AreaEstimate chaotic_area_estimate(std::span<const Point2> points, double cell_dx, double cell_dy) {
    if (!(cell_dx > 0.0) || !(cell_dy > 0.0)) {
        throw ConfigError("box-counting cell size must be positive");
    }
    std::unordered_set<std::uint64_t> cells;
    cells.reserve(points.size());
    for (const Point2& p : points) {
        cells.insert(cell_key(p.x, p.y, cell_dx, cell_dy));
    }
    AreaEstimate est;
    est.n_points = points.size();
    est.occupied_cells = cells.size();
    est.area = static_cast<double>(cells.size()) * cell_dx * cell_dy;
    est.insufficient_sampling = points.size() < 100;
    return est;
}

ClassicalState state_on_energy_sphere(const PhysParams& params, double energy, double u, double phase,
                                      double frac) {
    if (!(energy > 0.0)) {
        throw ConfigError("ensemble energy must be positive");
    }
    const double rootE = std::sqrt(energy);
    const double Y = rootE * (2.0 * std::clamp(u, 0.0, 1.0) - 1.0);
    const double rho = std::sqrt(std::max(energy - Y * Y, 0.0));
    const double X = rho * std::cos(kTwoPi * phase);
    const double Z = rho * std::sin(kTwoPi * phase);
    ClassicalState s;
    s.P = X * std::sqrt(2.0 * params.M());
    s.p = Y * std::sqrt(2.0 * params.m());
    s.R = params.R0() + Z / std::sqrt(0.5 * params.k());
    if (!(s.R > 0.0)) {
        throw ConfigError("energy too high: the wall reaches the fixed wall");
    }
    s.r = std::clamp(frac, 0.0, 1.0) * s.R;
    return s;
}

std::vector<Trajectory> run_ensemble(const PhysParams& params, const EnsembleOptions& opts) {
    if (opts.n_trajectories <= 0) {
        throw ConfigError("ensemble needs at least one trajectory");
    }
    const auto n = static_cast<std::size_t>(opts.n_trajectories);
    std::vector<Trajectory> out(n);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(i)};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            Trajectory& tr = out[i];
            tr.id = i;
            const double u = (static_cast<double>(i) + U(rng)) / static_cast<double>(n);
            const double phase = U(rng);
            const double frac = U(rng);
            tr.initial = state_on_energy_sphere(params, opts.energy, u, phase, frac);
            try {
                simulate_into(tr.initial, opts.n_events, params, opts.collision, tr.events);
            } catch (const CollisionError& e) {
                tr.failure = e.what();
            }
            tr.double_count = static_cast<std::size_t>(
                std::count_if(tr.events.begin(), tr.events.end(),
                              [](const CollisionEvent& ev) { return ev.double_flag; }));
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(hw, n));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    return out;
}

IslandFraction regular_island_fraction(std::span<const Trajectory> ensemble, const PhysParams& params,
                                       double cell_size) {
    if (!(cell_size > 0.0)) {
        throw ConfigError("box-counting cell size must be positive");
    }
    std::unordered_set<std::uint64_t> reg;
    std::unordered_set<std::uint64_t> cha;
    for (const Trajectory& tr : ensemble) {
        auto& target = tr.regular() ? reg : cha;
        for (const SectionPoint& sp : poincare_section(tr.events, SectionFrame::CenterOfMass, params)) {
            target.insert(cell_key(sp.q, sp.mom, cell_size, cell_size));
        }
    }
    IslandFraction f;
    f.chaotic_cells = cha.size();
    std::size_t reg_only = 0;
    for (auto key : reg) {
        if (!cha.contains(key)) {
            ++reg_only;
        }
    }
    f.regular_cells = reg_only;
    f.total_cells = cha.size() + reg_only;
    f.fraction = f.total_cells ? static_cast<double>(reg_only) / static_cast<double>(f.total_cells) : 0.0;
    return f;
}

Point2 boundary_chart_point(const ClassicalState& s) { return {s.R, s.P + s.p}; }

Point2 action_angle_point(const ClassicalState& after, const PhysParams& params) {
    const double w = params.omega();
    double phi = std::atan2(-after.P / (params.M() * w), after.R - params.R0());
    if (phi < 0.0) {
        phi += kTwoPi;
    }
    // the elastic map is an involution, so applying it again recovers the incoming leg
    const double m = params.m();
    const Velocities in = elastic_collision(after.p / m, after.P / params.M(), params.eta());
    const double J = m * after.R * 0.5 * (std::abs(in.particle) + std::abs(after.p / m));
    return {phi, J / std::numbers::pi};
}

} // namespace afa

#include "afa/analysis.hpp"

#include "afa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace afa {

void FemLineField::line(double x, std::vector<double>& y, std::vector<double>& w, std::vector<double>& f) const {
    std::vector<double> gx, gw;
    gauss_legendre01(points_, gx, gw);
    y.clear();
    w.clear();
    f.clear();
    for (const LineSegment& s : vertical_line(ev_.mesh(), x)) {
        const double len = s.y1 - s.y0;
        for (int q = 0; q < points_; ++q) {
            const double yy = s.y0 + gx[q] * len;
            y.push_back(yy);
            w.push_back(gw[q] * len);
            f.push_back(ev_.value(psi_, s.tri, x, yy));
        }
    }
}

void FunctionLineField::line(double x, std::vector<double>& y, std::vector<double>& w, std::vector<double>& f) const {
    std::vector<double> gx, gw;
    gauss_legendre01(points_, gx, gw);
    y.clear();
    w.clear();
    f.clear();
    const double H = tan_ * x;
    if (!(H > 0.0)) return;
    const double len = H / panels_;
    for (int k = 0; k < panels_; ++k) {
        for (int q = 0; q < points_; ++q) {
            const double yy = (k + gx[q]) * len;
            y.push_back(yy);
            w.push_back(gw[q] * len);
            f.push_back(f_(x, yy));
        }
    }
}

std::vector<double> integration_weights(const XGrid& g) {
    const int n = g.n_points;
    if (n < 2) {
        throw ConfigError("integration grid needs at least two points");
    }
    const double h = g.dx();
    std::vector<double> w(n, 0.0);
    const int simpson_end = (n % 2 == 1) ? n - 1 : n - 2; // last index covered by Simpson
    if (simpson_end >= 2) {
        for (int i = 0; i <= simpson_end; ++i) {
            const double c = (i == 0 || i == simpson_end) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            w[i] += c * h / 3.0;
        }
    }
    for (int i = std::max(simpson_end, 0); i < n - 1; ++i) {
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

namespace {

// psi_n(x) for n = 1..n_max and the raw line integrals int Psi sin dy.
void project_line(const LineField& field, double x, double tan_theta, int n_max, std::vector<double>& raw,
                  std::vector<double>& ys, std::vector<double>& ws, std::vector<double>& fs) {
    raw.assign(n_max, 0.0);
    const double H = x * tan_theta;
    if (!(H > 0.0)) return;
    field.line(x, ys, ws, fs);
    for (std::size_t q = 0; q < ys.size(); ++q) {
        const double a = std::numbers::pi * ys[q] / H;
        const double c2 = 2.0 * std::cos(a);
        double s_prev = 0.0;
        double s = std::sin(a);
        const double wf = ws[q] * fs[q];
        for (int n = 0; n < n_max; ++n) {
            raw[n] += wf * s;
            const double next = c2 * s - s_prev;
            s_prev = s;
            s = next;
        }
    }
}

} // namespace

ChannelSpectrum channel_decomposition(const LineField& field, const XGrid& grid, int n_max, const PhysParams& params,
                                      bool keep_profiles) {
    if (n_max < 1) {
        throw ConfigError("n_max must be at least 1");
    }
    const auto W = integration_weights(grid);
    const double tan_theta = params.tan_theta();
    ChannelSpectrum cs;
    cs.F.assign(n_max, 0.0);
    cs.weights.assign(n_max, 0.0);
    if (keep_profiles) cs.profiles.assign(n_max, std::vector<double>(grid.n_points, 0.0));
    std::vector<double> raw, ys, ws, fs;
    std::vector<double> Fsigned(n_max, 0.0);
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.at(i);
        project_line(field, x, tan_theta, n_max, raw, ys, ws, fs);
        const double H = x * tan_theta;
        const double norm = H > 0.0 ? std::sqrt(2.0 / H) : 0.0;
        for (int n = 0; n < n_max; ++n) {
            const double psi_n = norm * raw[n];
            cs.weights[n] += W[i] * psi_n * psi_n;
            Fsigned[n] += W[i] * raw[n];
            if (keep_profiles) cs.profiles[n][i] = psi_n;
        }
    }
    for (int n = 0; n < n_max; ++n) cs.F[n] = std::abs(Fsigned[n]);
    double sum = 0.0;
    double sum2 = 0.0;
    for (int n = 0; n < n_max; ++n) {
        sum += cs.weights[n];
        if (cs.weights[n] > cs.dominant_weight) {
            cs.dominant_weight = cs.weights[n];
            cs.dominant = n + 1;
        }
    }
    for (int n = 0; n < n_max; ++n) {
        const double q = sum > 0.0 ? cs.weights[n] / sum : 0.0;
        sum2 += q * q;
    }
    cs.captured = sum;
    cs.participation = sum2 > 0.0 ? 1.0 / sum2 : 0.0;
    cs.truncation_warning = sum < 0.99;
    return cs;
}

WallProfile extract_wall_wavefunction(const LineField& field, int n, const XGrid& grid, const PhysParams& params,
                                      double min_norm) {
    if (n < 1) {
        throw ConfigError("channel index must be at least 1");
    }
    const auto W = integration_weights(grid);
    WallProfile wp;
    wp.n = n;
    wp.grid = grid;
    wp.psi.assign(grid.n_points, 0.0);
    std::vector<double> raw, ys, ws, fs;
    double norm2 = 0.0;
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.at(i);
        project_line(field, x, params.tan_theta(), n, raw, ys, ws, fs);
        const double H = x * params.tan_theta();
        wp.psi[i] = H > 0.0 ? std::sqrt(2.0 / H) * raw[n - 1] : 0.0;
        norm2 += W[i] * wp.psi[i] * wp.psi[i];
    }
    wp.raw_norm = std::sqrt(norm2);
    if (!(wp.raw_norm >= min_norm)) {
        throw NumericalError("wall wavefunction of channel " + std::to_string(n) + " has negligible norm " +
                             std::to_string(wp.raw_norm));
    }
    for (double& v : wp.psi) v /= wp.raw_norm;
    return wp;
}

BOComparison compare_bo(const WallProfile& psi, const BOEigenPair& xi) {
    const double tol = 1e-9 * std::max(1.0, std::abs(xi.R_max()));
    if (psi.grid.x_min < xi.R_min - tol || psi.grid.x_max > xi.R_max() + tol) {
        throw NumericalError("compare_bo: profile grid lies outside the BO grid");
    }
    const auto W = integration_weights(psi.grid);
    std::vector<double> x(psi.grid.n_points);
    double nxi = 0.0;
    double npsi = 0.0;
    double dot = 0.0;
    for (int i = 0; i < psi.grid.n_points; ++i) {
        x[i] = xi.value_at(psi.grid.at(i));
        nxi += W[i] * x[i] * x[i];
        npsi += W[i] * psi.psi[i] * psi.psi[i];
        dot += W[i] * x[i] * psi.psi[i];
    }
    BOComparison c;
    if (!(nxi > 0.0) || !(npsi > 0.0)) {
        throw NumericalError("compare_bo: zero-norm input");
    }
    const double s = dot / std::sqrt(nxi * npsi);
    c.overlap = std::min(1.0, s * s);
    c.l2_error = std::sqrt(std::max(0.0, 2.0 - 2.0 * std::abs(s)));
    return c;
}

BOMatch match_bo_level(const WallProfile& psi, double E_exact, const std::vector<BOEigenPair>& channel_levels) {
    BOMatch m;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const BOEigenPair& lv : channel_levels) {
        if (lv.n != psi.n) continue;
        const BOComparison c = compare_bo(psi, lv);
        if (c.overlap > m.overlap || m.nu_overlap < 0) {
            m.nu_overlap = lv.nu;
            m.overlap = c.overlap;
            m.l2_error = c.l2_error;
            m.E_bo = lv.E;
        }
        const double gap = std::abs(lv.E - E_exact);
        if (gap < best_gap) {
            best_gap = gap;
            m.nu_energy = lv.nu;
            m.overlap_energy = c.overlap;
            m.E_bo_energy = lv.E;
        }
    }
    return m;
}

int ChartGrid::q_index(double q) const {
    const double s = (q - q_min) / (q_max - q_min) * nq;
    if (!(s >= 0.0) || s >= nq) return -1;
    return static_cast<int>(s);
}

int ChartGrid::p_index(double p) const {
    const double s = (p - p_min) / (p_max - p_min) * np;
    if (!(s >= 0.0) || s >= np) return -1;
    return static_cast<int>(s);
}

MaskCell PhaseMask::at(double q, double p) const {
    const int i = grid.q_index(q);
    const int j = grid.p_index(p);
    if (i < 0 || j < 0) return MaskCell::Unvisited;
    return cells[static_cast<std::size_t>(i) * grid.np + j];
}

double PhaseMask::island_fraction() const {
    std::size_t island = 0;
    std::size_t visited = 0;
    for (MaskCell c : cells) {
        if (c == MaskCell::Island) ++island;
        if (c != MaskCell::Unvisited) ++visited;
    }
    return visited ? static_cast<double>(island) / static_cast<double>(visited) : 0.0;
}

PhaseMask build_phase_mask(std::span<const Trajectory> ensemble, const ChartGrid& grid) {
    if (grid.nq < 1 || grid.np < 1 || !(grid.q_max > grid.q_min) || !(grid.p_max > grid.p_min)) {
        throw ConfigError("phase mask grid is empty");
    }
    PhaseMask mask;
    mask.grid = grid;
    mask.cells.assign(static_cast<std::size_t>(grid.nq) * grid.np, MaskCell::Unvisited);
    for (const Trajectory& tr : ensemble) {
        const MaskCell mark = tr.regular() ? MaskCell::Island : MaskCell::Sea;
        for (const CollisionEvent& ev : tr.events) {
            if (ev.kind != CollisionKind::MovingWall) continue;
            const Point2 pt = boundary_chart_point(ev.state_after);
            const int i = grid.q_index(pt.x);
            const int j = grid.p_index(pt.y);
            if (i < 0 || j < 0) continue;
            MaskCell& c = mask.cells[static_cast<std::size_t>(i) * grid.np + j];
            if (c != MaskCell::Sea) c = mark;
        }
    }
    return mask;
}

std::size_t fill_enclosed_islands(PhaseMask& mask) {
    const int nq = mask.grid.nq, np = mask.grid.np;
    auto idx = [np](int i, int j) { return static_cast<std::size_t>(i) * np + j; };
    std::vector<char> seen(mask.cells.size(), 0);
    std::vector<std::pair<int, int>> stack, comp;
    std::size_t filled = 0;
    for (int i0 = 0; i0 < nq; ++i0) {
        for (int j0 = 0; j0 < np; ++j0) {
            if (seen[idx(i0, j0)] || mask.cells[idx(i0, j0)] != MaskCell::Unvisited) continue;
            bool open = false, island = false;
            comp.clear();
            stack.assign(1, {i0, j0});
            seen[idx(i0, j0)] = 1;
            while (!stack.empty()) {
                const auto [i, j] = stack.back();
                stack.pop_back();
                comp.push_back({i, j});
                const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const int a = i + di[d], b = j + dj[d];
                    if (a < 0 || b < 0 || a >= nq || b >= np) {
                        open = true;
                        continue;
                    }
                    const MaskCell c = mask.cells[idx(a, b)];
                    if (c == MaskCell::Sea) open = true;
                    if (c == MaskCell::Island) island = true;
                    if (c == MaskCell::Unvisited && !seen[idx(a, b)]) {
                        seen[idx(a, b)] = 1;
                        stack.push_back({a, b});
                    }
                }
            }
            if (open || !island) continue;
            for (const auto& [i, j] : comp) mask.cells[idx(i, j)] = MaskCell::Island;
            filled += comp.size();
        }
    }
    return filled;
}

const char* to_string(ModeClass c) { return c == ModeClass::Regular ? "regular" : "chaotic"; }

Classification classify_mode(const HusimiGrid& husimi, const PhaseMask& mask, double threshold) {
    if (husimi.grid.chart != mask.grid.chart) {
        throw ConfigError("Husimi chart '" + husimi.grid.chart + "' does not match mask chart '" + mask.grid.chart + "'");
    }
    if (husimi.values.size() != static_cast<std::size_t>(husimi.grid.nq) * husimi.grid.np) {
        throw ConfigError("Husimi grid size does not match its chart");
    }
    double island = 0.0;
    double sea = 0.0;
    double other = 0.0;
    for (int i = 0; i < husimi.grid.nq; ++i) {
        for (int j = 0; j < husimi.grid.np; ++j) {
            const double v = husimi.values[static_cast<std::size_t>(i) * husimi.grid.np + j];
            switch (mask.at(husimi.grid.q_at(i), husimi.grid.p_at(j))) {
            case MaskCell::Island: island += v; break;
            case MaskCell::Sea: sea += v; break;
            default: other += v; break;
            }
        }
    }
    Classification c;
    const double total = island + sea + other;
    c.fraction = island + sea > 0.0 ? island / (island + sea) : 0.0;
    c.unvisited = total > 0.0 ? other / total : 0.0;
    c.label = c.fraction >= threshold ? ModeClass::Regular : ModeClass::Chaotic;
    return c;
}

double coupling_element(int n, int m, double R, int points) {
    points = std::max(points, 4 * (n + m));
    std::vector<double> gx, gw;
    gauss_legendre01(points, gx, gw);
    double s = 0.0;
    for (int q = 0; q < points; ++q) {
        const double r = gx[q] * R;
        s += gw[q] * R * channel_function(n, r, R) * channel_function_dR(m, r, R);
    }
    return s;
}

double coupling_element_closed_form(int n, int m, double R) {
    if (n == m) return 0.0;
    return std::abs(2.0 * n * m / ((static_cast<double>(m) * m - static_cast<double>(n) * n) * R));
}

const char* to_string(WallSpeedRule r) { return r == WallSpeedRule::ZeroPoint ? "zero_point" : "energy_share"; }

double typical_wall_speed(WallSpeedRule rule, const PhysParams& params, double energy, int n_bar) {
    if (rule == WallSpeedRule::ZeroPoint) {
        return std::sqrt(params.hbar() * params.omega() / params.M());
    }
    const double e_wall = energy - params.channel_energy(n_bar, params.R0());
    if (!(e_wall > 0.0)) {
        throw NumericalError("energy-share wall speed undefined: channel " + std::to_string(n_bar) +
                             " exceeds the energy at R0");
    }
    return std::sqrt(2.0 * e_wall / params.M());
}

double adiabaticity_ratio(const PhysParams& params, int n, int m, double R_eval, double R_dot) {
    if (n == m) {
        throw ConfigError("adiabaticity ratio needs distinct channels");
    }
    if (n < 1 || m < 1 || !(R_eval > 0.0)) {
        throw ConfigError("adiabaticity ratio needs n, m >= 1 and R > 0");
    }
    const double gap = std::abs(params.channel_energy(n, R_eval) - params.channel_energy(m, R_eval));
    return params.hbar() * std::abs(coupling_element(n, m, R_eval)) * std::abs(R_dot) / gap;
}

const char* to_string(PlanckVerdict v) { return v == PlanckVerdict::Unresolvable ? "unresolvable" : "resolvable"; }

PlanckComparison planck_cell_comparison(double area, const PhysParams& params, double threshold, double cell_area) {
    const double cell = cell_area > 0.0 ? cell_area : params.hbar();
    PlanckComparison pc;
    pc.cells = area / cell;
    pc.verdict = pc.cells < threshold ? PlanckVerdict::Unresolvable : PlanckVerdict::Resolvable;
    return pc;
}

AreaEstimate chaotic_action_area(std::span<const Trajectory> ensemble, const PhysParams& params, int n_phase,
                                 double action_cell) {
    const double dphi = 2.0 * std::numbers::pi / n_phase;
    const double dI = action_cell > 0.0 ? action_cell : params.hbar() / 16.0;
    std::vector<Point2> pts;
    for (const Trajectory& tr : ensemble) {
        if (tr.regular()) continue;
        for (const CollisionEvent& ev : tr.events) {
            if (ev.kind == CollisionKind::MovingWall) pts.push_back(action_angle_point(ev.state_after, params));
        }
    }
    return chaotic_area_estimate(pts, dphi, dI);
}

} // namespace afa

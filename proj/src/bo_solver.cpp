#include "afa/bo_solver.hpp"

#include "afa/errors.hpp"
#include "afa/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace afa {

namespace {

// Eigenvalues of the symmetric tridiagonal matrix (diag d, constant off-diagonal e) below x.
int sturm_count(const std::vector<double>& d, double e, double x) {
    int count = 0;
    double q = 1.0;
    const double e2 = e * e;
    for (std::size_t i = 0; i < d.size(); ++i) {
        q = d[i] - x - (i == 0 ? 0.0 : e2 / q);
        if (q == 0.0) q = -1e-300;
        if (q < 0.0) ++count;
    }
    return count;
}

std::vector<double> inverse_iteration(const std::vector<double>& d, double e, double lambda) {
    const std::size_t n = d.size();
    std::vector<double> v(n, 1.0), c(n), rhs(n);
    const double shift = lambda + 1e-13 * std::max(1.0, std::abs(lambda));
    for (int it = 0; it < 4; ++it) {
        rhs = v;
        // Thomas algorithm on (T - shift)
        double b = d[0] - shift;
        if (b == 0.0) b = 1e-300;
        c[0] = e / b;
        rhs[0] /= b;
        for (std::size_t i = 1; i < n; ++i) {
            double m = d[i] - shift - e * c[i - 1];
            if (m == 0.0) m = 1e-300;
            c[i] = e / m;
            rhs[i] = (rhs[i] - e * rhs[i - 1]) / m;
        }
        for (std::size_t i = n - 1; i-- > 0;) {
            rhs[i] -= c[i] * rhs[i + 1];
        }
        double norm = 0.0;
        for (double x : rhs) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) v[i] = rhs[i] / norm;
    }
    return v;
}

} // namespace

double channel_function(int n, double r, double R) {
    return std::sqrt(2.0 / R) * std::sin(n * std::numbers::pi * r / R);
}

double channel_function_dR(int n, double r, double R) {
    const double k = n * std::numbers::pi / R;
    return std::sqrt(2.0) * (-0.5 * std::pow(R, -1.5) * std::sin(k * r) - std::pow(R, -0.5) * std::cos(k * r) * k * r / R);
}

double diagonal_correction(int n, double R, const PhysParams& params) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return params.hbar() * params.hbar() / (2.0 * params.M()) * (pi2 * n * n / 3.0 + 0.25) / (R * R);
}

double effective_potential(int n, double R, const PhysParams& params, const BOOptions& opts) {
    if (n < 1) {
        throw ConfigError("channel index must be at least 1");
    }
    if (!(R > 0.0)) {
        throw GeometryError("effective potential needs R > 0");
    }
    double V = params.wall_potential(R);
    if (opts.channel_term) V += params.channel_energy(n, R);
    if (opts.diagonal_correction) V += diagonal_correction(n, R, params);
    return V;
}

double BOEigenPair::value_at(double R) const {
    if (xi.empty() || R <= R_min || R >= R_max()) return 0.0;
    const double s = (R - R_min) / dR;
    const auto i = std::min(static_cast<std::size_t>(s), xi.size() - 2);
    const double f = s - static_cast<double>(i);
    return (1.0 - f) * xi[i] + f * xi[i + 1];
}

BOGrid default_bo_grid(const PhysParams& params, double e_ref) {
    const Truncation t = truncation_rule(params, e_ref);
    BOGrid g;
    g.R_min = t.x_cut;
    g.R_max = t.x_max;
    return g;
}

ChannelSolution solve_channel(int n, const PhysParams& params, const BOGrid& grid, double e_ref,
                              const BOOptions& opts) {
    if (!(grid.R_min > 0.0) || !(grid.R_min < params.R0()) || !(grid.R_max > params.R0())) {
        throw ConfigError("BO grid must satisfy 0 < R_min < R0 < R_max");
    }
    if (grid.n_points < 200) {
        throw ConfigError("BO grid needs at least 200 points");
    }
    const int N = grid.n_points;
    const double dR = (grid.R_max - grid.R_min) / (N - 1);
    const double kin = params.hbar() * params.hbar() / (2.0 * params.M() * dR * dR);
    std::vector<double> d(N - 2);
    double vmin = std::numeric_limits<double>::infinity();
    for (int i = 1; i < N - 1; ++i) {
        const double V = effective_potential(n, grid.R_min + i * dR, params, opts);
        d[i - 1] = 2.0 * kin + V;
        vmin = std::min(vmin, V);
    }
    const double e = -kin;

    ChannelSolution sol;
    const double pmax = std::sqrt(2.0 * params.M() * std::max(e_ref - vmin, 0.0));
    sol.points_per_wavelength = pmax > 0.0 ? 2.0 * std::numbers::pi * params.hbar() / pmax / dR
                                           : std::numeric_limits<double>::infinity();
    sol.resolution_warning = sol.points_per_wavelength < 10.0;

    const double cap = std::min(effective_potential(n, grid.R_max, params, opts),
                                effective_potential(n, grid.R_min, params, opts));
    const int count = sturm_count(d, e, cap);
    const double lo0 = vmin;
    for (int k = 0; k < count; ++k) {
        double lo = lo0;
        double hi = cap;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (sturm_count(d, e, mid) > k) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        BOEigenPair p;
        p.n = n;
        p.nu = k;
        p.E = 0.5 * (lo + hi);
        p.R_min = grid.R_min;
        p.dR = dR;
        const std::vector<double> v = inverse_iteration(d, e, p.E);
        p.xi.assign(N, 0.0);
        const double scale = 1.0 / std::sqrt(dR);
        // sign convention: the first lobe is positive
        double first = 0.0;
        double vmax = 0.0;
        for (double x : v) vmax = std::max(vmax, std::abs(x));
        for (double x : v) {
            if (std::abs(x) > 1e-3 * vmax) {
                first = x;
                break;
            }
        }
        const double sgn = first < 0.0 ? -1.0 : 1.0;
        for (int i = 1; i < N - 1; ++i) p.xi[i] = sgn * scale * v[i - 1];
        sol.levels.push_back(std::move(p));
    }
    return sol;
}

std::vector<BOEigenPair> solve_levels(const PhysParams& params, int n_max, const BOGrid& grid, double e_ref,
                                      const BOOptions& opts) {
    std::vector<BOEigenPair> all;
    for (int n = 1; n <= n_max; ++n) {
        auto sol = solve_channel(n, params, grid, e_ref, opts);
        for (auto& p : sol.levels) all.push_back(std::move(p));
    }
    std::stable_sort(all.begin(), all.end(), [](const BOEigenPair& a, const BOEigenPair& b) { return a.E < b.E; });
    return all;
}

double BOField::operator()(double x, double y) const {
    const double H = x * tan_;
    if (!(x > 0.0) || y < -1e-12 * H || y > H * (1.0 + 1e-12)) {
        throw GeometryError("BO field evaluated outside the wedge");
    }
    return pair_.value_at(x) * std::sqrt(2.0 / H) * std::sin(pair_.n * std::numbers::pi * y / H);
}

} // namespace afa

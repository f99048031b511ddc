#include "afa/husimi.hpp"

#include "afa/errors.hpp"

#include <algorithm>
#include <cmath>

namespace afa {

BoundarySamples boundary_normal_derivative(const FieldEvaluator& ev, const Eigen::VectorXd& psi,
                                           const PhysParams& params, double ds) {
    const WedgeMesh& mesh = ev.mesh();
    const double c = std::cos(params.theta());
    const double s = std::sin(params.theta());
    const double s_begin = mesh.geom.x_cut / c;
    const double s_end = mesh.geom.x_max / c;
    if (!(ds > 0.0)) ds = 0.25 * mesh.h;
    BoundarySamples out;
    const auto n = static_cast<std::size_t>(std::floor((s_end - s_begin) / ds)) + 1;
    out.s0 = s_begin;
    out.ds = (s_end - s_begin) / static_cast<double>(n - 1);
    out.u.resize(n);
    const double nx = -s;
    const double ny = c;
    const double delta = 1e-7 * mesh.h;
    for (std::size_t k = 0; k < n; ++k) {
        const double sk = out.s_at(k);
        const double x = sk * c;
        const double y = sk * s;
        // nudge inside; at the corners the normal step alone leaves the strip range
        const double px = std::clamp(x - delta * nx, mesh.geom.x_cut + delta, mesh.geom.x_max - delta);
        const double py = std::min(y - delta * ny, mesh.geom.tan_theta * px - delta);
        const int t = ev.locate(px, py);
        if (t < 0) {
            out.u[k] = 0.0;
            continue;
        }
        const auto g = ev.gradient(psi, t, x, y);
        out.u[k] = g[0] * nx + g[1] * ny;
    }
    return out;
}

std::vector<double> husimi_transform(const BoundarySamples& u, double sigma, const ChartGrid& grid, double hbar) {
    if (!(sigma >= 2.0 * u.ds)) {
        throw NumericalError("Husimi window narrower than two boundary samples");
    }
    std::vector<double> H(static_cast<std::size_t>(grid.nq) * grid.np, 0.0);
    const double dp = (grid.p_max - grid.p_min) / grid.np;
    const double reach = 6.0 * sigma;
    std::vector<std::complex<double>> acc(grid.np);
    for (int i = 0; i < grid.nq; ++i) {
        const double q = grid.q_at(i);
        std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
        const long k0 = std::max(0L, static_cast<long>(std::floor((q - reach - u.s0) / u.ds)));
        const long k1 = std::min(static_cast<long>(u.u.size()) - 1, static_cast<long>(std::ceil((q + reach - u.s0) / u.ds)));
        for (long k = k0; k <= k1; ++k) {
            const double d = u.s_at(static_cast<std::size_t>(k)) - q;
            const double g = std::exp(-d * d / (2.0 * sigma * sigma)) * u.ds;
            std::complex<double> term = u.u[k] * g * std::polar(1.0, -grid.p_at(0) * d / hbar);
            const std::complex<double> step = std::polar(1.0, -dp * d / hbar);
            for (int j = 0; j < grid.np; ++j) {
                acc[j] += term;
                term *= step;
            }
        }
        for (int j = 0; j < grid.np; ++j) {
            H[static_cast<std::size_t>(i) * grid.np + j] = std::norm(acc[j]);
        }
    }
    double total = 0.0;
    for (double v : H) total += v;
    if (total > 0.0) {
        for (double& v : H) v /= total;
    }
    return H;
}

double default_boundary_sigma(const PhysParams& params) {
    return std::sqrt(params.hbar() / (params.M() * params.omega())) / std::cos(params.theta());
}

ChartGrid default_impact_chart(const PhysParams& params, double energy, double x_min, double x_max, int nq, int np) {
    ChartGrid g;
    g.q_min = x_min;
    g.q_max = x_max;
    g.nq = nq;
    const double pmax = 1.05 * (std::sqrt(2.0 * params.M() * energy) + std::sqrt(2.0 * params.m() * energy));
    g.p_min = -pmax;
    g.p_max = pmax;
    g.np = np;
    return g;
}

HusimiGrid husimi_boundary(const BoundarySamples& u, double sigma, const ChartGrid& chart, const PhysParams& params,
                           double mesh_h) {
    if (!(sigma >= 2.0 * mesh_h)) {
        throw NumericalError("Husimi window narrower than two mesh spacings");
    }
    const double c = std::cos(params.theta());
    ChartGrid boundary = chart;
    boundary.q_min = chart.q_min / c;
    boundary.q_max = chart.q_max / c;
    boundary.p_min = chart.p_min * c;
    boundary.p_max = chart.p_max * c;
    HusimiGrid hg;
    hg.grid = chart;
    hg.sigma = sigma;
    hg.values = husimi_transform(u, sigma, boundary, params.hbar());
    return hg;
}

} // namespace afa

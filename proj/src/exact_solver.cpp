#include "afa/exact_solver.hpp"

#include "afa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace afa {

namespace {

int count_sign_changes(const std::vector<double>& v) {
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    int crossings = 0;
    double last = 0.0;
    for (double x : v) {
        if (std::abs(x) < 1e-6 * vmax) continue;
        if (last != 0.0 && (x > 0.0) != (last > 0.0)) ++crossings;
        last = x;
    }
    return crossings;
}

} // namespace

Truncation truncation_rule(const PhysParams& params, double energy) {
    if (!(energy > 0.0)) {
        throw ConfigError("target energy must be positive");
    }
    Truncation t;
    t.x_max = params.R0() + std::sqrt(2.0 * (energy + 10.0 * params.hbar() * params.omega()) / params.k());
    t.x_cut = params.hbar() * std::numbers::pi / std::sqrt(20.0 * params.m() * energy);
    return t;
}

double element_size_for(const PhysParams& params, double energy, double kh) {
    if (!(kh > 0.0) || !(energy > 0.0)) {
        throw ConfigError("element size rule needs positive kh and energy");
    }
    return kh * params.hbar() / std::sqrt(2.0 * params.M() * energy);
}

Spectrum solve_spectrum(const PhysParams& params, const SpectrumOptions& opts) {
    if (opts.n_pairs < 1) {
        throw ConfigError("n_pairs must be at least 1");
    }
    const Truncation rule = truncation_rule(params, opts.target);
    Spectrum sp;
    sp.x_max = opts.x_max > 0.0 ? opts.x_max : rule.x_max;
    sp.x_cut = opts.x_cut >= 0.0 ? opts.x_cut : rule.x_cut;
    if (!(sp.x_max > params.R0()) || !(sp.x_cut < sp.x_max)) {
        throw ConfigError("wedge truncation must satisfy x_cut < R0 < x_max");
    }
    double h = opts.h > 0.0 ? opts.h : element_size_for(params, opts.target, opts.kh);

    // Triangle count of a column mesh: about tan(theta) (x_max^2 - x_cut^2) (1 + g) / h^2.
    const double span = params.tan_theta() * (sp.x_max * sp.x_max - sp.x_cut * sp.x_cut) * (1.0 + opts.edge_grading);
    if (opts.max_triangles > 0) {
        const double estimate = span / (h * h);
        if (estimate > 0.97 * static_cast<double>(opts.max_triangles)) {
            h = std::sqrt(span / (0.97 * static_cast<double>(opts.max_triangles)));
            sp.h_coarsened = true;
        }
    }
    sp.h = h;
    sp.mesh = build_wedge_mesh(params, sp.x_max, h, sp.x_cut, opts.edge_grading);
    if (opts.max_triangles > 0 && sp.mesh.n_triangles() > opts.max_triangles) {
        throw ConfigError("wedge mesh exceeds the triangle budget");
    }
    Assembled as = assemble(sp.mesh, physical_problem(params), opts.order);

    EigenOptions eo;
    eo.target = opts.target;
    eo.n_pairs = opts.n_pairs;
    eo.seed = opts.seed;
    const EigenResult er = solve_eigen(as.H, as.B, eo);

    sp.dofs = std::move(as.dofs);
    sp.B = std::move(as.B);
    sp.shift = er.shift;
    sp.restarts = er.restarts;
    sp.factorization = er.factorization;
    for (std::size_t i = 0; i < er.values.size(); ++i) {
        EigenPair p;
        p.E = er.values[i];
        Eigen::VectorXd x = er.vectors.col(static_cast<Eigen::Index>(i));
        // fix the sign so that the largest-magnitude entry is positive
        Eigen::Index imax = 0;
        x.cwiseAbs().maxCoeff(&imax);
        if (x[imax] < 0.0) x = -x;
        p.norm = std::sqrt(x.dot(sp.B * x));
        p.residual = er.residuals[i];
        p.psi = expand(sp.dofs, x);
        sp.pairs.push_back(std::move(p));
    }
    return sp;
}

std::vector<TriangleLevel> triangle_exact_levels(double L, int count) {
    std::vector<TriangleLevel> all;
    const int top = count + 3;
    for (int m = 2; m <= top; ++m) {
        for (int n = 1; n < m; ++n) {
            TriangleLevel t;
            t.m = m;
            t.n = n;
            t.exact = std::numbers::pi * std::numbers::pi * (m * m + n * n) / (L * L);
            all.push_back(t);
        }
    }
    std::sort(all.begin(), all.end(), [](const TriangleLevel& a, const TriangleLevel& b) { return a.exact < b.exact; });
    all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(count)));
    return all;
}

int triangle_exact_crossings(double L, int m, int n) {
    const double k = std::numbers::pi / L;
    std::vector<double> line;
    for (int i = 1; i < 400; ++i) {
        const double x = L * i / 400.0;
        const double y = 0.5 * x;
        line.push_back(std::sin(m * k * x) * std::sin(n * k * y) - std::sin(n * k * x) * std::sin(m * k * y));
    }
    return count_sign_changes(line);
}

TriangleReport validate_triangle_spectrum(double L, double h, int refinements, ElementOrder order) {
    if (!(L > 0.0) || !(h > 0.0)) {
        throw ConfigError("triangle oracle needs L > 0 and h > 0");
    }
    TriangleReport rep;
    rep.L = L;
    const int count = 10;
    const auto exact = triangle_exact_levels(L, count);
    FemProblem lap;
    lap.kinetic = 1.0;
    for (int level = 0; level <= refinements; ++level) {
        const double hl = h / std::pow(2.0, level);
        WedgeGeometry g;
        g.tan_theta = 1.0;
        g.x_cut = 0.0;
        g.x_max = L;
        const WedgeMesh mesh = build_mesh(g, {hl, 0.0});
        const Assembled as = assemble(mesh, lap, order);
        EigenOptions eo;
        eo.target = 0.0;
        eo.n_pairs = count;
        const EigenResult er = solve_eigen(as.H, as.B, eo);
        std::vector<double> vals = er.values;
        std::sort(vals.begin(), vals.end());
        double worst = 0.0;
        for (int i = 0; i < count; ++i) {
            const double rel = std::abs(vals[i] - exact[i].exact) / exact[i].exact;
            worst = std::max(worst, rel);
            if (level == 0) {
                TriangleLevel t = exact[i];
                t.computed = vals[i];
                t.rel_error = rel;
                rep.levels.push_back(t);
            }
        }
        rep.h.push_back(hl);
        rep.max_rel_error.push_back(worst);
        if (level == 0) {
            const FieldEvaluator ev(mesh, as.dofs);
            std::vector<int> by_energy(count);
            std::iota(by_energy.begin(), by_energy.end(), 0);
            std::sort(by_energy.begin(), by_energy.end(),
                      [&](int a, int b) { return er.values[a] < er.values[b]; });
            for (int q = 0; q < 4; ++q) {
                const Eigen::VectorXd psi = expand(as.dofs, er.vectors.col(by_energy[q]));
                std::vector<double> line;
                for (int i = 1; i < 400; ++i) {
                    const double x = L * i / 400.0;
                    const int t = ev.locate(x, 0.5 * x);
                    line.push_back(t >= 0 ? ev.value(psi, t, x, 0.5 * x) : 0.0);
                }
                rep.nodal_crossings.push_back(count_sign_changes(line));
            }
        }
    }
    for (std::size_t i = 1; i < rep.max_rel_error.size(); ++i) {
        rep.orders.push_back(std::log2(rep.max_rel_error[i - 1] / rep.max_rel_error[i]));
    }
    return rep;
}

} // namespace afa

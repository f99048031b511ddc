#include "afa/fem.hpp"

#include "afa/core_model.hpp"
#include "afa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace afa {

namespace {

struct QuadPoint {
    double l0, l1, l2, w;
};

// Symmetric 12-point rule, exact for degree 6; weights sum to 1.
std::vector<QuadPoint> rule_degree6() {
    std::vector<QuadPoint> q;
    auto add3 = [&](double a, double w) {
        const double b = 1.0 - 2.0 * a;
        q.push_back({a, a, b, w});
        q.push_back({a, b, a, w});
        q.push_back({b, a, a, w});
    };
    add3(0.249286745170910, 0.116786275726379);
    add3(0.063089014491502, 0.050844906370207);
    const double a = 0.053145049844817, b = 0.310352451033784, c = 0.636502499121399;
    const double w = 0.082851075618374;
    for (auto [x, y, z] : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                           std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}}) {
        q.push_back({x, y, z, w});
    }
    return q;
}

// Edge-midpoint rule, exact for degree 2.
std::vector<QuadPoint> rule_degree2() {
    const double t = 1.0 / 3.0;
    return {{0.5, 0.5, 0.0, t}, {0.0, 0.5, 0.5, t}, {0.5, 0.0, 0.5, t}};
}

struct Affine {
    double area;
    double gl[3][2]; // gradients of barycentric coordinates
    double x[3], y[3];
};

Affine affine_of(const WedgeMesh& mesh, int t) {
    Affine a;
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
        a.x[i] = mesh.nodes[tri[i]][0];
        a.y[i] = mesh.nodes[tri[i]][1];
    }
    const double det = (a.x[1] - a.x[0]) * (a.y[2] - a.y[0]) - (a.x[2] - a.x[0]) * (a.y[1] - a.y[0]);
    a.area = 0.5 * det;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        a.gl[i][0] = (a.y[j] - a.y[k]) / det;
        a.gl[i][1] = (a.x[k] - a.x[j]) / det;
    }
    return a;
}

void shape(ElementOrder order, const double l[3], double* N) {
    if (order == ElementOrder::P1) {
        N[0] = l[0];
        N[1] = l[1];
        N[2] = l[2];
        return;
    }
    for (int i = 0; i < 3; ++i) {
        N[i] = l[i] * (2.0 * l[i] - 1.0);
        N[3 + i] = 4.0 * l[i] * l[(i + 1) % 3];
    }
}

void shape_grad(ElementOrder order, const Affine& a, const double l[3], double (*G)[2]) {
    for (int d = 0; d < 2; ++d) {
        if (order == ElementOrder::P1) {
            for (int i = 0; i < 3; ++i) G[i][d] = a.gl[i][d];
            continue;
        }
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3;
            G[i][d] = (4.0 * l[i] - 1.0) * a.gl[i][d];
            G[3 + i][d] = 4.0 * (l[i] * a.gl[j][d] + l[j] * a.gl[i][d]);
        }
    }
}

} // namespace

DofMap build_dofs(const WedgeMesh& mesh, ElementOrder order, bool impose_dirichlet) {
    DofMap d;
    d.order = order;
    const int nv = static_cast<int>(mesh.n_nodes());
    d.n_dofs = nv;
    d.coords = mesh.nodes;
    d.constrained.assign(nv, 0);
    for (int i = 0; i < nv; ++i) {
        d.constrained[i] = mesh.on_boundary(i) ? 1 : 0;
    }
    d.cell_dofs.resize(mesh.n_triangles());
    std::unordered_map<std::uint64_t, int> edge_dof;
    edge_dof.reserve(mesh.n_triangles() * 2);
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        auto& cd = d.cell_dofs[t];
        cd.fill(-1);
        for (int i = 0; i < 3; ++i) cd[i] = tri[i];
        if (order == ElementOrder::P1) continue;
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i];
            const int b = tri[(i + 1) % 3];
            const auto key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
            auto [it, fresh] = edge_dof.try_emplace(key, d.n_dofs);
            if (fresh) {
                ++d.n_dofs;
                d.coords.push_back({0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]),
                                    0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1])});
                d.constrained.push_back((mesh.tags[a] & mesh.tags[b]) != 0 ? 1 : 0);
            }
            cd[3 + i] = it->second;
        }
    }
    if (!impose_dirichlet) {
        std::fill(d.constrained.begin(), d.constrained.end(), 0);
    }
    d.free_index.assign(d.n_dofs, -1);
    for (int i = 0; i < d.n_dofs; ++i) {
        if (!d.constrained[i]) {
            d.free_index[i] = d.n_free++;
            d.free_to_dof.push_back(i);
        }
    }
    return d;
}

FemProblem physical_problem(const PhysParams& params) {
    FemProblem p;
    p.kinetic = params.hbar() * params.hbar() / (2.0 * params.M());
    p.spring = params.k();
    p.center = params.R0();
    return p;
}

Assembled assemble(const WedgeMesh& mesh, const FemProblem& problem, ElementOrder order,
                   bool impose_dirichlet) {
    Assembled out;
    out.dofs = build_dofs(mesh, order, impose_dirichlet);
    const DofMap& d = out.dofs;
    const int nl = d.dofs_per_cell();
    const auto rule = order == ElementOrder::P1 ? rule_degree2() : rule_degree6();

    std::vector<Eigen::Triplet<double>> th, tb;
    th.reserve(mesh.n_triangles() * nl * nl);
    tb.reserve(mesh.n_triangles() * nl * nl);
    double N[6];
    double G[6][2];
    double Ke[6][6];
    double Me[6][6];
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
        const Affine a = affine_of(mesh, static_cast<int>(t));
        if (!(a.area > 0.0)) {
            throw GeometryError("assembly: triangle " + std::to_string(t) + " has non-positive area");
        }
        for (int i = 0; i < nl; ++i) {
            for (int j = 0; j < nl; ++j) {
                Ke[i][j] = 0.0;
                Me[i][j] = 0.0;
            }
        }
        for (const QuadPoint& q : rule) {
            const double l[3] = {q.l0, q.l1, q.l2};
            shape(order, l, N);
            shape_grad(order, a, l, G);
            const double x = l[0] * a.x[0] + l[1] * a.x[1] + l[2] * a.x[2];
            const double V = 0.5 * problem.spring * (x - problem.center) * (x - problem.center);
            const double w = q.w * a.area;
            for (int i = 0; i < nl; ++i) {
                for (int j = 0; j < nl; ++j) {
                    const double mass = w * N[i] * N[j];
                    Me[i][j] += mass;
                    Ke[i][j] += problem.kinetic * w * (G[i][0] * G[j][0] + G[i][1] * G[j][1]) + V * mass;
                }
            }
        }
        const auto& cd = d.cell_dofs[t];
        for (int i = 0; i < nl; ++i) {
            const int fi = d.free_index[cd[i]];
            if (fi < 0) continue;
            for (int j = 0; j < nl; ++j) {
                const int fj = d.free_index[cd[j]];
                if (fj < 0) continue;
                th.emplace_back(fi, fj, Ke[i][j]);
                tb.emplace_back(fi, fj, Me[i][j]);
            }
        }
    }
    out.H.resize(d.n_free, d.n_free);
    out.B.resize(d.n_free, d.n_free);
    out.H.setFromTriplets(th.begin(), th.end());
    out.B.setFromTriplets(tb.begin(), tb.end());
    out.H.makeCompressed();
    out.B.makeCompressed();
    return out;
}

Eigen::VectorXd expand(const DofMap& dofs, const Eigen::VectorXd& free_values) {
    if (free_values.size() != dofs.n_free) {
        throw NumericalError("expand: vector size does not match the free dof count");
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dofs.n_dofs);
    for (int i = 0; i < dofs.n_free; ++i) {
        full[dofs.free_to_dof[i]] = free_values[i];
    }
    return full;
}

std::vector<LineSegment> vertical_line(const WedgeMesh& mesh, double x) {
    std::vector<LineSegment> segs;
    const int k = mesh.strip_of(x);
    for (int t : mesh.strip_triangles[k]) {
        const auto& tri = mesh.triangles[t];
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int e = 0; e < 3; ++e) {
            const auto& p = mesh.nodes[tri[e]];
            const auto& q = mesh.nodes[tri[(e + 1) % 3]];
            const double xmin = std::min(p[0], q[0]);
            const double xmax = std::max(p[0], q[0]);
            if (x < xmin || x > xmax) continue;
            if (xmax == xmin) {
                lo = std::min({lo, p[1], q[1]});
                hi = std::max({hi, p[1], q[1]});
            } else {
                const double s = (x - p[0]) / (q[0] - p[0]);
                const double y = p[1] + s * (q[1] - p[1]);
                lo = std::min(lo, y);
                hi = std::max(hi, y);
            }
        }
        if (hi > lo) {
            segs.push_back({t, lo, hi});
        }
    }
    std::sort(segs.begin(), segs.end(), [](const LineSegment& a, const LineSegment& b) { return a.y0 < b.y0; });
    return segs;
}

std::array<double, 3> FieldEvaluator::barycentric(int tri, double x, double y) const {
    const Affine a = affine_of(mesh_, tri);
    std::array<double, 3> l;
    for (int i = 0; i < 3; ++i) {
        l[i] = 0.0;
    }
    for (int i = 0; i < 3; ++i) {
        // lambda_i is affine with gradient gl[i] and vanishes on the opposite edge
        const int j = (i + 1) % 3;
        l[i] = a.gl[i][0] * (x - a.x[j]) + a.gl[i][1] * (y - a.y[j]);
    }
    return l;
}

int FieldEvaluator::locate(double x, double y) const {
    const int k = mesh_.strip_of(x);
    const int n = static_cast<int>(mesh_.strip_triangles.size());
    for (int s : {k, k - 1, k + 1}) {
        if (s < 0 || s >= n) continue;
        for (int t : mesh_.strip_triangles[s]) {
            const auto l = barycentric(t, x, y);
            if (l[0] >= -1e-12 && l[1] >= -1e-12 && l[2] >= -1e-12) {
                return t;
            }
        }
    }
    return -1;
}

double FieldEvaluator::value(const Eigen::VectorXd& field, int tri, double x, double y) const {
    const auto l = barycentric(tri, x, y);
    double N[6];
    shape(dofs_.order, l.data(), N);
    const auto& cd = dofs_.cell_dofs[tri];
    double v = 0.0;
    for (int i = 0; i < dofs_.dofs_per_cell(); ++i) {
        v += N[i] * field[cd[i]];
    }
    return v;
}

std::array<double, 2> FieldEvaluator::gradient(const Eigen::VectorXd& field, int tri, double x, double y) const {
    const Affine a = affine_of(mesh_, tri);
    const auto l = barycentric(tri, x, y);
    double G[6][2];
    shape_grad(dofs_.order, a, l.data(), G);
    const auto& cd = dofs_.cell_dofs[tri];
    std::array<double, 2> g{0.0, 0.0};
    for (int i = 0; i < dofs_.dofs_per_cell(); ++i) {
        g[0] += G[i][0] * field[cd[i]];
        g[1] += G[i][1] * field[cd[i]];
    }
    return g;
}

void gauss_legendre01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        nodes[i] = 0.5 * (1.0 - z);
        weights[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

} // namespace afa

#include "afa/mesh.hpp"

#include "afa/core_model.hpp"
#include "afa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace afa {

double WedgeMesh::triangle_area(int t) const {
    const auto& tri = triangles[t];
    const auto& a = nodes[tri[0]];
    const auto& b = nodes[tri[1]];
    const auto& c = nodes[tri[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

int WedgeMesh::strip_of(double x) const {
    const int n = static_cast<int>(strip_triangles.size());
    const double dx = (geom.x_max - geom.x_cut) / n;
    const int k = static_cast<int>(std::floor((x - geom.x_cut) / dx));
    return std::clamp(k, 0, n - 1);
}

WedgeMesh build_mesh(const WedgeGeometry& geom, const MeshOptions& opts) {
    if (!(geom.tan_theta > 0.0) || !std::isfinite(geom.tan_theta)) {
        throw GeometryError("wedge opening must be positive");
    }
    if (!(geom.x_cut >= 0.0) || !(geom.x_max > geom.x_cut)) {
        throw GeometryError("wedge range must satisfy 0 <= x_cut < x_max");
    }
    if (!(opts.target_h > 0.0)) {
        throw GeometryError("target element size must be positive");
    }
    if (!(opts.edge_grading >= 0.0 && opts.edge_grading < 1.0)) {
        throw GeometryError("edge grading must lie in [0, 1)");
    }

    WedgeMesh mesh;
    mesh.geom = geom;
    mesh.h = opts.target_h;
    const double g = opts.edge_grading;
    const double h = opts.target_h;
    const int nx = std::max(1, static_cast<int>(std::ceil((geom.x_max - geom.x_cut) / h - 1e-9)));
    const double dx = (geom.x_max - geom.x_cut) / nx;
    auto grade = [g](double t) { return (1.0 - g) * t + g * (1.0 - (1.0 - t) * (1.0 - t)); };

    std::vector<int> seg(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        const double x = i == nx ? geom.x_max : geom.x_cut + i * dx;
        const double H = geom.tan_theta * x;
        const int m = H <= 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil((1.0 + g) * H / h - 1e-9)));
        seg[i] = m;
        mesh.column_x.push_back(x);
        std::vector<int> ids;
        for (int j = 0; j <= m; ++j) {
            const double y = m == 0 ? 0.0 : (j == m ? H : H * grade(static_cast<double>(j) / m));
            std::uint8_t tag = Interior;
            if (j == 0) tag |= BottomEdge;
            if (j == m) tag |= WedgeEdge;
            if (i == nx) tag |= FarEdge;
            if (i == 0 && geom.x_cut > 0.0) tag |= ApexCut;
            ids.push_back(static_cast<int>(mesh.nodes.size()));
            mesh.nodes.push_back({x, y});
            mesh.tags.push_back(tag);
        }
        mesh.column_nodes.push_back(std::move(ids));
    }

    mesh.strip_triangles.resize(nx);
    for (int c = 0; c < nx; ++c) {
        const auto& A = mesh.column_nodes[c];
        const auto& B = mesh.column_nodes[c + 1];
        const int ma = seg[c];
        const int mb = seg[c + 1];
        int i = 0;
        int j = 0;
        while (i < ma || j < mb) {
            const bool advance_a =
                j == mb || (i < ma && static_cast<double>(i + 1) / ma <= static_cast<double>(j + 1) / mb);
            std::array<int, 3> tri;
            if (advance_a) {
                tri = {A[i], B[j], A[i + 1]};
                ++i;
            } else {
                tri = {A[i], B[j], B[j + 1]};
                ++j;
            }
            mesh.strip_triangles[c].push_back(static_cast<int>(mesh.triangles.size()));
            mesh.triangles.push_back(tri);
        }
    }

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!(mesh.triangle_area(static_cast<int>(t)) > 0.0)) {
            throw GeometryError("degenerate triangle " + std::to_string(t) + " in wedge mesh");
        }
    }
    return mesh;
}

WedgeMesh build_wedge_mesh(const PhysParams& params, double x_max, double target_h, double x_cut,
                           double edge_grading) {
    if (!(x_max > params.R0())) {
        throw GeometryError("x_max must exceed R0");
    }
    WedgeGeometry g;
    g.tan_theta = params.tan_theta();
    g.x_cut = x_cut;
    g.x_max = x_max;
    return build_mesh(g, {target_h, edge_grading});
}

MeshQuality mesh_quality(const WedgeMesh& mesh) {
    MeshQuality q;
    q.min_area = std::numeric_limits<double>::infinity();
    q.min_angle_deg = 180.0;
    std::map<std::pair<int, int>, int> edges;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        q.min_area = std::min(q.min_area, mesh.triangle_area(static_cast<int>(t)));
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k];
            const int b = tri[(k + 1) % 3];
            const int c = tri[(k + 2) % 3];
            ++edges[{std::min(a, b), std::max(a, b)}];
            const double ux = mesh.nodes[b][0] - mesh.nodes[a][0];
            const double uy = mesh.nodes[b][1] - mesh.nodes[a][1];
            const double vx = mesh.nodes[c][0] - mesh.nodes[a][0];
            const double vy = mesh.nodes[c][1] - mesh.nodes[a][1];
            q.max_edge = std::max(q.max_edge, std::hypot(ux, uy));
            const double ang = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
            q.min_angle_deg = std::min(q.min_angle_deg, ang * 180.0 / std::numbers::pi);
        }
    }
    q.conforming = true;
    for (const auto& [e, count] : edges) {
        if (count == 1) {
            ++q.boundary_edges;
            if ((mesh.tags[e.first] & mesh.tags[e.second]) == 0) {
                q.conforming = false;
            }
        } else if (count == 2) {
            ++q.interior_edges;
        } else {
            q.conforming = false;
        }
    }
    return q;
}

} // namespace afa

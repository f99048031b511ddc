#pragma once

// Column ("zipper") triangulation of the truncated wedge
//   { x_cut <= x <= x_max, 0 <= y <= tan_theta * x }.
// Nodes are laid out on vertical columns; neighbouring columns are stitched by
// merging their normalized heights, which keeps every element within one strip
// x_i <= x <= x_{i+1}. That strip structure is what the line integrals in the
// analysis module rely on.

#include <array>
#include <cstdint>
#include <vector>

namespace afa {

class PhysParams;

// Bit flags; corner nodes carry two.
enum BoundaryTag : std::uint8_t {
    Interior = 0,
    BottomEdge = 1,  // y = 0
    WedgeEdge = 2,   // y = tan_theta * x
    FarEdge = 4,     // x = x_max
    ApexCut = 8,     // x = x_cut > 0
};

struct WedgeGeometry {
    double tan_theta = 1.0;
    double x_cut = 0.0;
    double x_max = 1.0;
};

struct MeshOptions {
    double target_h = 0.1;
    // 0 gives uniform columns; g in (0,1) shrinks elements next to the wedge
    // edge to (1 - g) of the size next to the bottom edge.
    double edge_grading = 0.0;
};

struct WedgeMesh {
    WedgeGeometry geom;
    double h = 0.0;
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles; // counter-clockwise
    std::vector<std::uint8_t> tags;

    // Column layout: x position and bottom-to-top node ids of every column.
    std::vector<double> column_x;
    std::vector<std::vector<int>> column_nodes;
    // Triangles of the strip between column k and column k+1.
    std::vector<std::vector<int>> strip_triangles;

    std::size_t n_nodes() const { return nodes.size(); }
    std::size_t n_triangles() const { return triangles.size(); }
    bool on_boundary(int node) const { return tags[node] != Interior; }
    double triangle_area(int t) const;

    // Strip index containing x (clamped to the mesh range).
    int strip_of(double x) const;
};

// Throws GeometryError for tan_theta <= 0, x_cut < 0, x_max <= x_cut or h <= 0.
WedgeMesh build_mesh(const WedgeGeometry& geom, const MeshOptions& opts);

// Wedge for the physical problem, tan_theta = sqrt(eta). Requires x_max > R0.
WedgeMesh build_wedge_mesh(const PhysParams& params, double x_max, double target_h, double x_cut = 0.0,
                           double edge_grading = 0.0);

struct MeshQuality {
    double min_area = 0.0;
    double max_edge = 0.0;
    double min_angle_deg = 0.0;
    std::size_t boundary_edges = 0;
    std::size_t interior_edges = 0;
    bool conforming = false; // every edge shared by one or two triangles, boundary edges lie on the boundary
};

MeshQuality mesh_quality(const WedgeMesh& mesh);

} // namespace afa

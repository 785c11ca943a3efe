#pragma once

#include <array>
#include <vector>

#include "torqflow/geometry.hpp"

namespace torqflow {

// Triangulation of a convex polygon by concentric rings shrunk toward the area
// centroid. Boundary vertices come first and lie exactly on the polygon; every
// vertex carries its ring index and a fractional polygon coordinate so nodal
// fields can be transferred between meshes of nearby bodies.
struct BodyMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles; // counterclockwise
    int boundary_count = 0;                    // vertices [0, boundary_count) are boundary
    std::vector<int> polygon_vertex;           // input polygon node -> mesh vertex id
    std::vector<int> vertex_ring;              // 0 on the boundary, increasing inward
    std::vector<double> vertex_param;          // fractional polygon index, in [0, polygon size)
    int ring_count = 0;                        // rings including the boundary, excluding the center

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

struct MeshOptions {
    double target_edge = 0.05;
    // First inward step is boundary_factor * target_edge; steps grow
    // geometrically by growth until they reach target_edge.
    double boundary_factor = 0.5;
    double growth = 1.35;
};

BodyMesh triangulate(const std::vector<Vec2>& polygon, const MeshOptions& opts = {});
BodyMesh triangulate(const BoundaryPolygon& polygon, const MeshOptions& opts = {});

double mesh_area(const BodyMesh& mesh);
// 4 sqrt(3) A / (l0^2 + l1^2 + l2^2), equal to 1 on equilateral triangles.
double min_triangle_quality(const BodyMesh& mesh);

} // namespace torqflow

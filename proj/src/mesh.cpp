#include "torqflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "torqflow/errors.hpp"

namespace torqflow {

namespace {

struct RingVertex {
    double param; // fractional polygon index, ascending within a ring
    int id;
};

double polygon_area2(const std::vector<Vec2>& poly) {
    double acc = 0.0;
    const int n = static_cast<int>(poly.size());
    for (int i = 0; i < n; ++i) acc += poly[i].cross(poly[(i + 1) % n]);
    return acc;
}

Vec2 area_centroid(const std::vector<Vec2>& poly) {
    const int n = static_cast<int>(poly.size());
    double a2 = 0.0;
    Vec2 c{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        const Vec2 p = poly[i];
        const Vec2 q = poly[(i + 1) % n];
        const double w = p.cross(q);
        a2 += w;
        c = c + (p + q) * w;
    }
    return c * (1.0 / (3.0 * a2));
}

void check_polygon(const std::vector<Vec2>& poly) {
    const int n = static_cast<int>(poly.size());
    if (n < 3) throw GeometryError("polygon needs at least 3 vertices");
    const double a2 = polygon_area2(poly);
    if (!(a2 > 0.0))
        throw GeometryError("polygon must be positively oriented with positive area");
    double scale2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec2 e = poly[(i + 1) % n] - poly[i];
        scale2 = std::max(scale2, e.dot(e));
    }
    for (int i = 0; i < n; ++i) {
        const Vec2 e0 = poly[(i + 1) % n] - poly[i];
        const Vec2 e1 = poly[(i + 2) % n] - poly[(i + 1) % n];
        if (e0.cross(e1) < -1e-12 * scale2)
            throw GeometryError("polygon is not convex at vertex " +
                                std::to_string((i + 1) % n));
    }
}

// Piecewise linear point on the boundary ring at fractional polygon index t.
Vec2 ring_point(const std::vector<RingVertex>& ring, const std::vector<Vec2>& pts,
                double period, double t) {
    t = std::fmod(t, period);
    if (t < 0.0) t += period;
    const int n = static_cast<int>(ring.size());
    // Find the segment whose start param is the last one <= t.
    int lo = static_cast<int>(std::upper_bound(ring.begin(), ring.end(), t,
                                               [](double v, const RingVertex& r) {
                                                   return v < r.param;
                                               }) -
                              ring.begin()) -
             1;
    if (lo < 0) lo = n - 1;
    const RingVertex& a = ring[lo];
    const RingVertex& b = ring[(lo + 1) % n];
    double span = b.param - a.param;
    if (span <= 0.0) span += period;
    double local = t - a.param;
    if (local < 0.0) local += period;
    const double s = span > 0.0 ? local / span : 0.0;
    return pts[a.id] + s * (pts[b.id] - pts[a.id]);
}

} // namespace

BodyMesh triangulate(const std::vector<Vec2>& polygon, const MeshOptions& opts) {
    if (!(opts.target_edge > 0.0))
        throw ArgumentError("target edge must be positive");
    check_polygon(polygon);
    const int np = static_cast<int>(polygon.size());
    const double period = np;
    const Vec2 c = area_centroid(polygon);

    BodyMesh mesh;
    mesh.polygon_vertex.resize(np);

    auto add_vertex = [&](Vec2 p, int ring, double param) {
        mesh.vertices.push_back(p);
        mesh.vertex_ring.push_back(ring);
        mesh.vertex_param.push_back(param);
        return static_cast<int>(mesh.vertices.size()) - 1;
    };

    // Boundary ring: subdivide each edge so no boundary edge exceeds the target.
    std::vector<RingVertex> outer;
    for (int i = 0; i < np; ++i) {
        const Vec2 p = polygon[i];
        const Vec2 q = polygon[(i + 1) % np];
        const double len = (q - p).norm();
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / opts.target_edge)));
        for (int j = 0; j < pieces; ++j) {
            const double frac = static_cast<double>(j) / pieces;
            const double param = i + frac;
            const int id = add_vertex(p + frac * (q - p), 0, param);
            if (j == 0) mesh.polygon_vertex[i] = id;
            outer.push_back({param, id});
        }
    }
    mesh.boundary_count = static_cast<int>(mesh.vertices.size());

    double r_min = 0.0;
    for (std::size_t i = 0; i < outer.size(); ++i) {
        const double r = (mesh.vertices[outer[i].id] - c).norm();
        r_min = i == 0 ? r : std::min(r_min, r);
    }
    if (!(r_min > 0.0)) throw GeometryError("polygon centroid touches the boundary");

    double perimeter0 = 0.0;
    const int nb = static_cast<int>(outer.size());
    for (int i = 0; i < nb; ++i)
        perimeter0 += (mesh.vertices[outer[(i + 1) % nb].id] - mesh.vertices[outer[i].id]).norm();

    auto zip_rings = [&](const std::vector<RingVertex>& out_ring,
                         const std::vector<RingVertex>& in_ring) {
        const int no = static_cast<int>(out_ring.size());
        const int ni = static_cast<int>(in_ring.size());
        // Align the inner ring start with the outer ring start.
        int b0 = 0;
        double best = period;
        for (int b = 0; b < ni; ++b) {
            double d = std::fmod(std::abs(in_ring[b].param - out_ring[0].param), period);
            d = std::min(d, period - d);
            if (d < best) {
                best = d;
                b0 = b;
            }
        }
        double shift = in_ring[b0].param - out_ring[0].param;
        while (shift > 0.5 * period) shift -= period;
        while (shift < -0.5 * period) shift += period;
        // Unwrapped params, cumulative around each ring starting at the
        // aligned pair; PO[no] and PI[ni] close the loop one period later.
        std::vector<double> PO(no + 1), PI(ni + 1);
        PO[0] = out_ring[0].param;
        for (int k = 1; k <= no; ++k) {
            double step = out_ring[k % no].param - out_ring[(k - 1) % no].param;
            if (step <= 0.0) step += period;
            PO[k] = PO[k - 1] + step;
        }
        PI[0] = out_ring[0].param + shift;
        for (int k = 1; k <= ni; ++k) {
            double step = in_ring[(b0 + k) % ni].param - in_ring[(b0 + k - 1) % ni].param;
            if (step <= 0.0) step += period;
            PI[k] = PI[k - 1] + step;
        }
        int ia = 0;
        int ib = 0;
        while (ia < no || ib < ni) {
            const bool can_o = ia < no;
            const bool can_i = ib < ni;
            if (can_o && (!can_i || PO[ia + 1] <= PI[ib + 1])) {
                mesh.triangles.push_back({out_ring[ia % no].id, out_ring[(ia + 1) % no].id,
                                          in_ring[(b0 + ib) % ni].id});
                ++ia;
            } else {
                mesh.triangles.push_back({out_ring[ia % no].id, in_ring[(b0 + ib + 1) % ni].id,
                                          in_ring[(b0 + ib) % ni].id});
                ++ib;
            }
        }
    };

    // Inward rings with a graded boundary layer.
    std::vector<RingVertex> current = outer;
    double sigma = 1.0;
    int ring = 0;
    while (true) {
        const double d = opts.target_edge *
                         std::min(1.0, opts.boundary_factor * std::pow(opts.growth, ring));
        if (sigma * r_min <= 2.2 * d || static_cast<int>(current.size()) <= 6) break;
        const double sigma_next = sigma - d / r_min;
        if (sigma_next * r_min <= 1.1 * d) break;
        ++ring;
        const int count = std::clamp(
            static_cast<int>(std::lround(sigma_next * perimeter0 / opts.target_edge)), 6,
            static_cast<int>(current.size()));
        std::vector<RingVertex> next;
        const double stride = period / count;
        const double offset = (ring % 2) ? 0.5 * stride : 0.0;
        for (int j = 0; j < count; ++j) {
            double param = offset + j * stride;
            if (param >= period) param -= period;
            const Vec2 b = ring_point(outer, mesh.vertices, period, param);
            const int id = add_vertex(c + sigma_next * (b - c), ring, param);
            next.push_back({param, id});
        }
        zip_rings(current, next);
        current = std::move(next);
        sigma = sigma_next;
    }

    // Center fan.
    const int center = add_vertex(c, ring + 1, 0.0);
    const int nc = static_cast<int>(current.size());
    for (int i = 0; i < nc; ++i)
        mesh.triangles.push_back({current[i].id, current[(i + 1) % nc].id, center});
    mesh.ring_count = ring + 1;

    for (const auto& t : mesh.triangles) {
        const Vec2 e0 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec2 e1 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        if (!(e0.cross(e1) > 0.0))
            throw NumericalError("triangulation produced a degenerate or flipped triangle");
    }
    return mesh;
}

BodyMesh triangulate(const BoundaryPolygon& polygon, const MeshOptions& opts) {
    return triangulate(polygon.points, opts);
}

double mesh_area(const BodyMesh& mesh) {
    double acc = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec2 e0 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec2 e1 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        acc += 0.5 * e0.cross(e1);
    }
    return acc;
}

double min_triangle_quality(const BodyMesh& mesh) {
    double worst = 1.0;
    for (const auto& t : mesh.triangles) {
        const Vec2 e0 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        const Vec2 e1 = mesh.vertices[t[2]] - mesh.vertices[t[1]];
        const Vec2 e2 = mesh.vertices[t[0]] - mesh.vertices[t[2]];
        const double area = 0.5 * e0.cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        const double l2 = e0.dot(e0) + e1.dot(e1) + e2.dot(e2);
        worst = std::min(worst, 4.0 * std::sqrt(3.0) * area / l2);
    }
    return worst;
}

} // namespace torqflow

#include "torqflow/torsion.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include "torqflow/errors.hpp"

namespace torqflow {

namespace {

// Chunked reductions use a fixed block size so the combination order, and with
// it every rounded bit, is independent of the thread count.
constexpr int kChunk = 4096;

struct Element {
    int v[3];
    double area;
    Vec2 grad[3]; // gradients of the nodal basis functions
};

struct Assembly {
    std::vector<Element> elements;
    std::vector<double> lumped_mass; // per vertex
    std::vector<int> dof_of_vertex;  // -1 on the boundary
    std::vector<int> vertex_of_dof;
    int dof_count = 0;
};

int resolve_threads(int requested) {
    if (requested > 0) return std::min(requested, 64);
    if (const char* env = std::getenv("TORQFLOW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 64) return static_cast<int>(v);
    }
    return 1;
}

Assembly prepare(const BodyMesh& mesh) {
    Assembly a;
    a.elements.resize(mesh.triangles.size());
    a.lumped_mass.assign(mesh.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Element& e = a.elements[t];
        for (int k = 0; k < 3; ++k) e.v[k] = mesh.triangles[t][k];
        const Vec2 p0 = mesh.vertices[e.v[0]];
        const Vec2 p1 = mesh.vertices[e.v[1]];
        const Vec2 p2 = mesh.vertices[e.v[2]];
        const double area2 = (p1 - p0).cross(p2 - p0);
        if (!(area2 > 0.0)) throw NumericalError("mesh element with nonpositive area");
        e.area = 0.5 * area2;
        // grad of basis k is the rotated opposite edge over twice the area.
        e.grad[0] = (p2 - p1).perp() * (1.0 / area2);
        e.grad[1] = (p0 - p2).perp() * (1.0 / area2);
        e.grad[2] = (p1 - p0).perp() * (1.0 / area2);
        for (int k = 0; k < 3; ++k) a.lumped_mass[e.v[k]] += e.area / 3.0;
    }
    a.dof_of_vertex.assign(mesh.vertices.size(), -1);
    for (int v = mesh.boundary_count; v < mesh.vertex_count(); ++v) {
        a.dof_of_vertex[v] = a.dof_count++;
        a.vertex_of_dof.push_back(v);
    }
    if (a.dof_count == 0) throw NumericalError("mesh has no interior vertices");
    return a;
}

// Runs fn(chunk_index, first_element, last_element) over fixed-size chunks,
// possibly on several threads; chunk results must be written to per-chunk
// slots so the caller can combine them in chunk order.
template <class Fn>
void for_chunks(int element_count, int threads, const Fn& fn) {
    const int chunks = (element_count + kChunk - 1) / kChunk;
    if (threads <= 1 || chunks <= 1) {
        for (int c = 0; c < chunks; ++c)
            fn(c, c * kChunk, std::min(element_count, (c + 1) * kChunk));
        return;
    }
    std::vector<std::thread> pool;
    const int workers = std::min(threads, chunks);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int c = w; c < chunks; c += workers)
                fn(c, c * kChunk, std::min(element_count, (c + 1) * kChunk));
        });
    }
    for (auto& th : pool) th.join();
}

int chunk_count(int element_count) { return (element_count + kChunk - 1) / kChunk; }

double energy_of(const Assembly& a, const std::vector<double>& u, double q, double eps,
                 int threads) {
    const int ne = static_cast<int>(a.elements.size());
    std::vector<double> partial(chunk_count(ne), 0.0);
    for_chunks(ne, threads, [&](int c, int lo, int hi) {
        double acc = 0.0;
        for (int t = lo; t < hi; ++t) {
            const Element& e = a.elements[t];
            Vec2 g{0.0, 0.0};
            for (int k = 0; k < 3; ++k) g = g + u[e.v[k]] * e.grad[k];
            acc += e.area * std::pow(g.dot(g) + eps * eps, 0.5 * q) / q;
        }
        partial[c] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    for (std::size_t i = 0; i < u.size(); ++i) total -= u[i] * a.lumped_mass[i];
    if (!std::isfinite(total)) throw NumericalError("torsion energy is not finite");
    return total;
}

// Energy gradient on interior dofs.
std::vector<double> gradient_of(const Assembly& a, const std::vector<double>& u, double q,
                                double eps, int threads) {
    const int ne = static_cast<int>(a.elements.size());
    const int nc = chunk_count(ne);
    std::vector<std::vector<double>> partial(nc);
    for_chunks(ne, threads, [&](int c, int lo, int hi) {
        std::vector<double>& buf = partial[c];
        buf.assign(a.dof_count, 0.0);
        for (int t = lo; t < hi; ++t) {
            const Element& e = a.elements[t];
            Vec2 g{0.0, 0.0};
            for (int k = 0; k < 3; ++k) g = g + u[e.v[k]] * e.grad[k];
            const double w = std::pow(g.dot(g) + eps * eps, 0.5 * q - 1.0);
            for (int k = 0; k < 3; ++k) {
                const int dof = a.dof_of_vertex[e.v[k]];
                if (dof >= 0) buf[dof] += e.area * w * g.dot(e.grad[k]);
            }
        }
    });
    std::vector<double> grad(a.dof_count, 0.0);
    for (int c = 0; c < nc; ++c)
        for (int d = 0; d < a.dof_count; ++d) grad[d] += partial[c][d];
    for (int d = 0; d < a.dof_count; ++d) grad[d] -= a.lumped_mass[a.vertex_of_dof[d]];
    return grad;
}

Eigen::SparseMatrix<double> hessian_of(const Assembly& a, const std::vector<double>& u,
                                       double q, double eps, int threads) {
    using Triplet = Eigen::Triplet<double>;
    const int ne = static_cast<int>(a.elements.size());
    const int nc = chunk_count(ne);
    std::vector<std::vector<Triplet>> partial(nc);
    for_chunks(ne, threads, [&](int c, int lo, int hi) {
        std::vector<Triplet>& buf = partial[c];
        buf.reserve(9 * (hi - lo));
        for (int t = lo; t < hi; ++t) {
            const Element& e = a.elements[t];
            Vec2 g{0.0, 0.0};
            for (int k = 0; k < 3; ++k) g = g + u[e.v[k]] * e.grad[k];
            const double s2 = g.dot(g) + eps * eps;
            const double w = std::pow(s2, 0.5 * q - 1.0);
            for (int j = 0; j < 3; ++j) {
                const int dj = a.dof_of_vertex[e.v[j]];
                if (dj < 0) continue;
                for (int k = 0; k < 3; ++k) {
                    const int dk = a.dof_of_vertex[e.v[k]];
                    if (dk < 0) continue;
                    const double val =
                        e.area * w *
                        (e.grad[j].dot(e.grad[k]) +
                         (q - 2.0) * g.dot(e.grad[j]) * g.dot(e.grad[k]) / s2);
                    buf.emplace_back(dj, dk, val);
                }
            }
        }
    });
    std::vector<Triplet> all;
    std::size_t total = 0;
    for (const auto& p : partial) total += p.size();
    all.reserve(total);
    for (const auto& p : partial) all.insert(all.end(), p.begin(), p.end());
    Eigen::SparseMatrix<double> h(a.dof_count, a.dof_count);
    h.setFromTriplets(all.begin(), all.end());
    return h;
}

// Plain averages of incident element gradients; the recovery every derived
// boundary quantity uses.
std::vector<Vec2> nodal_gradients(const BodyMesh& mesh, const Assembly& a,
                                  const std::vector<double>& u) {
    std::vector<Vec2> sum(mesh.vertices.size(), Vec2{0.0, 0.0});
    std::vector<int> count(mesh.vertices.size(), 0);
    for (const Element& e : a.elements) {
        Vec2 g{0.0, 0.0};
        for (int k = 0; k < 3; ++k) g = g + u[e.v[k]] * e.grad[k];
        for (int k = 0; k < 3; ++k) {
            sum[e.v[k]] = sum[e.v[k]] + g;
            count[e.v[k]] += 1;
        }
    }
    for (std::size_t v = 0; v < sum.size(); ++v)
        sum[v] = sum[v] * (1.0 / count[v]);
    return sum;
}

} // namespace

TorsionField solve_torsion(const BodyMesh& mesh, double q, const SolverOptions& opts,
                           const std::vector<double>* warm_start) {
    if (!(q > 1.0))
        throw ValidationError("torsion exponent must exceed 1, got " + std::to_string(q));
    if (!(opts.epsilon > 0.0)) throw ValidationError("regularization must be positive");
    const int threads = resolve_threads(opts.threads);
    const Assembly a = prepare(mesh);
    const double eps = opts.epsilon;
    const double tol = opts.tol_scale * std::sqrt(static_cast<double>(mesh.vertex_count()));

    std::vector<double> u(mesh.vertices.size(), 0.0);
    if (warm_start != nullptr) {
        if (static_cast<int>(warm_start->size()) != mesh.vertex_count())
            throw ArgumentError("warm start size does not match the mesh");
        u = *warm_start;
        for (int v = 0; v < mesh.boundary_count; ++v) u[v] = 0.0;
    } else {
        // Cold start: the linear problem, then amplitude matched to the ball
        // solution of the requested exponent on an equal-area disk.
        Eigen::SparseMatrix<double> k2 = hessian_of(a, u, 2.0, eps, threads);
        Eigen::VectorXd rhs(a.dof_count);
        for (int d = 0; d < a.dof_count; ++d) rhs[d] = a.lumped_mass[a.vertex_of_dof[d]];
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k2);
        if (ldlt.info() != Eigen::Success)
            throw SolverError("linear cold start factorization failed", 0.0);
        const Eigen::VectorXd u2 = ldlt.solve(rhs);
        double scale = 1.0;
        if (q != 2.0) {
            const double r_eff = std::sqrt(std::max(mesh_area(mesh), 1e-300) / std::numbers::pi);
            const BallOracle target = ball_oracle(r_eff, 2, q);
            const double u2_center = r_eff * r_eff / 4.0;
            scale = target.center_value() / u2_center;
        }
        for (int d = 0; d < a.dof_count; ++d) u[a.vertex_of_dof[d]] = scale * u2[d];
    }

    TorsionField field;
    field.q = q;
    field.epsilon = eps;

    double energy = energy_of(a, u, q, eps, threads);
    int iterations = 0;
    double grad_norm = 0.0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    while (true) {
        const std::vector<double> grad = gradient_of(a, u, q, eps, threads);
        grad_norm = 0.0;
        for (double g : grad) grad_norm = std::max(grad_norm, std::abs(g));
        if (grad_norm <= tol) break;
        if (iterations >= opts.max_iterations)
            throw SolverError("torsion solve exceeded " +
                                  std::to_string(opts.max_iterations) +
                                  " iterations, gradient norm " + std::to_string(grad_norm),
                              grad_norm);

        const Eigen::SparseMatrix<double> h = hessian_of(a, u, q, eps, threads);
        Eigen::VectorXd g(a.dof_count);
        for (int d = 0; d < a.dof_count; ++d) g[d] = grad[d];
        if (!analyzed) {
            ldlt.analyzePattern(h);
            analyzed = true;
        }
        ldlt.factorize(h);
        Eigen::VectorXd delta;
        bool newton_ok = ldlt.info() == Eigen::Success;
        if (newton_ok) {
            delta = ldlt.solve(-g);
            // one refinement pass; the Hessian condition number near the
            // interior gradient zero otherwise caps attainable residuals
            const Eigen::VectorXd r = h * delta + g;
            delta -= ldlt.solve(r);
            newton_ok = delta.dot(g) < 0.0;
        }
        if (!newton_ok) delta = -g; // steepest descent fallback

        const double slope = delta.dot(g);
        const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(energy);
        double step = 1.0;
        std::vector<double> trial = u;
        while (true) {
            for (int d = 0; d < a.dof_count; ++d)
                trial[a.vertex_of_dof[d]] = u[a.vertex_of_dof[d]] + step * delta[d];
            const double trial_energy = energy_of(a, trial, q, eps, threads);
            if (trial_energy <= energy + 1e-4 * step * slope + slack) {
                energy = trial_energy;
                break;
            }
            step *= 0.5;
            if (step < 1e-14)
                throw SolverError("line search stalled, gradient norm " +
                                      std::to_string(grad_norm),
                                  grad_norm);
        }
        u.swap(trial);
        ++iterations;
    }

    field.mesh = mesh;
    field.u = std::move(u);
    field.newton_iterations = iterations;
    field.gradient_norm = grad_norm;

    double max_u = 0.0;
    for (int v = mesh.boundary_count; v < mesh.vertex_count(); ++v)
        max_u = std::max(max_u, field.u[v]);
    for (int v = mesh.boundary_count; v < mesh.vertex_count(); ++v) {
        if (field.u[v] < -1e-12 * max_u)
            throw NumericalError("interior torsion value dipped negative at vertex " +
                                 std::to_string(v));
    }

    const std::vector<Vec2> g_nodes = nodal_gradients(mesh, a, field.u);
    field.boundary_gradient.resize(mesh.boundary_count);
    double g_max = 0.0;
    for (int v = 0; v < mesh.boundary_count; ++v) {
        field.boundary_gradient[v] = g_nodes[v].norm();
        g_max = std::max(g_max, field.boundary_gradient[v]);
    }
    for (int v = 0; v < mesh.boundary_count; ++v)
        if (!(field.boundary_gradient[v] > 1e-14 * g_max))
            throw NumericalError("recovered boundary gradient degenerates at vertex " +
                                 std::to_string(v));
    return field;
}

double total_mass(const TorsionField& field) {
    const Assembly a = prepare(field.mesh);
    double acc = 0.0;
    for (int v = 0; v < field.mesh.vertex_count(); ++v)
        acc += field.u[v] * a.lumped_mass[v];
    return acc;
}

double rigidity(const TorsionField& field) {
    return std::pow(total_mass(field), field.q - 1.0);
}

std::vector<double> boundary_gradient_at_nodes(const TorsionField& field) {
    std::vector<double> out(field.mesh.polygon_vertex.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int v = field.mesh.polygon_vertex[i];
        out[i] = field.boundary_gradient[v];
    }
    return out;
}

double dirichlet_identity_gap(const TorsionField& field) {
    const Assembly a = prepare(field.mesh);
    const std::vector<Vec2> g_nodes = nodal_gradients(field.mesh, a, field.u);
    double energy = 0.0;
    for (const Element& e : a.elements) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Vec2 g = g_nodes[e.v[k]];
            acc += std::pow(g.norm(), field.q);
        }
        energy += e.area * acc / 3.0;
    }
    double mass = 0.0;
    for (int v = 0; v < field.mesh.vertex_count(); ++v)
        mass += field.u[v] * a.lumped_mass[v];
    return std::abs(energy - mass) / mass;
}

std::vector<double> torsion_measure(const TorsionField& field, const SupportProfile& p,
                                    DiffScheme scheme) {
    if (static_cast<int>(field.mesh.polygon_vertex.size()) != p.size())
        throw ArgumentError("profile grid does not match the mesh boundary nodes");
    const std::vector<double> b = principal_radius(p, scheme);
    const std::vector<double> g = boundary_gradient_at_nodes(field);
    std::vector<double> mu(p.size());
    for (int i = 0; i < p.size(); ++i) {
        if (!(b[i] > 0.0))
            throw ConvexityError("torsion measure needs a strictly convex profile", 0.0,
                                 b[i]);
        mu[i] = std::pow(g[i], field.q) * b[i] * p.step();
    }
    return mu;
}

double rigidity_from_boundary(const SupportProfile& p, const TorsionField& field,
                              DiffScheme scheme) {
    const std::vector<double> mu = torsion_measure(field, p, scheme);
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) acc += p[i] * mu[i];
    const double q = field.q;
    // Pohozaev identity: the weighted boundary integral equals the volume
    // integral of u up to this constant; rigidity is its (q-1) power.
    return std::pow((q - 1.0) / (q + 2.0 * (q - 1.0)) * acc, q - 1.0);
}

BallOracle ball_oracle(double radius, int dim, double q) {
    if (!(radius > 0.0)) throw ValidationError("ball radius must be positive");
    if (dim < 1) throw ValidationError("ball dimension must be at least 1");
    if (!(q > 1.0)) throw ValidationError("ball oracle needs q > 1");
    return BallOracle{radius, dim, q};
}

double BallOracle::value(double r) const {
    if (r < 0.0 || r > radius * (1.0 + 1e-12))
        throw ArgumentError("radial coordinate outside the ball");
    const double alpha = q / (q - 1.0);
    return (q - 1.0) / q * std::pow(static_cast<double>(dim), -1.0 / (q - 1.0)) *
           (std::pow(radius, alpha) - std::pow(r, alpha));
}

double BallOracle::derivative(double r) const {
    if (r < 0.0 || r > radius * (1.0 + 1e-12))
        throw ArgumentError("radial coordinate outside the ball");
    return -std::pow(r / dim, 1.0 / (q - 1.0));
}

double BallOracle::boundary_gradient() const {
    return std::pow(radius / dim, 1.0 / (q - 1.0));
}

double BallOracle::total_mass() const {
    const double alpha = q / (q - 1.0);
    const double omega = 2.0 * std::pow(std::numbers::pi, 0.5 * dim) /
                         std::tgamma(0.5 * dim);
    return (q - 1.0) / q * std::pow(static_cast<double>(dim), -1.0 / (q - 1.0)) * omega *
           std::pow(radius, alpha + dim) * alpha / (dim * (alpha + dim));
}

double BallOracle::rigidity() const { return std::pow(total_mass(), q - 1.0); }

namespace {

// Least-squares quadratic fit of u over a breadth-first vertex patch, in the
// tangent/normal frame of the center boundary vertex. The constant term is
// pinned to the boundary value u = 0 and the tangential linear term to the
// tangential derivative 0, so four coefficients remain: the normal derivative
// and the three second derivatives.
struct PatchFit {
    double g;    // outward normal derivative magnitude, -du/dnu
    double u_tt; // tangential second derivative
    double u_tn; // mixed second derivative
    double u_nn; // normal second derivative
};

PatchFit fit_hessian(const BodyMesh& mesh, const std::vector<double>& u,
                     const std::vector<std::vector<int>>& neighbors, int center,
                     Vec2 tau, Vec2 nu, int depth) {
    std::vector<int> patch{center};
    std::vector<int> dist(mesh.vertices.size(), -1);
    dist[center] = 0;
    std::size_t head = 0;
    while (head < patch.size()) {
        const int v = patch[head++];
        if (dist[v] >= depth) continue;
        for (int w : neighbors[v]) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                patch.push_back(w);
            }
        }
    }
    if (patch.size() < 10)
        throw NumericalError("boundary fit patch too small at vertex " +
                             std::to_string(center));
    const Vec2 c = mesh.vertices[center];
    double rho = 0.0;
    for (int v : patch) rho = std::max(rho, (mesh.vertices[v] - c).norm());
    Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
    Eigen::Vector4d atb = Eigen::Vector4d::Zero();
    for (int v : patch) {
        const Vec2 d = (mesh.vertices[v] - c) * (1.0 / rho);
        const double dt = d.dot(tau);
        const double dn = d.dot(nu);
        Eigen::Vector4d row(dn, 0.5 * dt * dt, dt * dn, 0.5 * dn * dn);
        ata += row * row.transpose();
        atb += row * u[v];
    }
    const Eigen::Vector4d coef = ata.ldlt().solve(atb);
    PatchFit fit;
    fit.g = -coef[0] / rho;
    fit.u_tt = coef[1] / (rho * rho);
    fit.u_tn = coef[2] / (rho * rho);
    fit.u_nn = coef[3] / (rho * rho);
    return fit;
}

} // namespace

BoundaryIdentityReport boundary_identity_check(const TorsionField& field,
                                               const SupportProfile& p,
                                               DiffScheme scheme) {
    if (static_cast<int>(field.mesh.polygon_vertex.size()) != p.size())
        throw ArgumentError("profile grid does not match the mesh boundary nodes");
    const BodyMesh& mesh = field.mesh;
    std::vector<std::vector<int>> neighbors(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            neighbors[t[k]].push_back(t[(k + 1) % 3]);
            neighbors[t[k]].push_back(t[(k + 2) % 3]);
        }
    }
    for (auto& list : neighbors) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }

    const std::vector<double> kappa = curvature(p, scheme);
    const int n = p.size();
    const double q = field.q;

    BoundaryIdentityReport rep;
    rep.tangential_residual.resize(n);
    rep.mixed_residual.resize(n);
    rep.normal_residual.resize(n);

    // all boundary quantities, the gradient included, come from one patch
    // reconstruction so the three identities are checked against each other
    std::vector<PatchFit> fits(n);
    for (int i = 0; i < n; ++i) {
        const double theta = p.theta(i);
        const Vec2 nu{std::cos(theta), std::sin(theta)};
        fits[i] = fit_hessian(mesh, field.u, neighbors, mesh.polygon_vertex[i],
                              nu.perp(), nu, 5);
    }
    for (int i = 0; i < n; ++i) {
        const PatchFit& fit = fits[i];
        const double dg = (fits[(i + 1) % n].g - fits[(i + n - 1) % n].g) /
                          (2.0 * p.step());

        const double rhs_t = kappa[i] * fit.g;
        const double rhs_m = kappa[i] * dg;
        const double rhs_n = kappa[i] * fit.g - std::pow(fit.g, 2.0 - q);

        rep.tangential_residual[i] = std::abs(fit.u_tt + rhs_t);
        rep.mixed_residual[i] = std::abs(fit.u_tn + rhs_m);
        rep.normal_residual[i] = std::abs((q - 1.0) * fit.u_nn - rhs_n);
        rep.tangential_scale = std::max(rep.tangential_scale, std::abs(rhs_t));
        rep.mixed_scale = std::max(rep.mixed_scale, std::abs(rhs_m));
        rep.normal_scale = std::max(rep.normal_scale, std::abs(rhs_n));
    }
    auto rel_max = [](const std::vector<double>& r, double scale) {
        double m = 0.0;
        for (double v : r) m = std::max(m, v);
        return scale > 0.0 ? m / scale : m;
    };
    rep.max_tangential = rel_max(rep.tangential_residual, rep.tangential_scale);
    rep.max_mixed = rel_max(rep.mixed_residual, rep.mixed_scale);
    rep.max_normal = rel_max(rep.normal_residual, rep.normal_scale);
    return rep;
}

} // namespace torqflow

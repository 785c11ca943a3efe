#pragma once

#include <vector>

#include "torqflow/geometry.hpp"
#include "torqflow/mesh.hpp"

namespace torqflow {

struct SolverOptions {
    double epsilon = 1e-8;    // gradient regularization inside the energy
    double tol_scale = 1e-10; // stop when ||grad J||_inf <= tol_scale * sqrt(vertex count)
    int max_iterations = 200;
    int threads = 0; // 0: read TORQFLOW_THREADS, which defaults to 1
};

// Minimizer of J(u) = sum_T A_T (|grad u|^2 + eps^2)^(q/2) / q - sum_i u_i m_i
// over fields vanishing on the boundary, the P1 form of the q-torsion problem.
struct TorsionField {
    BodyMesh mesh;
    double q = 2.0;
    double epsilon = 1e-8;
    std::vector<double> u;                 // nodal values, zero on the boundary
    std::vector<double> boundary_gradient; // recovered |grad u| per boundary vertex
    int newton_iterations = 0;
    double gradient_norm = 0.0; // final energy-gradient sup norm
};

// Damped Newton with Armijo backtracking; q > 1. The warm start, when given,
// must be a nodal vector on the same mesh.
TorsionField solve_torsion(const BodyMesh& mesh, double q, const SolverOptions& opts = {},
                           const std::vector<double>* warm_start = nullptr);

// Integral of u, by the lumped load.
double total_mass(const TorsionField& field);
// q-torsional rigidity (integral of u)^(q-1).
double rigidity(const TorsionField& field);

// Recovered gradient magnitude at the polygon angle nodes the mesh was built
// from, in node order.
std::vector<double> boundary_gradient_at_nodes(const TorsionField& field);

// Relative defect of the Dirichlet form identity: the q-energy evaluated with
// patch-recovered nodal gradients against the load pairing. Raw element
// gradients satisfy the identity to machine precision by construction, so the
// recovered form is the one that measures discretization error.
double dirichlet_identity_gap(const TorsionField& field);

// Boundary measure weights mu_i = |grad u|^q b_i dtheta at the angle nodes.
std::vector<double> torsion_measure(const TorsionField& field, const SupportProfile& p,
                                    DiffScheme scheme = DiffScheme::central);

// Boundary representation of the rigidity,
// ((q-1)/(q + n(q-1)) * sum_i h_i |grad u|_i^q b_i dtheta)^(q-1) with n = 2.
double rigidity_from_boundary(const SupportProfile& p, const TorsionField& field,
                              DiffScheme scheme = DiffScheme::central);

// Closed-form q-torsion of the n-ball, the solver's accuracy oracle.
struct BallOracle {
    double radius = 1.0;
    int dim = 2;
    double q = 2.0;

    double value(double r) const;
    double derivative(double r) const;
    double center_value() const { return value(0.0); }
    double boundary_gradient() const;
    double total_mass() const;
    double rigidity() const;
};

BallOracle ball_oracle(double radius, int dim, double q);

// Residuals of the boundary Hessian identities at the angle nodes: the
// tangential relation u_tt = -kappa |grad u|, the mixed relation
// u_tn = -kappa d|grad u|/dtheta, and the normal relation
// (q-1) u_nn = kappa |grad u| - |grad u|^(2-q). Scales carry the magnitude
// of each right side for relative comparison.
struct BoundaryIdentityReport {
    std::vector<double> tangential_residual;
    std::vector<double> mixed_residual;
    std::vector<double> normal_residual;
    double tangential_scale = 0.0;
    double mixed_scale = 0.0;
    double normal_scale = 0.0;
    double max_tangential = 0.0;
    double max_mixed = 0.0;
    double max_normal = 0.0;
};

BoundaryIdentityReport boundary_identity_check(const TorsionField& field,
                                               const SupportProfile& p,
                                               DiffScheme scheme = DiffScheme::central);

} // namespace torqflow

#include "torqflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "torqflow/errors.hpp"

namespace torqflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_config(const FlowConfig& c) {
    if (!(c.q > 1.0)) throw ValidationError("flow requires q > 1");
    if (!(c.target_edge > 0.0) || !(c.dt_max > 0.0) || !(c.cfl > 0.0) ||
        !(c.residual_tol > 0.0) || !(c.tq_drift_tol > 0.0) || !(c.gamma_slack > 0.0) ||
        !(c.corridor > 1.0) || !(c.collapse_fraction > 0.0))
        throw ValidationError("flow tolerances and step bounds must be positive");
    if (c.sustain_steps < 1 || c.max_steps < 1)
        throw ValidationError("flow step counts must be at least one");
}

// Ring-wise nearest-node transfer: vertices correspond through relative ring
// depth and the fractional polygon coordinate.
std::vector<double> transfer_field(const TorsionField& from, const BodyMesh& to) {
    const BodyMesh& old = from.mesh;
    const double np_old = static_cast<double>(old.polygon_vertex.size());
    const double np_new = static_cast<double>(to.polygon_vertex.size());
    std::vector<std::vector<std::pair<double, int>>> rings(old.ring_count + 1);
    for (int v = 0; v < old.vertex_count(); ++v)
        rings[old.vertex_ring[v]].push_back({old.vertex_param[v], v});
    for (auto& ring : rings) std::sort(ring.begin(), ring.end());

    std::vector<double> u(to.vertices.size());
    for (int v = 0; v < to.vertex_count(); ++v) {
        const double depth = static_cast<double>(to.vertex_ring[v]) / to.ring_count;
        int r = static_cast<int>(std::lround(depth * old.ring_count));
        r = std::clamp(r, 0, old.ring_count);
        const auto& ring = rings[r];
        const double want = to.vertex_param[v] / np_new * np_old;
        auto it = std::lower_bound(ring.begin(), ring.end(),
                                   std::make_pair(want, std::numeric_limits<int>::min()));
        int best = -1;
        double best_d = np_old;
        for (auto cand : {it == ring.begin() ? ring.end() - 1 : it - 1,
                          it == ring.end() ? ring.begin() : it, ring.begin(),
                          ring.end() - 1}) {
            double d = std::abs(cand->first - want);
            d = std::min(d, np_old - d);
            if (d < best_d) {
                best_d = d;
                best = cand->second;
            }
        }
        u[v] = from.u[best];
    }
    for (int v = 0; v < to.boundary_count; ++v) u[v] = 0.0;
    return u;
}

// Projection onto the leading Fourier modes of the grid, by direct real
// transform; the grids in play are small enough that no FFT is warranted.
std::vector<double> lowpass(const std::vector<double>& v, int modes) {
    const int n = static_cast<int>(v.size());
    const int cut = std::min(modes, n / 2 - 1);
    std::vector<double> out(n, 0.0);
    for (int m = 0; m <= cut; ++m) {
        double ca = 0.0;
        double sa = 0.0;
        for (int j = 0; j < n; ++j) {
            const double ang = kTwoPi * m * j / n;
            ca += v[j] * std::cos(ang);
            sa += v[j] * std::sin(ang);
        }
        const double w = (m == 0 ? 1.0 : 2.0) / n;
        ca *= w;
        sa *= w;
        for (int j = 0; j < n; ++j) {
            const double ang = kTwoPi * m * j / n;
            out[j] += ca * std::cos(ang) + sa * std::sin(ang);
        }
    }
    return out;
}

TrajectoryRecord record_of(int step, double dt, const FlowState& s,
                           const FlowConfig& cfg) {
    TrajectoryRecord r;
    r.step = step;
    r.t = s.t;
    r.dt = dt;
    r.lambda = s.lambda;
    r.tq = s.tq;
    r.gamma = s.gamma;
    r.residual = s.residual;
    const std::vector<double> b = principal_radius(s.profile, cfg.scheme);
    r.min_h = *std::min_element(s.profile.values().begin(), s.profile.values().end());
    r.max_h = *std::max_element(s.profile.values().begin(), s.profile.values().end());
    r.min_b = *std::min_element(b.begin(), b.end());
    return r;
}

} // namespace

const char* to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_steps: return "max_steps";
    case Termination::convexity_lost: return "convexity_lost";
    case Termination::solver_failure: return "solver_failure";
    }
    return "unknown";
}

FlowState make_state(const SupportProfile& p, const FlowConfig& config, double t,
                     const TorsionField* previous) {
    const ConvexityReport conv = validate_support(p, config.scheme);
    if (!conv.ok)
        throw ConvexityError("flow state lost strict convexity", conv.min_h, conv.min_b);

    MeshOptions mo;
    mo.target_edge = config.target_edge;
    const BodyMesh mesh = triangulate(boundary_points(p, config.scheme), mo);

    // A transferred start only helps the nonlinear path; for q = 2 the cold
    // start is already the exact discrete solution.
    std::vector<double> warm;
    const std::vector<double>* warm_ptr = nullptr;
    if (previous != nullptr && config.q != 2.0) {
        warm = transfer_field(*previous, mesh);
        warm_ptr = &warm;
    }

    FlowState s{t, p, solve_torsion(mesh, config.q, config.solver, warm_ptr),
                0.0, 0.0, 0.0, 0.0};
    s.tq = rigidity(s.field);
    s.lambda = lambda_factor(s, config);
    s.gamma = gamma(s, config);
    s.residual = ma_residual(s, config);
    return s;
}

double lambda_factor(const FlowState& state, const FlowConfig& config) {
    const SupportProfile& p = state.profile;
    const std::vector<double> b = principal_radius(p, config.scheme);
    const std::vector<double> g = boundary_gradient_at_nodes(state.field);
    const double dtheta = p.step();
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        const double theta = p.theta(i);
        num += std::pow(g[i], config.q) * p[i] * b[i] * dtheta;
        den += p[i] * config.density(theta) / config.phi(p[i]) * dtheta;
    }
    if (!std::isfinite(num) || !std::isfinite(den) || !(num > 0.0) || !(den > 0.0))
        throw NumericalError("normalization quadratures degenerated");
    return num / den;
}

std::vector<double> velocity(const FlowState& state, const FlowConfig& config) {
    const SupportProfile& p = state.profile;
    const std::vector<double> kappa = curvature(p, config.scheme);
    const std::vector<double> g = boundary_gradient_at_nodes(state.field);
    std::vector<double> v(p.size());
    for (int i = 0; i < p.size(); ++i) {
        const double f = config.density(p.theta(i));
        v[i] = -state.lambda * f * p[i] * kappa[i] /
                   (std::pow(g[i], config.q) * config.phi(p[i])) +
               p[i];
    }
    return v;
}

double gamma(const FlowState& state, const FlowConfig& config) {
    const SupportProfile& p = state.profile;
    const double dtheta = p.step();
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i)
        acc += config.density(p.theta(i)) * config.phi.hat(p[i]) * dtheta;
    return acc;
}

double ma_residual(const FlowState& state, const FlowConfig& config) {
    const SupportProfile& p = state.profile;
    const std::vector<double> b = principal_radius(p, config.scheme);
    const std::vector<double> g = boundary_gradient_at_nodes(state.field);
    double worst = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        const double f = config.density(p.theta(i));
        const double lhs = config.phi(p[i]) * std::pow(g[i], config.q) * b[i] /
                           state.lambda;
        worst = std::max(worst, std::abs(lhs - f) / f);
    }
    return worst;
}

FlowState step(const FlowState& state, const FlowConfig& config) {
    std::vector<double> v = velocity(state, config);
    const int n = state.profile.size();
    const bool banded = config.velocity_modes > 0;
    if (banded) v = lowpass(v, config.velocity_modes);
    const int k_top = std::min(config.velocity_modes, n / 2 - 1);
    const std::vector<double> b = principal_radius(state.profile, config.scheme);
    double dt = config.dt_max;
    for (int i = 0; i < n; ++i) {
        const double speed = std::abs(v[i]);
        if (speed > 0.0) dt = std::min(dt, config.cfl * state.profile[i] / speed);
        if (!banded) continue;
        // Linearized curvature response of mode k grows like k^2 |v - h| / b;
        // keep explicit Euler inside its stability region for retained modes.
        const double stiff = std::abs(v[i] - state.profile[i]) * k_top * k_top;
        if (stiff > 0.0) dt = std::min(dt, 1.8 * b[i] / stiff);
    }

    std::vector<double> h = state.profile.values();
    for (int i = 0; i < state.profile.size(); ++i) h[i] += dt * v[i];

    FlowState next = make_state(SupportProfile(std::move(h)), config, state.t + dt,
                                &state.field);
    if (!config.rescale_tq) return next;

    // Exact dilation back to the incoming rigidity: the scaled field is the
    // discrete solution of the scaled body, so no re-solve is needed.
    const double expo = config.q + 2.0 * (config.q - 1.0);
    const double s = std::pow(state.tq / next.tq, 1.0 / expo);
    next.profile = rescale(next.profile, s);
    for (Vec2& x : next.field.mesh.vertices) x = x * s;
    const double value_scale = std::pow(s, config.q / (config.q - 1.0));
    const double grad_scale = std::pow(s, 1.0 / (config.q - 1.0));
    for (double& u : next.field.u) u *= value_scale;
    for (double& g : next.field.boundary_gradient) g *= grad_scale;
    next.field.gradient_norm *= s * s;
    next.tq = rigidity(next.field);
    next.lambda = lambda_factor(next, config);
    next.gamma = gamma(next, config);
    next.residual = ma_residual(next, config);
    return next;
}

MonitorReport monitor_check(const FlowState& prev, const FlowState& next,
                            const FlowConfig& config) {
    MonitorReport rep;
    rep.tq_drift = std::abs(next.tq - prev.tq) / prev.tq;
    rep.gamma_step = (next.gamma - prev.gamma) / std::max(1.0, std::abs(prev.gamma));
    rep.tq_flag = config.rescale_tq && rep.tq_drift > config.tq_drift_tol;
    rep.gamma_flag = rep.gamma_step > config.gamma_slack;
    const auto& h = next.profile.values();
    const double lo = *std::min_element(h.begin(), h.end());
    const double hi = *std::max_element(h.begin(), h.end());
    rep.corridor_flag = lo < 1.0 / config.corridor || hi > config.corridor ||
                        next.lambda < 1.0 / config.corridor ||
                        next.lambda > config.corridor;
    return rep;
}

Trajectory run(const FlowConfig& config) {
    check_config(config);
    Trajectory traj;
    FlowState cur = make_state(config.initial, config, 0.0);
    const auto& h0 = cur.profile.values();
    const double floor_h = config.collapse_fraction * *std::min_element(h0.begin(), h0.end());

    traj.records.push_back(record_of(0, 0.0, cur, config));
    if (config.snapshot_every > 0) traj.snapshots.push_back({0, cur.profile});
    int sustained = cur.residual <= config.residual_tol ? 1 : 0;

    if (sustained >= config.sustain_steps) {
        traj.termination = Termination::converged;
    } else {
        for (int k = 1; k <= config.max_steps; ++k) {
            FlowState next = cur;
            try {
                next = step(cur, config);
            } catch (const ConvexityError& e) {
                traj.termination = Termination::convexity_lost;
                traj.diagnostic = std::string(e.what()) +
                                  ", min b " + std::to_string(e.min_b());
                break;
            } catch (const SolverError& e) {
                traj.termination = Termination::solver_failure;
                traj.diagnostic = e.what();
                break;
            }
            traj.monitors.push_back(monitor_check(cur, next, config));
            const double dt = next.t - cur.t;
            cur = std::move(next);
            traj.steps = k;
            traj.records.push_back(record_of(k, dt, cur, config));
            if (config.snapshot_every > 0 && k % config.snapshot_every == 0)
                traj.snapshots.push_back({k, cur.profile});

            const auto& h = cur.profile.values();
            if (*std::min_element(h.begin(), h.end()) < floor_h) {
                traj.termination = Termination::convexity_lost;
                traj.diagnostic = "support collapsed below the configured floor";
                break;
            }
            sustained = cur.residual <= config.residual_tol ? sustained + 1 : 0;
            if (sustained >= config.sustain_steps) {
                traj.termination = Termination::converged;
                break;
            }
        }
    }
    traj.final_state = std::move(cur);
    return traj;
}

} // namespace torqflow

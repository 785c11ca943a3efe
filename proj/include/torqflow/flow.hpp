#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "torqflow/geometry.hpp"
#include "torqflow/mesh.hpp"
#include "torqflow/orlicz.hpp"
#include "torqflow/torsion.hpp"

namespace torqflow {

// Everything a trajectory needs: the evolving support profile is the state
// variable, the rest is derived per step.
struct FlowConfig {
    explicit FlowConfig(SupportProfile initial_profile)
        : initial(std::move(initial_profile)) {}

    SupportProfile initial;
    double q = 2.0;
    OrliczFunction phi = OrliczFunction::power(1.0);
    DensitySpec density = DensitySpec::constant(1.0);

    // Fine enough that the Monge-Ampere residual floor on a disk (~3e-3,
    // dominated by gradient-recovery ripple) sits clearly below residual_tol.
    double target_edge = 0.025;
    DiffScheme scheme = DiffScheme::spectral;
    SolverOptions solver;

    double dt_max = 0.02;
    double cfl = 0.1; // per-node cap dt <= cfl * h / |v|
    bool rescale_tq = true;
    // The Euler update keeps velocity Fourier modes up to this order. Gradient
    // recovery noise lives at grid frequency, where the second derivative in
    // b = h'' + h amplifies it quadratically; untruncated steps lose convexity
    // within a few iterations. The step limiter also enforces the parabolic
    // bound dt <= 2 b / (k^2 |v_curv|) for the retained modes. Zero selects
    // manual stepping — full-band velocity and no spectral cap, for time-
    // integrator consistency studies where the caller owns dt.
    int velocity_modes = 8;

    double residual_tol = 1e-2;
    int sustain_steps = 5; // consecutive states below tolerance to stop
    int max_steps = 5000;

    double tq_drift_tol = 1e-8;  // relative, monitored when rescaling is on
    double gamma_slack = 1e-8;   // relative tolerance on entropy increase
    double corridor = 100.0;     // admissible band [1/C, C] for h and lambda
    double collapse_fraction = 1e-3; // abort when min h falls below this of start
    int snapshot_every = 0;          // 0: no intermediate snapshots
};

// A fully solved instant of the flow: the cached torsion field always belongs
// to the body of profile.
struct FlowState {
    double t = 0.0;
    SupportProfile profile;
    TorsionField field;
    double lambda = 0.0;
    double tq = 0.0;
    double gamma = 0.0;
    double residual = 0.0;
};

struct MonitorReport {
    double tq_drift = 0.0;   // |delta T_q| / T_q
    double gamma_step = 0.0; // relative entropy change, positive = increase
    bool tq_flag = false;
    bool gamma_flag = false;
    bool corridor_flag = false;

    bool ok() const { return !tq_flag && !gamma_flag && !corridor_flag; }
};

enum class Termination { converged, max_steps, convexity_lost, solver_failure };
const char* to_string(Termination t);

struct TrajectoryRecord {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    double lambda = 0.0;
    double tq = 0.0;
    double gamma = 0.0;
    double residual = 0.0;
    double min_h = 0.0;
    double max_h = 0.0;
    double min_b = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records; // row 0 is the initial state
    std::vector<MonitorReport> monitors;   // one per accepted step
    std::vector<std::pair<int, SupportProfile>> snapshots;
    std::optional<FlowState> final_state;  // last solved state, also on aborts
    Termination termination = Termination::max_steps;
    int steps = 0;
    std::string diagnostic;
};

// Solve the torsion problem on the body of p and derive the normalization,
// rigidity, entropy, and equation residual. A previous state provides the
// Newton warm start by ring-wise nodal transfer.
FlowState make_state(const SupportProfile& p, const FlowConfig& config, double t = 0.0,
                     const TorsionField* previous = nullptr);

// Normalization lambda = sum |grad u|^q h b dtheta / sum h f / phi(h) dtheta.
double lambda_factor(const FlowState& state, const FlowConfig& config);

// Per-node speed v = -lambda f h kappa / (|grad u|^q phi(h)) + h.
std::vector<double> velocity(const FlowState& state, const FlowConfig& config);

// Explicit Euler update of h with the step limiter, re-solved; when enabled,
// the exact dilation bringing T_q back to the incoming value is applied.
FlowState step(const FlowState& state, const FlowConfig& config);

// Entropy functional sum f phihat(h) dtheta.
double gamma(const FlowState& state, const FlowConfig& config);

// Sup of |(1/lambda) phi(h) |grad u|^q b - f| / f over the grid.
double ma_residual(const FlowState& state, const FlowConfig& config);

MonitorReport monitor_check(const FlowState& prev, const FlowState& next,
                            const FlowConfig& config);

// Iterate step() until the residual stays below tolerance for
// config.sustain_steps consecutive states, recording per-step monitors;
// convexity loss, collapse, and solver failures terminate with a diagnostic.
Trajectory run(const FlowConfig& config);

} // namespace torqflow

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "torqflow/flow.hpp"

namespace torqflow {

// On-disk description of a run: the flow configuration plus output placement,
// cross-check tolerances for the single-solve command, and plotting toggles.
// One JSON document fully determines a run.
struct RunConfig {
    FlowConfig flow;
    std::string label = "run";
    std::filesystem::path out_dir;
    bool plots = true;
    int grid = 128;
    double cross_check_tol = 2e-2; // volume vs boundary rigidity relative gap
    double identity_gap_tol = 2e-2; // Dirichlet form identity relative defect
    double boundary_residual_tol = 5e-2; // boundary Hessian identities
};

// Parsed summary table plus the manifest of files backing it; every listed
// file exists when the bundle is returned.
struct ReportBundle {
    std::vector<std::pair<std::string, std::string>> summary;
    std::vector<std::filesystem::path> files;
};

// Reads and validates the JSON run description. q, phi, f, and body are
// required; everything else defaults. Unknown keys are rejected. Throws
// ValidationError on any defect.
RunConfig parse_run_config(const std::filesystem::path& config_path);

// Exit code contract shared by all commands:
//   0 success / converged        3 solver failure
//   1 usage                      4 convexity lost
//   2 validation                 5 not converged / tolerance gate missed
int cmd_oracle(double radius, int dim, double q, const std::filesystem::path& out_dir);
int cmd_torsion(const std::filesystem::path& config_path);
int cmd_flow(const std::filesystem::path& config_path);
int cmd_report(const std::filesystem::path& run_dir);

// The summary/manifest builder behind cmd_report; throws ValidationError
// naming the offending file when an artifact is missing or corrupt.
ReportBundle report_bundle(const std::filesystem::path& run_dir);

// Full argv dispatcher used by the binary; honors TORQFLOW_THREADS.
int cli_main(int argc, const char* const* argv);

} // namespace torqflow

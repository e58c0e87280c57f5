#pragma once
// Command implementations behind the `lab` executable. Each returns the process
// exit code and writes its artifacts below the output directory.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "lab/barriers.hpp"
#include "lab/config.hpp"
#include "lab/system_solver.hpp"

namespace lab {

enum class ExitCode : int { ok = 0, config = 1, eigen = 2, calibration = 3, convergence = 4 };

/// Worker threads allowed by LAB_THREADS (default: hardware concurrency, at least 1).
/// Throws ConfigError if the variable is set but not a positive integer.
unsigned thread_cap();

/// Mesh, distances, layer, model and the two principal eigenpairs of a run.
struct RunSetup {
    Mesh mesh;
    DistanceField d;
    BoundaryLayer layer;
    ModelParams model;
    std::array<Eigenpair, 2> eig;
};

/// Builds the setup; eigen failures propagate as ConvergenceFailure.
RunSetup prepare_run(const RunConfig& cfg);

struct BranchVerdict {
    bool pass = false;
    std::string expected;  ///< classification the branch must reach
    SignClass limit_class;
    bool inside_box = false;
    std::string reason;    ///< empty on pass
};

/// Expected outcome per branch: positive/negative classes with nonnegative weak and positive
/// strict margins; nodal branches nodal_synchronized for sign-coupled models, any nodal class
/// otherwise. Branch-level failures (rungs, limit) fail the verdict.
BranchVerdict judge_branch(const RunSetup& setup, const BarrierSet& barriers, BoxKind box,
                           const SolutionBranch& branch, double sign_tol_rel);

/// JSON form of a branch: rungs with residuals, gaps, small-set measures and classes; the limit.
nlohmann::json branch_json(const RunSetup& setup, const BarrierSet& barriers, const SolutionBranch& branch,
                           const BranchVerdict& verdict, double sign_tol_rel);

/// Writes rung/limit CSVs, diagnostics.json and SVG plots into dir.
void write_branch_artifacts(const std::filesystem::path& dir, const RunSetup& setup, const BarrierSet& barriers,
                            const SolutionBranch& branch, const nlohmann::json& diagnostics);

int cmd_eigen(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_solve(const RunConfig& cfg, BoxKind branch, const std::filesystem::path& out, std::ostream& log);
int cmd_verify(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Serialized report text as written by cmd_verify (stable key order and number format).
std::string dump_json(const nlohmann::json& j);

}  // namespace lab

#pragma once
// Run configuration: flat `key = value` text with strict key checking.
//
//   # comment
//   domain = interval        # interval | rectangle
//   n = 256                  # interval elements
//   nx = 32                  # rectangle cells (ny likewise)
//   family = example_coupled # example_coupled | example_decoupled | custom
//   p1 = 2
//   alpha1 = -0.5
//   ladder = 4, 8, 16, 32
//
// See README.md for the full key list.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lab/mesh.hpp"
#include "lab/model.hpp"
#include "lab/system_solver.hpp"

namespace lab {

enum class DomainKind { interval, rectangle };

struct RunConfig {
    DomainKind domain = DomainKind::interval;
    int n = 256;
    int nx = 32, ny = 32;
    std::string family = "example_coupled";
    std::array<double, 2> p{2.0, 2.0};
    std::array<double, 2> alpha{-0.5, 0.5}, beta{0.5, -0.5};
    std::array<std::optional<double>, 2> alpha_hat, beta_hat;  ///< default to alpha, beta
    double amplitude = 1.0;                                    ///< custom family only
    double delta = 0.1;
    std::vector<int> ladder{4, 8, 16, 32};
    std::optional<double> tol_residual, accept_tol, target_tol;
    double singular_guard_factor = 10.0;
    double limit_eps = 1e-8;
    double limit_accept_tol = 1e-4;
    std::uint64_t seed = 1;
    std::string out = "lab_out";

    int dim() const { return domain == DomainKind::interval ? 1 : 2; }
};

/// Parses config text; throws ConfigError on syntax errors, unknown or duplicate keys,
/// and invalid values (including model constraints re-validated through the builders).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

Mesh build_mesh(const RunConfig& cfg);
/// Builds the model family with hat-exponent overrides; throws ConfigError if invalid.
ModelParams build_model(const RunConfig& cfg);
SolverOpts solver_opts(const RunConfig& cfg);
SystemOpts system_opts(const RunConfig& cfg);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

}  // namespace lab

// lab eigen|solve|verify --config <path> [--branch positive|negative|nodal] [--out <dir>]
//
// Exit codes: 0 ok, 1 configuration error, 2 eigen failure, 3 calibration failure,
// 4 convergence failure (or a failed verification rollup).

#include <iostream>

#include "CLI11.hpp"
#include "lab/commands.hpp"
#include "lab/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for singular quasilinear elliptic systems"};
    app.require_subcommand(1);
    std::string config_path, out_dir, branch = "positive";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Run configuration (key = value text)")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides the config key 'out')");
    };
    CLI::App* eigen = app.add_subcommand("eigen", "Principal eigenpairs for p1 and p2");
    CLI::App* solve = app.add_subcommand("solve", "Calibrate barriers and continue one branch");
    CLI::App* verify = app.add_subcommand("verify", "Hypotheses, barriers, all branches and the rollup report");
    add_common(eigen);
    add_common(solve);
    add_common(verify);
    solve->add_option("--branch", branch, "positive, negative or nodal")
        ->check(CLI::IsMember({"positive", "negative", "nodal"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(lab::ExitCode::config);
    }

    try {
        lab::thread_cap();  // reject a malformed LAB_THREADS before any work
        const lab::RunConfig cfg = lab::load_config(config_path);
        const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.out) : std::filesystem::path(out_dir);
        if (eigen->parsed()) return lab::cmd_eigen(cfg, out, std::cerr);
        if (solve->parsed()) return lab::cmd_solve(cfg, lab::parse_box_kind(branch), out, std::cerr);
        return lab::cmd_verify(cfg, out, std::cerr);
    } catch (const lab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return static_cast<int>(lab::ExitCode::config);
    } catch (const lab::InvalidArgument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return static_cast<int>(lab::ExitCode::config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(lab::ExitCode::convergence);
    }
}

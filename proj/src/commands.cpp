#include "lab/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "lab/errors.hpp"
#include "lab/output.hpp"

namespace lab {

using nlohmann::json;

namespace {

/// Finite numbers as JSON numbers, non-finite ones as strings ("inf", "nan").
json num(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

json pair_json(const std::array<double, 2>& v) { return json::array({num(v[0]), num(v[1])}); }

const char* statement_of(const std::string& name) {
    static const std::map<std::string, const char*> m{
        {"supersolution_positive", "C^{p_i-1}(1 + d^alpha_i + d^beta_i) > max f_i over the upper envelope"},
        {"subsolution_positive", "min f_i over the lower envelope > C^{1-p_i} * (layer source of z_i)"},
        {"subsolution_negative", "min f_i over the mirrored upper envelope > -C^{p_i-1}(1 + d^alpha_i + d^beta_i)"},
        {"supersolution_negative", "-C^{1-p_i} * (layer source of z_i) > max f_i over the mirrored lower envelope"},
        {"distance_chain", "d/c <= z_i <= y_i <= c d at interior nodes"},
        {"eigen_dominates_subsolution", "phi_i >= z_i / C at every node"},
    };
    const std::string stem = name.substr(0, name.rfind('_'));
    const auto it = m.find(stem);
    return it == m.end() ? "" : it->second;
}

json check_json(const BarrierCheck& c) {
    return {{"name", c.name},
            {"statement", statement_of(c.name)},
            {"component", c.component + 1},
            {"worst_margin", num(c.worst_margin)},
            {"worst_node", c.worst_node},
            {"pass", c.pass}};
}

json class_json(const SignClass& sc) {
    return {{"kind", to_string(sc.kind)},
            {"tol", num(sc.tol)},
            {"weak_margin", pair_json(sc.weak_margin)},
            {"strict_margin", pair_json(sc.strict_margin)},
            {"changes_sign", json::array({sc.changes_sign[0], sc.changes_sign[1]})},
            {"sync_defect", num(sc.sync_defect)}};
}

json eigen_json(const Eigenpair& e) {
    return {{"p", num(e.p)}, {"lambda", num(e.lambda)}, {"c0", num(e.c0)}, {"iterations", e.iterations}};
}

json error_json(const std::string& command, ExitCode code, const std::string& kind, const std::string& message) {
    return {{"command", command}, {"exit_code", static_cast<int>(code)}, {"error", kind}, {"message", message}};
}

void write_json(const std::filesystem::path& path, const json& j) { write_text_file(path, dump_json(j)); }

std::string fields_csv(const Mesh& mesh, const std::vector<NamedField>& fields) {
    std::ostringstream os;
    write_fields_csv(os, mesh, fields);
    return os.str();
}

/// Nodal values laid out as the (ny+1) x (nx+1) lattice, one CSV row per y level.
std::string grid_csv(const Mesh& mesh, const ScalarField& v) {
    std::vector<std::vector<double>> g(static_cast<std::size_t>(mesh.ny + 1),
                                       std::vector<double>(static_cast<std::size_t>(mesh.nx + 1), 0.0));
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k)
        g[static_cast<std::size_t>(mesh.grid_index[k][1])][static_cast<std::size_t>(mesh.grid_index[k][0])] = v[k];
    std::ostringstream os;
    for (const auto& row : g) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << "\n";
    }
    return os.str();
}

bool is_nodal_kind(SignKind k) { return k == SignKind::nodal_synchronized || k == SignKind::nodal_other; }

/// Runs jobs 0..n-1 on at most thread_cap() threads.
template <class F>
void parallel_for(std::size_t n, F&& job) {
    const std::size_t workers = std::min<std::size_t>(n, thread_cap());
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) job(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t k; (k = next++) < n;) {
                try {
                    job(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

unsigned thread_cap() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("LAB_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    const std::string s(env);
    unsigned v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v == 0)
        throw ConfigError("LAB_THREADS must be a positive integer, got '" + s + "'");
    return v;
}

RunSetup prepare_run(const RunConfig& cfg) {
    RunSetup s;
    s.mesh = build_mesh(cfg);
    s.d = distance_field(s.mesh);
    try {
        s.layer = boundary_layer(s.mesh, s.d, cfg.delta);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("delta: ") + e.what());
    }
    s.model = build_model(cfg);
    const SolverOpts so = solver_opts(cfg);
    s.eig[0] = principal_eigenpair(s.mesh, cfg.p[0], so);
    s.eig[1] = cfg.p[1] == cfg.p[0] ? s.eig[0] : principal_eigenpair(s.mesh, cfg.p[1], so);
    return s;
}

BranchVerdict judge_branch(const RunSetup& setup, const BarrierSet& barriers, BoxKind box,
                           const SolutionBranch& branch, double sign_tol_rel) {
    BranchVerdict v;
    v.limit_class = classify_solution(setup.mesh, branch.limit, barriers, setup.d, sign_tol_rel);
    v.inside_box = inside(make_box(box, barriers), branch.limit.fields(), 1e-12);
    const SignKind k = v.limit_class.kind;
    bool class_ok = false;
    switch (box) {
        case BoxKind::positive:
        case BoxKind::negative: {
            v.expected = to_string(box);
            const bool margins = std::min(v.limit_class.weak_margin[0], v.limit_class.weak_margin[1]) >= -1e-10 &&
                                 std::min(v.limit_class.strict_margin[0], v.limit_class.strict_margin[1]) > 0.0;
            class_ok = k == (box == BoxKind::positive ? SignKind::positive : SignKind::negative) && margins;
            break;
        }
        case BoxKind::nodal:
            if (setup.model.coupling == Coupling::sign_coupled) {
                v.expected = "nodal_synchronized";
                class_ok = k == SignKind::nodal_synchronized;
            } else {
                v.expected = "nodal_synchronized or nodal_other";
                class_ok = is_nodal_kind(k);
            }
            break;
    }
    if (branch.failed)
        v.reason = branch.failure;
    else if (!v.inside_box)
        v.reason = "limit leaves the " + to_string(box) + " box";
    else if (!class_ok)
        v.reason = "limit classified " + to_string(k) + ", expected " + v.expected;
    v.pass = v.reason.empty();
    return v;
}

json branch_json(const RunSetup& setup, const BarrierSet& barriers, const SolutionBranch& branch,
                 const BranchVerdict& verdict, double sign_tol_rel) {
    const auto& dg = branch.diagnostics;
    json rungs = json::array();
    for (std::size_t r = 0; r < branch.ladder.size(); ++r) {
        const SolutionPair& s = branch.ladder[r];
        json ssm = json::object();
        for (int i = 0; i < 2; ++i) {
            json per = json::object();
            for (int m = 0; m < 3; ++m) per[format_double(dg.mu[m])] = num(dg.small_set_measure[r][i][m]);
            ssm["u" + std::to_string(i + 1)] = per;
        }
        rungs.push_back({{"rung", branch.ladder_ns[r]},
                         {"eps", num(s.eps)},
                         {"residuals", pair_json(s.residual)},
                         {"picard_sweeps", s.picard_sweeps},
                         {"newton_iters", s.newton_iters},
                         {"cauchy_gap", r < dg.cauchy_gaps.size() ? num(dg.cauchy_gaps[r]) : json(nullptr)},
                         {"small_set_measures", ssm},
                         {"min_abs_interior", pair_json(dg.min_abs_interior[r])},
                         {"classification", class_json(classify_solution(setup.mesh, s, barriers, setup.d,
                                                                         sign_tol_rel))}});
    }
    return {{"label", branch.label},
            {"seed_mode", branch.seed_mode},
            {"rungs", rungs},
            {"cauchy_gaps_decreasing", dg.gaps_decreasing()},
            {"limit",
             {{"guarded_residual", num(branch.limit_residual)},
              {"residuals", pair_json(branch.limit.residual)},
              {"guard_fraction", num(branch.limit.guard_fraction)},
              {"inside_box", verdict.inside_box},
              {"classification", class_json(verdict.limit_class)}}},
            {"failed", branch.failed},
            {"failure", branch.failure},
            {"expected", verdict.expected},
            {"pass", verdict.pass},
            {"reason", verdict.reason}};
}

void write_branch_artifacts(const std::filesystem::path& dir, const RunSetup& setup, const BarrierSet& barriers,
                            const SolutionBranch& branch, const json& diagnostics) {
    const Mesh& mesh = setup.mesh;
    for (std::size_t r = 0; r < branch.ladder.size(); ++r) {
        const SolutionPair& s = branch.ladder[r];
        write_text_file(dir / ("rung_" + std::to_string(branch.ladder_ns[r]) + ".csv"),
                        fields_csv(mesh, {{"u1", &s.u1}, {"u2", &s.u2}}));
    }
    write_text_file(dir / "limit.csv", fields_csv(mesh, {{"u1", &branch.limit.u1}, {"u2", &branch.limit.u2}}));
    write_json(dir / "diagnostics.json", diagnostics);
    if (mesh.dim == 1) {
        for (int i = 0; i < 2; ++i) {
            const std::string c = std::to_string(i + 1);
            ScalarField nlo = barriers.u_lo[i], nhi = barriers.u_hi[i];
            for (double& v : nlo) v = -v;
            for (double& v : nhi) v = -v;
            const ScalarField& u = i == 0 ? branch.limit.u1 : branch.limit.u2;
            const std::vector<PlotSeries> series{{"u" + c, u, "#1f4e9c", false},
                                                 {"+lower barrier", barriers.u_lo[i], "#2a9d3f", true},
                                                 {"-lower barrier", nlo, "#2a9d3f", true},
                                                 {"+upper barrier", barriers.u_hi[i], "#c0392b", true},
                                                 {"-upper barrier", nhi, "#c0392b", true}};
            write_text_file(dir / ("u" + c + ".svg"), svg_line_plot(mesh, branch.label + " branch, u" + c, series));
        }
    } else {
        for (int i = 0; i < 2; ++i) {
            const std::string c = std::to_string(i + 1);
            const ScalarField& u = i == 0 ? branch.limit.u1 : branch.limit.u2;
            write_text_file(dir / ("u" + c + ".svg"), svg_heatmap(mesh, branch.label + " branch, u" + c, u));
            write_text_file(dir / ("u" + c + "_grid.csv"), grid_csv(mesh, u));
        }
    }
}

int cmd_eigen(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
    const Mesh mesh = build_mesh(cfg);
    const SolverOpts so = solver_opts(cfg);
    for (int i = 0; i < 2; ++i) {
        const std::string c = std::to_string(i + 1);
        Eigenpair ep;
        try {
            ep = principal_eigenpair(mesh, cfg.p[i], so);
        } catch (const ConvergenceFailure& e) {
            json body = error_json("eigen", ExitCode::eigen, "eigen-failure", e.what());
            body["p"] = num(cfg.p[i]);
            body["residual"] = num(e.residual());
            body["lambda"] = num(e.lambda());
            write_json(out / "error.json", body);
            log << dump_json(body);
            return static_cast<int>(ExitCode::eigen);
        }
        write_text_file(out / ("eigen_" + c + ".csv"), fields_csv(mesh, {{"phi", &ep.phi}}));
        json j = eigen_json(ep);
        j["component"] = i + 1;
        write_json(out / ("eigen_" + c + ".json"), j);
        log << "eigen " << c << ": p = " << format_double(ep.p) << ", lambda = " << format_double(ep.lambda)
            << ", c0 = " << format_double(ep.c0) << "\n";
    }
    return static_cast<int>(ExitCode::ok);
}

namespace {

/// Shared front half of solve/verify: setup and calibration, or an exit code with error.json.
struct Prepared {
    RunSetup setup;
    Calibration cal;
};

int prepare_and_calibrate(const RunConfig& cfg, const std::string& command, const std::filesystem::path& out,
                          std::ostream& log, Prepared& p) {
    try {
        p.setup = prepare_run(cfg);
    } catch (const ConvergenceFailure& e) {
        json body = error_json(command, ExitCode::eigen, "eigen-failure", e.what());
        write_json(out / "error.json", body);
        log << dump_json(body);
        return static_cast<int>(ExitCode::eigen);
    }
    try {
        p.cal = calibrate_C(p.setup.model, p.setup.mesh, p.setup.d, p.setup.layer, p.setup.eig, solver_opts(cfg));
    } catch (const CalibrationFailure& e) {
        json body = error_json(command, ExitCode::calibration, "calibration-failure", e.what());
        body["worst_check"] = e.worst_check();
        body["worst_margin"] = num(e.worst_margin());
        write_json(out / "error.json", body);
        log << dump_json(body);
        return static_cast<int>(ExitCode::calibration);
    }
    return static_cast<int>(ExitCode::ok);
}

json barrier_fields_json(const Prepared& p) {
    return {{"C", num(p.cal.C)},
            {"c", num(p.cal.barriers.c)},
            {"delta", num(p.cal.layer.delta)},
            {"delta_halvings", p.cal.delta_halvings}};
}

void write_barriers_csv(const std::filesystem::path& out, const Prepared& p) {
    const BarrierSet& b = p.cal.barriers;
    write_text_file(out / "barriers.csv", fields_csv(p.setup.mesh, {{"y1", &b.y[0]},
                                                                    {"y2", &b.y[1]},
                                                                    {"z1", &b.z[0]},
                                                                    {"z2", &b.z[1]},
                                                                    {"u_lo1", &b.u_lo[0]},
                                                                    {"u_lo2", &b.u_lo[1]},
                                                                    {"u_hi1", &b.u_hi[0]},
                                                                    {"u_hi2", &b.u_hi[1]}}));
}

}  // namespace

int cmd_solve(const RunConfig& cfg, BoxKind box, const std::filesystem::path& out, std::ostream& log) {
    if (box == BoxKind::nodal) {
        try {
            require_nodal_exponents(build_model(cfg));
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
    Prepared p;
    if (const int rc = prepare_and_calibrate(cfg, "solve", out, log, p); rc != 0) return rc;
    write_barriers_csv(out, p);
    const SystemOpts so = system_opts(cfg);
    log << "calibrated C = " << format_double(p.cal.C) << "; continuing the " << to_string(box) << " branch\n";
    const SolutionBranch br =
        continuation(p.setup.mesh, p.setup.model, p.cal.barriers, p.setup.eig, box, cfg.ladder, so);
    const BranchVerdict v = judge_branch(p.setup, p.cal.barriers, box, br, so.sign_tol_rel);
    json diag = branch_json(p.setup, p.cal.barriers, br, v, so.sign_tol_rel);
    diag["calibration"] = barrier_fields_json(p);
    write_branch_artifacts(out / to_string(box), p.setup, p.cal.barriers, br, diag);
    log << to_string(box) << " branch: limit classified " << to_string(v.limit_class.kind) << ", guarded residual "
        << format_double(br.limit_residual) << (v.pass ? "" : "; FAILED: " + v.reason) << "\n";
    return static_cast<int>(v.pass ? ExitCode::ok : ExitCode::convergence);
}

int cmd_verify(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
    try {
        require_nodal_exponents(build_model(cfg));
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    json report;
    report["config"] = to_text(cfg);
    std::map<std::string, bool> members;

    Prepared p;
    const int rc = prepare_and_calibrate(cfg, "verify", out, log, p);
    if (rc == static_cast<int>(ExitCode::eigen)) return rc;
    const RunSetup& s = p.setup;
    report["mesh"] = {{"dim", s.mesh.dim},
                      {"nodes", s.mesh.n_nodes()},
                      {"elements", s.mesh.n_elements()},
                      {"h", num(s.mesh.h)}};
    report["eigen"] = json::array({eigen_json(s.eig[0]), eigen_json(s.eig[1])});

    // Hypotheses: the decoupled profile does not require the sign-coupling check.
    const HypothesisReport hyp = check_hypotheses(s.model, cfg.seed);
    const bool decoupled = s.model.coupling == Coupling::decoupled;
    json hchecks = json::array();
    bool hyp_ok = true;
    for (const auto& c : hyp.checks) {
        const bool required = !(decoupled && c.name == "H5");
        json j = {{"name", c.name}, {"pass", c.pass}, {"required", required}, {"detail", c.detail}};
        if (c.witness)
            j["witness"] = {{"component", c.witness->component + 1},
                            {"x", json::array({num(c.witness->x.x), num(c.witness->x.y)})},
                            {"s", num(c.witness->s)},
                            {"t", num(c.witness->t)},
                            {"value", num(c.witness->value)}};
        hchecks.push_back(j);
        if (required) hyp_ok = hyp_ok && c.pass;
    }
    report["hypotheses"] = {{"profile", decoupled ? "decoupled" : "sign_coupled"}, {"checks", hchecks}, {"pass", hyp_ok}};
    members["hypotheses"] = hyp_ok;

    if (rc == static_cast<int>(ExitCode::calibration)) {
        report["calibration"] = {{"pass", false}};
        members["calibration"] = false;
        report["rollup"] = {{"members", members}, {"pass", false}};
        write_json(out / "report.json", report);
        return rc;
    }
    write_barriers_csv(out, p);
    report["calibration"] = barrier_fields_json(p);
    report["calibration"]["pass"] = true;
    members["calibration"] = true;

    BarrierReport barriers = verify_sub_super(s.model, p.cal.barriers, s.mesh, s.d, p.cal.layer);
    for (auto& c : distance_chain_checks(p.cal.barriers, s.mesh, s.d)) barriers.checks.push_back(c);
    for (auto& c : eigen_dominance_checks(p.cal.barriers, s.eig)) barriers.checks.push_back(c);
    json bchecks = json::array();
    for (const auto& c : barriers.checks) bchecks.push_back(check_json(c));
    report["barriers"] = {{"checks", bchecks}, {"pass", barriers.all_pass()}};
    members["barriers"] = barriers.all_pass();

    const SystemOpts so = system_opts(cfg);
    const std::array<BoxKind, 3> boxes{BoxKind::positive, BoxKind::negative, BoxKind::nodal};
    std::array<SolutionBranch, 3> branches;
    log << "calibrated C = " << format_double(p.cal.C) << "; running three branches on up to " << thread_cap()
        << " threads\n";
    parallel_for(3, [&](std::size_t k) {
        branches[k] = continuation(s.mesh, s.model, p.cal.barriers, s.eig, boxes[k], cfg.ladder, so);
    });
    json bj = json::object();
    for (std::size_t k = 0; k < 3; ++k) {
        const BranchVerdict v = judge_branch(s, p.cal.barriers, boxes[k], branches[k], so.sign_tol_rel);
        json j = branch_json(s, p.cal.barriers, branches[k], v, so.sign_tol_rel);
        write_branch_artifacts(out / to_string(boxes[k]), s, p.cal.barriers, branches[k], j);
        bj[to_string(boxes[k])] = j;
        members["branch_" + to_string(boxes[k])] = v.pass;
        log << to_string(boxes[k]) << " branch: " << (v.pass ? "pass" : "FAIL: " + v.reason) << "\n";
    }
    report["branches"] = bj;

    // Mirror symmetry of the constant-sign branches; required only for odd-symmetric models.
    double mirror = 0.0;
    for (std::size_t k = 0; k < s.mesh.n_nodes(); ++k) {
        mirror = std::max(mirror, std::fabs(branches[0].limit.u1[k] + branches[1].limit.u1[k]));
        mirror = std::max(mirror, std::fabs(branches[0].limit.u2[k] + branches[1].limit.u2[k]));
    }
    report["mirror"] = {{"defect", num(mirror)}, {"required", s.model.odd_symmetric}, {"pass", mirror <= 1e-8}};
    if (s.model.odd_symmetric) members["mirror"] = mirror <= 1e-8;

    // Opposite constant signs on the eigenfunction pair (phi1, -phi2).
    ScalarField neg = s.eig[1].phi;
    for (double& v : neg) v = -v;
    const OppositeSignCheck oc = opposite_sign_detector(s.mesh, s.model, {s.eig[0].phi, neg});
    const bool coupled = s.model.coupling == Coupling::sign_coupled;
    report["opposite_sign_detector"] = {{"applicable", oc.applicable},
                                        {"component", oc.component + 1},
                                        {"gradient_integral", num(oc.gradient_integral)},
                                        {"reaction_integral", num(oc.reaction_integral)},
                                        {"fires", oc.fires},
                                        {"required", coupled}};
    if (coupled) members["opposite_sign_detector"] = oc.fires;

    bool pass = true;
    for (const auto& [name, ok] : members) pass = pass && ok;
    report["rollup"] = {{"members", members}, {"pass", pass}};
    write_json(out / "report.json", report);
    log << "rollup: " << (pass ? "pass" : "FAIL") << "\n";
    return static_cast<int>(pass ? ExitCode::ok : ExitCode::convergence);
}

}  // namespace lab

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "lab/commands.hpp"
#include "lab/config.hpp"
#include "lab/errors.hpp"

namespace fs = std::filesystem;
using namespace lab;

namespace {

/// Per-process scratch directory, removed at exit.
struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("lab_cli_tests_" + std::to_string(::getpid()));
    Scratch() {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

fs::path scratch() {
    static const Scratch s;
    return s.dir;
}

fs::path fixture(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / (name + ".cfg");
    std::ofstream(p) << text;
    return p;
}

/// Runs the lab executable and returns its exit status; stdout and stderr go to a log file.
int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" + std::string(LAB_BINARY) + "\" " + args + " >>\"" +
                            (scratch() / "cli.log").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const std::string example_cfg = "domain = interval\nn = 256\nfamily = example_coupled\nladder = 4, 8, 16, 32\n";

}  // namespace

TEST_SUITE("cli") {
TEST_CASE("config parsing") {
    const RunConfig c = parse_config("# comment\ndomain = rectangle\nnx = 8 # trailing\nny = 6\np1 = 3\n"
                                     "ladder = 2, 4,8\nalpha_hat2 = 0.25\nseed = 7\n");
    CHECK(c.domain == DomainKind::rectangle);
    CHECK(c.nx == 8);
    CHECK(c.ny == 6);
    CHECK(c.p[0] == 3.0);
    CHECK(c.ladder == std::vector<int>{2, 4, 8});
    REQUIRE(c.alpha_hat[1].has_value());
    CHECK(*c.alpha_hat[1] == 0.25);
    CHECK(c.seed == 7u);
    const RunConfig back = parse_config(to_text(c));
    CHECK(to_text(back) == to_text(c));

    CHECK_THROWS_AS(parse_config("colour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n = 8\nn = 16\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n = 8x\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n 8\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("p1 = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("domain = sphere\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("ladder = 8, 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("alpha1 = -1.5\n"), ConfigError);
    CHECK_THROWS_AS(load_config(scratch() / "does_not_exist.cfg"), ConfigError);
}

TEST_CASE("shipped configs load") {
    for (const char* name : {"example_1d", "decoupled_1d", "example_2d", "odd_1d"}) {
        CAPTURE(name);
        const RunConfig c = load_config(fs::path(LAB_SOURCE_DIR) / "configs" / (std::string(name) + ".cfg"));
        CHECK_NOTHROW(build_model(c));
        CHECK(build_mesh(c).n_nodes() > 0);
    }
}

TEST_CASE("eigen command reports the interval eigenvalues") {
    const auto cfg = fixture("eigen", "domain = interval\nn = 512\np1 = 2\np2 = 3\nalpha2 = 0.5\nbeta1 = 0.5\n");
    const auto out = scratch() / "eigen_out";
    REQUIRE(run("eigen --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 0);
    const auto j1 = read_json(out / "eigen_1.json");
    const auto j2 = read_json(out / "eigen_2.json");
    CHECK(j1.at("lambda").get<double>() == doctest::Approx(9.8696).epsilon(1e-3));
    CHECK(j2.at("lambda").get<double>() == doctest::Approx(28.29).epsilon(1e-2));
    CHECK(fs::exists(out / "eigen_1.csv"));
}

TEST_CASE("exit code 1: invalid or missing configuration") {
    const auto bad_p = fixture("bad_p", "p1 = 0.5\n");
    CHECK(run("eigen --config \"" + bad_p.string() + "\" --out \"" + (scratch() / "x1").string() + "\"") == 1);
    CHECK(run("verify --config \"" + (scratch() / "missing.cfg").string() + "\"") == 1);
    const auto hat = fixture("neg_hat", example_cfg + "beta_hat1 = -0.1\n");
    CHECK(run("solve --branch nodal --config \"" + hat.string() + "\" --out \"" + (scratch() / "x2").string() +
              "\"") == 1);
    const auto ok = fixture("ok", example_cfg);
    CHECK(run("solve --branch sideways --config \"" + ok.string() + "\"") == 1);
    CHECK(run("eigen --config \"" + ok.string() + "\" --out \"" + (scratch() / "x3").string() + "\"",
              "LAB_THREADS=zero") == 1);
    CHECK(run("") == 1);
}

TEST_CASE("exit code 2: eigen solver failure") {
    const auto cfg = fixture("eig_fail", "tol_residual = 1e-300\n");
    const auto out = scratch() / "eig_fail_out";
    CHECK(run("eigen --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 2);
    const auto err = read_json(out / "error.json");
    CHECK(err.at("exit_code").get<int>() == 2);
    CHECK(run("verify --config \"" + cfg.string() + "\" --out \"" + (scratch() / "eig_fail_v").string() + "\"") == 2);
}

TEST_CASE("exit code 3: calibration failure") {
    const auto cfg = fixture("cal_fail", "family = custom\namplitude = 1e9\n");
    const auto out = scratch() / "cal_fail_out";
    CHECK(run("solve --branch positive --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 3);
    const auto err = read_json(out / "error.json");
    CHECK(err.at("exit_code").get<int>() == 3);
    CHECK(err.at("worst_margin").get<double>() < 0.0);
}

TEST_CASE("positive and negative branches solve") {
    const auto cfg = fixture("branches", example_cfg);
    for (const char* b : {"positive", "negative"}) {
        CAPTURE(b);
        const auto out = scratch() / (std::string("branch_") + b);
        CHECK(run(std::string("solve --branch ") + b + " --config \"" + cfg.string() + "\" --out \"" + out.string() +
                  "\"") == 0);
        const auto diag = read_json(out / b / "diagnostics.json");
        CHECK(diag.at("limit").at("classification").at("kind").get<std::string>() == b);
        CHECK(diag.at("pass").get<bool>());
        CHECK(fs::exists(out / b / "rung_32.csv"));
        CHECK(fs::exists(out / b / "u1.svg"));
        CHECK(fs::exists(out / "barriers.csv"));
    }
}

TEST_CASE("exit code 4: nodal branch is reported as a convergence failure") {
    const auto cfg = fixture("nodal", example_cfg);
    const auto out = scratch() / "nodal";
    CHECK(run("solve --branch nodal --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"") == 4);
    CHECK(fs::exists(out / "nodal" / "diagnostics.json"));
}

TEST_CASE("verify is deterministic") {
    const auto cfg = fixture("det", example_cfg);
    const auto a = scratch() / "det_a", b = scratch() / "det_b";
    const int ca = run("verify --config \"" + cfg.string() + "\" --out \"" + a.string() + "\"");
    const int cb = run("verify --config \"" + cfg.string() + "\" --out \"" + b.string() + "\"", "LAB_THREADS=1");
    CHECK(ca == cb);
    const std::string ra = slurp(a / "report.json"), rb = slurp(b / "report.json");
    CHECK_FALSE(ra.empty());
    CHECK(ra == rb);
    for (const char* f : {"positive/rung_32.csv", "negative/limit.csv", "nodal/diagnostics.json"})
        CHECK(slurp(a / f) == slurp(b / f));
    const auto rep = read_json(a / "report.json");
    CHECK(rep.contains("rollup"));
    CHECK(rep.at("hypotheses").is_object());
}
}

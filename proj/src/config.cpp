#include "lab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lab/errors.hpp"
#include "lab/output.hpp"

namespace lab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("key '" + key + "': expected a finite number, got '" + v + "'");
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

int parse_positive_int(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x <= 0 || x > 1'000'000) throw ConfigError("key '" + key + "': expected a positive integer, got '" + v + "'");
    return static_cast<int>(x);
}

std::vector<int> parse_ladder(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_positive_int("ladder", trim(item)));
    if (out.empty()) throw ConfigError("key 'ladder': empty list");
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k] < 2) throw ConfigError("key 'ladder': entries must be at least 2");
        if (k > 0 && out[k] <= out[k - 1]) throw ConfigError("key 'ladder': entries must increase");
    }
    return out;
}

void validate(const RunConfig& c) {
    if (c.domain == DomainKind::interval && c.n < 4) throw ConfigError("n must be at least 4");
    if (c.domain == DomainKind::rectangle && (c.nx < 4 || c.ny < 4)) throw ConfigError("nx, ny must be at least 4");
    for (double pi : c.p)
        if (!(pi > 1.0)) throw ConfigError("p1, p2 must exceed 1, got " + format_double(pi));
    if (!(c.delta > 0.0 && c.delta < 0.5)) throw ConfigError("delta must lie in (0, 0.5)");
    for (const auto& t : {c.tol_residual, c.accept_tol, c.target_tol})
        if (t && !(*t > 0.0)) throw ConfigError("tolerances must be positive");
    if (!(c.singular_guard_factor >= 0.0)) throw ConfigError("singular_guard_factor must be nonnegative");
    if (!(c.limit_eps > 0.0 && c.limit_eps < 1.0)) throw ConfigError("limit_eps must lie in (0, 1)");
    if (!(c.limit_accept_tol > 0.0)) throw ConfigError("limit_accept_tol must be positive");
    if (!(c.amplitude > 0.0)) throw ConfigError("amplitude must be positive");
    if (c.out.empty()) throw ConfigError("out must not be empty");
    build_model(c);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, std::string> seen;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (!seen.emplace(key, val).second) throw ConfigError("duplicate key '" + key + "'");

        auto pair_index = [&](const std::string& stem) -> int {
            if (key == stem + "1") return 0;
            if (key == stem + "2") return 1;
            return -1;
        };
        int i = -1;
        if (key == "domain") {
            if (val == "interval")
                c.domain = DomainKind::interval;
            else if (val == "rectangle")
                c.domain = DomainKind::rectangle;
            else
                throw ConfigError("key 'domain': expected interval or rectangle, got '" + val + "'");
        } else if (key == "n") {
            c.n = parse_positive_int(key, val);
        } else if (key == "nx") {
            c.nx = parse_positive_int(key, val);
        } else if (key == "ny") {
            c.ny = parse_positive_int(key, val);
        } else if (key == "family") {
            if (val != "example_coupled" && val != "example_decoupled" && val != "custom")
                throw ConfigError("key 'family': expected example_coupled, example_decoupled or custom");
            c.family = val;
        } else if ((i = pair_index("p")) >= 0) {
            c.p[i] = parse_double(key, val);
        } else if ((i = pair_index("alpha_hat")) >= 0) {
            c.alpha_hat[i] = parse_double(key, val);
        } else if ((i = pair_index("beta_hat")) >= 0) {
            c.beta_hat[i] = parse_double(key, val);
        } else if ((i = pair_index("alpha")) >= 0) {
            c.alpha[i] = parse_double(key, val);
        } else if ((i = pair_index("beta")) >= 0) {
            c.beta[i] = parse_double(key, val);
        } else if (key == "amplitude") {
            c.amplitude = parse_double(key, val);
        } else if (key == "delta") {
            c.delta = parse_double(key, val);
        } else if (key == "ladder") {
            c.ladder = parse_ladder(val);
        } else if (key == "tol_residual") {
            c.tol_residual = parse_double(key, val);
        } else if (key == "accept_tol") {
            c.accept_tol = parse_double(key, val);
        } else if (key == "target_tol") {
            c.target_tol = parse_double(key, val);
        } else if (key == "singular_guard_factor") {
            c.singular_guard_factor = parse_double(key, val);
        } else if (key == "limit_eps") {
            c.limit_eps = parse_double(key, val);
        } else if (key == "limit_accept_tol") {
            c.limit_accept_tol = parse_double(key, val);
        } else if (key == "seed") {
            const long long s = parse_int(key, val);
            if (s < 0) throw ConfigError("key 'seed': must be nonnegative");
            c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "out") {
            c.out = val;
        } else {
            throw ConfigError("unknown key '" + key + "' on line " + std::to_string(lineno));
        }
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Mesh build_mesh(const RunConfig& cfg) {
    return cfg.domain == DomainKind::interval ? build_interval_mesh(cfg.n) : build_rectangle_mesh(cfg.nx, cfg.ny);
}

ModelParams build_model(const RunConfig& cfg) {
    try {
        ModelParams m = cfg.family == "example_coupled"     ? example_family(cfg.alpha, cfg.beta, cfg.p)
                        : cfg.family == "example_decoupled" ? example_decoupled_family(cfg.alpha, cfg.beta, cfg.p)
                                                            : odd_coupled_family(cfg.alpha, cfg.beta, cfg.p, cfg.amplitude);
        for (int i = 0; i < 2; ++i) {
            if (cfg.alpha_hat[i]) m.alpha_hat[i] = *cfg.alpha_hat[i];
            if (cfg.beta_hat[i]) m.beta_hat[i] = *cfg.beta_hat[i];
        }
        require_constant_sign_hypotheses(m);
        return m;
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
}

SolverOpts solver_opts(const RunConfig& cfg) {
    SolverOpts o = default_solver_opts(cfg.dim());
    if (cfg.tol_residual) o.tol_residual = *cfg.tol_residual;
    return o;
}

SystemOpts system_opts(const RunConfig& cfg) {
    SystemOpts o = default_system_opts(cfg.dim());
    o.scalar = solver_opts(cfg);
    if (cfg.accept_tol) o.accept_tol = *cfg.accept_tol;
    if (cfg.target_tol) o.target_tol = *cfg.target_tol;
    o.singular_guard_factor = cfg.singular_guard_factor;
    o.limit_eps = cfg.limit_eps;
    o.limit_accept_tol = cfg.limit_accept_tol;
    return o;
}

std::string to_text(const RunConfig& c) {
    std::ostringstream os;
    os << "domain = " << (c.domain == DomainKind::interval ? "interval" : "rectangle") << "\n";
    if (c.domain == DomainKind::interval)
        os << "n = " << c.n << "\n";
    else
        os << "nx = " << c.nx << "\nny = " << c.ny << "\n";
    os << "family = " << c.family << "\n";
    for (int i = 0; i < 2; ++i) {
        const std::string k = std::to_string(i + 1);
        os << "p" << k << " = " << format_double(c.p[i]) << "\n";
        os << "alpha" << k << " = " << format_double(c.alpha[i]) << "\n";
        os << "beta" << k << " = " << format_double(c.beta[i]) << "\n";
        if (c.alpha_hat[i]) os << "alpha_hat" << k << " = " << format_double(*c.alpha_hat[i]) << "\n";
        if (c.beta_hat[i]) os << "beta_hat" << k << " = " << format_double(*c.beta_hat[i]) << "\n";
    }
    if (c.family == "custom") os << "amplitude = " << format_double(c.amplitude) << "\n";
    os << "delta = " << format_double(c.delta) << "\n";
    os << "ladder = ";
    for (std::size_t k = 0; k < c.ladder.size(); ++k) os << (k ? ", " : "") << c.ladder[k];
    os << "\n";
    if (c.tol_residual) os << "tol_residual = " << format_double(*c.tol_residual) << "\n";
    if (c.accept_tol) os << "accept_tol = " << format_double(*c.accept_tol) << "\n";
    if (c.target_tol) os << "target_tol = " << format_double(*c.target_tol) << "\n";
    os << "singular_guard_factor = " << format_double(c.singular_guard_factor) << "\n";
    os << "limit_eps = " << format_double(c.limit_eps) << "\n";
    os << "limit_accept_tol = " << format_double(c.limit_accept_tol) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "out = " << c.out << "\n";
    return os.str();
}

}  // namespace lab

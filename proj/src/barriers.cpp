#include "lab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lab/errors.hpp"
#include "lab/output.hpp"

namespace lab {

namespace {

void require_exponent(double e, const char* name) {
    if (!(e > -1.0 && e <= 1.0) || e == 0.0)
        throw InvalidArgument(std::string("exponent ") + name + " must lie in (-1, 1] and be nonzero, got " +
                              format_double(e));
}

double dpow(double d, double e) { return std::pow(d, e); }

}  // namespace

ScalarField solve_y(const Mesh& mesh, const DistanceField& d, double p, double alpha, double beta,
                    const SolverOpts& opts) {
    require_exponent(alpha, "alpha");
    require_exponent(beta, "beta");
    if (d.values.size() != mesh.n_nodes()) throw InvalidArgument("distance field does not match mesh");
    std::vector<double> g(mesh.n_elements());
    for (std::size_t e = 0; e < g.size(); ++e) {
        const double dc = boundary_distance(mesh, mesh.centroid(e));
        g[e] = 1.0 + dpow(dc, alpha) + dpow(dc, beta);
    }
    return solve_dirichlet_load(mesh, p, element_load(mesh, g), opts);
}

ScalarField solve_z(const Mesh& mesh, const DistanceField& d, const BoundaryLayer& layer, double p,
                    double alpha_hat, double beta_hat, const SolverOpts& opts) {
    if (alpha_hat == 0.0 || beta_hat == 0.0 || !(alpha_hat <= 1.0 && beta_hat <= 1.0))
        throw InvalidArgument("hat exponents must be nonzero and at most 1");
    if (!(alpha_hat + beta_hat > -std::min(1.0, p - 1.0)))
        throw InvalidArgument("need alpha_hat + beta_hat > -min(1, p-1)");
    if (d.values.size() != mesh.n_nodes()) throw InvalidArgument("distance field does not match mesh");
    std::vector<double> g(mesh.n_elements());
    for (std::size_t e = 0; e < g.size(); ++e) {
        const double dc = boundary_distance(mesh, mesh.centroid(e));
        g[e] = dc < layer.delta ? -1.0 : dpow(dc, alpha_hat) + dpow(dc, beta_hat);
    }
    return solve_dirichlet_load(mesh, p, element_load(mesh, g), opts);
}

BarrierSet build_barriers(const std::array<ScalarField, 2>& y, const std::array<ScalarField, 2>& z, double C,
                          const Mesh& mesh, const DistanceField& d, double delta) {
    if (!(C > 1.0)) throw InvalidArgument("barrier scaling C must exceed 1, got " + format_double(C));
    BarrierSet b;
    b.y = y;
    b.z = z;
    b.C = C;
    b.delta = delta;
    b.c = 1.0;
    for (int i = 0; i < 2; ++i) {
        if (y[i].size() != mesh.n_nodes() || z[i].size() != mesh.n_nodes())
            throw InvalidArgument("barrier fields do not match the mesh");
        b.u_lo[i].resize(mesh.n_nodes());
        b.u_hi[i].resize(mesh.n_nodes());
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
            b.u_lo[i][k] = z[i][k] / C;
            b.u_hi[i][k] = C * y[i][k];
            if (mesh.boundary[k]) continue;
            if (!(z[i][k] > 0.0 && y[i][k] > 0.0))
                throw InvalidArgument("barrier fields must be positive at interior nodes");
            b.c = std::max({b.c, d.values[k] / z[i][k], y[i][k] / d.values[k]});
        }
    }
    return b;
}

bool BarrierReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const BarrierCheck& c) { return c.pass; });
}

const BarrierCheck& BarrierReport::worst() const {
    if (checks.empty()) throw InvalidArgument("empty barrier report");
    return *std::min_element(checks.begin(), checks.end(),
                             [](const BarrierCheck& a, const BarrierCheck& b) { return a.worst_margin < b.worst_margin; });
}

const BarrierCheck& BarrierReport::get(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InvalidArgument("no barrier check named " + name);
}

namespace {

struct Tracker {
    BarrierCheck c;
    explicit Tracker(std::string name, int comp) {
        c.name = std::move(name);
        c.component = comp;
        c.worst_margin = std::numeric_limits<double>::infinity();
    }
    void add(double margin, std::size_t node) {
        if (!(margin >= c.worst_margin)) {  // NaN margins count as worst
            c.worst_margin = std::isnan(margin) ? -std::numeric_limits<double>::infinity() : margin;
            c.worst_node = node;
        }
    }
    BarrierCheck done(bool strict) {
        c.pass = strict ? c.worst_margin > 0.0 : c.worst_margin >= 0.0;
        return c;
    }
};

}  // namespace

BarrierReport verify_sub_super(const ModelParams& model, const BarrierSet& barriers, const Mesh& mesh,
                               const DistanceField& d, const BoundaryLayer& layer) {
    BarrierReport rep;
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const std::string tag = std::to_string(i + 1);
        const double p = model.p[i];
        const double Cup = std::pow(barriers.C, p - 1.0), Cdn = 1.0 / Cup;
        Tracker sup_pos("supersolution_positive_" + tag, i), sub_pos("subsolution_positive_" + tag, i);
        Tracker sub_neg("subsolution_negative_" + tag, i), sup_neg("supersolution_negative_" + tag, i);
        // f_i with its own argument first in the call order of component i
        auto f = [&](const Point& x, double own, double other) {
            return i == 0 ? model.eval(0, x, own, other) : model.eval(1, x, other, own);
        };
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
            if (mesh.boundary[k]) continue;
            const Point& x = mesh.nodes[k];
            const double dk = d.values[k];
            const double y_src = 1.0 + std::pow(dk, model.alpha[i]) + std::pow(dk, model.beta[i]);
            const double z_src =
                layer.mask[k] ? -1.0 : std::pow(dk, model.alpha_hat[i]) + std::pow(dk, model.beta_hat[i]);
            const double lo_i = barriers.u_lo[i][k], hi_i = barriers.u_hi[i][k];
            const double lo_j = barriers.u_lo[j][k], hi_j = barriers.u_hi[j][k];

            sup_pos.add(Cup * y_src - std::max(f(x, hi_i, lo_j), f(x, hi_i, hi_j)), k);
            sub_pos.add(std::min(f(x, lo_i, lo_j), f(x, lo_i, hi_j)) - Cdn * z_src, k);
            sub_neg.add(std::min(f(x, -hi_i, -lo_j), f(x, -hi_i, -hi_j)) + Cup * y_src, k);
            sup_neg.add(-Cdn * z_src - std::max(f(x, -lo_i, -lo_j), f(x, -lo_i, -hi_j)), k);
        }
        rep.checks.push_back(sup_pos.done(true));
        rep.checks.push_back(sub_pos.done(true));
        rep.checks.push_back(sub_neg.done(true));
        rep.checks.push_back(sup_neg.done(true));
    }
    return rep;
}

std::vector<BarrierCheck> distance_chain_checks(const BarrierSet& barriers, const Mesh& mesh,
                                                const DistanceField& d) {
    std::vector<BarrierCheck> out;
    for (int i = 0; i < 2; ++i) {
        Tracker t("distance_chain_" + std::to_string(i + 1), i);
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
            if (mesh.boundary[k]) continue;
            const double dk = d.values[k], z = barriers.z[i][k], y = barriers.y[i][k];
            t.add(std::min({z - dk / barriers.c, y - z, barriers.c * dk - y}), k);
        }
        out.push_back(t.done(false));
    }
    return out;
}

std::vector<BarrierCheck> eigen_dominance_checks(const BarrierSet& barriers, const std::array<Eigenpair, 2>& eig) {
    std::vector<BarrierCheck> out;
    for (int i = 0; i < 2; ++i) {
        Tracker t("eigen_dominates_subsolution_" + std::to_string(i + 1), i);
        for (std::size_t k = 0; k < barriers.u_lo[i].size(); ++k) t.add(eig[i].phi[k] - barriers.u_lo[i][k], k);
        out.push_back(t.done(false));
    }
    return out;
}

Calibration calibrate_C(const ModelParams& model, const Mesh& mesh, const DistanceField& d,
                        const BoundaryLayer& layer, const std::array<Eigenpair, 2>& eig, const SolverOpts& opts) {
    require_constant_sign_hypotheses(model);
    Calibration cal;
    cal.layer = layer;
    std::array<ScalarField, 2> y, z;
    for (int i = 0; i < 2; ++i) y[i] = solve_y(mesh, d, model.p[i], model.alpha[i], model.beta[i], opts);

    auto z_positive = [&]() {
        for (int i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < mesh.n_nodes(); ++k)
                if (!mesh.boundary[k] && !(z[i][k] > 0.0)) return false;
        return true;
    };
    for (;;) {
        for (int i = 0; i < 2; ++i)
            z[i] = solve_z(mesh, d, cal.layer, model.p[i], model.alpha_hat[i], model.beta_hat[i], opts);
        if (z_positive()) break;
        if (cal.delta_halvings == 10)
            throw CalibrationFailure("z stays nonpositive after halving the layer width 10 times", "z_positive",
                                     -1.0);
        ++cal.delta_halvings;
        cal.layer = boundary_layer(mesh, d, 0.5 * cal.layer.delta);
    }

    BarrierCheck worst;
    worst.worst_margin = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 20; ++k) {
        const double C = std::ldexp(1.0, k);
        BarrierSet b = build_barriers(y, z, C, mesh, d, cal.layer.delta);
        BarrierReport rep = verify_sub_super(model, b, mesh, d, cal.layer);
        for (auto& c : eigen_dominance_checks(b, eig)) rep.checks.push_back(c);
        if (rep.all_pass()) {
            cal.C = C;
            cal.barriers = std::move(b);
            cal.report = std::move(rep);
            return cal;
        }
        worst = rep.worst();
    }
    throw CalibrationFailure("no C in {2, 4, ..., 2^20} passes the barrier checks; worst: " + worst.name +
                                 " margin " + format_double(worst.worst_margin),
                             worst.name, worst.worst_margin);
}

}  // namespace lab

#include "lab/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lab/barriers.hpp"
#include "lab/errors.hpp"
#include "lab/output.hpp"

namespace lab {

double sgn(double s) { return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0); }

namespace {

double pw(double v, double e) { return std::pow(std::fabs(v), e); }

void require_p_pair(const std::array<double, 2>& p) {
    for (double pi : p)
        if (!(pi > 1.0)) throw InvalidArgument("exponent p must exceed 1, got " + format_double(pi));
}

void require_example_exponents(const std::array<double, 2>& a, const std::array<double, 2>& b,
                               const std::array<double, 2>& p) {
    require_p_pair(p);
    auto fail = [](const std::string& what) { throw InvalidArgument("example family: " + what); };
    if (!(-1.0 < a[0] && a[0] < 0.0)) fail("need -1 < alpha1 < 0");
    if (!(-1.0 < b[1] && b[1] < 0.0)) fail("need -1 < beta2 < 0");
    if (!(a[1] > 0.0 && a[1] < std::min(1.0, p[1] - 1.0))) fail("need 0 < alpha2 < min(1, p2-1)");
    if (!(b[0] > 0.0 && b[0] < std::min(1.0, p[0] - 1.0))) fail("need 0 < beta1 < min(1, p1-1)");
    for (int i = 0; i < 2; ++i)
        if (!(a[i] + b[i] > -std::min(1.0, p[i] - 1.0))) fail("need alpha_i + beta_i > -min(1, p_i-1)");
}

ModelParams power_family(std::string name, std::array<double, 2> alpha, std::array<double, 2> beta,
                         std::array<double, 2> p) {
    ModelParams m;
    m.family = std::move(name);
    m.p = p;
    m.alpha = alpha;
    m.beta = beta;
    m.alpha_hat = alpha;
    m.beta_hat = beta;
    return m;
}

}  // namespace

ModelParams example_family(std::array<double, 2> alpha, std::array<double, 2> beta, std::array<double, 2> p) {
    require_example_exponents(alpha, beta, p);
    ModelParams m = power_family("example_coupled", alpha, beta, p);
    m.M = {1.5, 1.5};
    m.m = {0.5, 0.5};
    m.coupling = Coupling::sign_coupled;
    const double a1 = alpha[0], b1 = beta[0], a2 = alpha[1], b2 = beta[1];
    m.f[0] = [a1, b1](const Point&, double s, double t) { return (0.5 + sgn(t)) * (pw(s, a1) + pw(t, b1)); };
    m.f[1] = [a2, b2](const Point&, double s, double t) { return (0.5 + sgn(s)) * (pw(s, a2) + pw(t, b2)); };
    return m;
}

ModelParams example_decoupled_family(std::array<double, 2> alpha, std::array<double, 2> beta,
                                     std::array<double, 2> p) {
    require_example_exponents(alpha, beta, p);
    ModelParams m = power_family("example_decoupled", alpha, beta, p);
    m.M = {1.5, 1.5};
    m.m = {0.5, 0.5};
    m.coupling = Coupling::decoupled;
    const double a1 = alpha[0], b1 = beta[0], a2 = alpha[1], b2 = beta[1];
    m.f[0] = [a1, b1](const Point&, double s, double t) { return (0.5 + sgn(s)) * (pw(s, a1) + pw(t, b1)); };
    m.f[1] = [a2, b2](const Point&, double s, double t) { return (0.5 + sgn(t)) * (pw(s, a2) + pw(t, b2)); };
    return m;
}

ModelParams odd_coupled_family(std::array<double, 2> alpha, std::array<double, 2> beta, std::array<double, 2> p,
                               double amplitude) {
    require_example_exponents(alpha, beta, p);
    if (!(amplitude > 0.0)) throw InvalidArgument("odd family amplitude must be positive");
    ModelParams m = power_family("custom", alpha, beta, p);
    m.M = {amplitude, amplitude};
    m.m = {amplitude, amplitude};
    m.coupling = Coupling::sign_coupled;
    m.odd_symmetric = true;
    const double a1 = alpha[0], b1 = beta[0], a2 = alpha[1], b2 = beta[1], k = amplitude;
    m.f[0] = [a1, b1, k](const Point&, double s, double t) { return k * sgn(t) * (pw(s, a1) + pw(t, b1)); };
    m.f[1] = [a2, b2, k](const Point&, double s, double t) { return k * sgn(s) * (pw(s, a2) + pw(t, b2)); };
    return m;
}

double gamma_eps(double eps, double s) { return eps * (0.5 + sgn(s)); }

double truncate_T(double eps, double u, double u_bar) {
    return gamma_eps(eps, u) + std::clamp(u, -u_bar, u_bar);
}

double chi_hat(double phi_val, double s) {
    if (s >= phi_val) return 1.5 * s;
    if (s <= -phi_val) return 0.5 * s;
    return (0.5 + sgn(s)) * phi_val;
}

double chi_mu(double mu, double s) {
    if (!(mu > 0.0)) throw InvalidArgument("chi_mu needs mu > 0");
    const double a = std::fabs(s);
    if (a <= mu) return 1.0;
    if (a >= 2.0 * mu) return 0.0;
    return 2.0 - sgn(s) * s / mu;
}

namespace {

double reaction_term(const ModelParams& model, int i, double eps, const Mesh& mesh, std::size_t node, double u1,
                     double u2, const BarrierSet& barriers) {
    const double T1 = truncate_T(eps, u1, barriers.u_hi[0][node]);
    const double T2 = truncate_T(eps, u2, barriers.u_hi[1][node]);
    if (T1 == 0.0 || T2 == 0.0)
        throw SingularEvaluation("reaction evaluated at a zero argument (eps = 0 with a vanishing component)");
    return model.eval(i, mesh.nodes[node], T1, T2);
}

void check_homotopy_args(int i, double t, double eps, const Mesh& mesh, std::size_t node) {
    if (i < 0 || i > 1) throw InvalidArgument("component index must be 0 or 1");
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("homotopy parameter must lie in [0,1]");
    if (!(eps >= 0.0 && eps < 1.0)) throw InvalidArgument("eps must lie in [0,1)");
    if (node >= mesh.n_nodes()) throw InvalidArgument("node index out of range");
}

}  // namespace

double eval_F_t(const ModelParams& model, int i, double t, double eps, const Mesh& mesh, std::size_t node,
                double u1, double u2, const BarrierSet& barriers, const std::array<Eigenpair, 2>& eig) {
    check_homotopy_args(i, t, eps, mesh, node);
    const double ui = i == 0 ? u1 : u2;
    const double ti0 = std::clamp(std::max(ui, 0.0), -barriers.u_hi[i][node], barriers.u_hi[i][node]);
    const double base = eig[i].lambda * std::pow(ti0, model.p[i] - 1.0) + 1.0;
    if (t == 0.0) return base;
    return t * reaction_term(model, i, eps, mesh, node, u1, u2, barriers) + (1.0 - t) * base;
}

double eval_Fhat_t(const ModelParams& model, int i, double t, double eps, const Mesh& mesh, std::size_t node,
                   double u1, double u2, const BarrierSet& barriers, const std::array<Eigenpair, 2>& eig) {
    check_homotopy_args(i, t, eps, mesh, node);
    const double ui = i == 0 ? u1 : u2;
    const double chi = chi_hat(eig[i].phi[node], ui);
    const double pi = model.p[i];
    const double base =
        chi == 0.0 ? 0.0 : std::pow(2.0 / 3.0, pi - 1.0) * eig[i].lambda * std::pow(std::fabs(chi), pi - 2.0) * chi;
    if (t == 0.0) return base;
    return t * reaction_term(model, i, eps, mesh, node, u1, u2, barriers) + (1.0 - t) * base;
}

const HypothesisCheck& HypothesisReport::get(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InvalidArgument("no hypothesis check named " + name);
}

bool HypothesisReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.pass; });
}

namespace {

/// Inequality lhs <= rhs with a relative rounding allowance.
bool leq(double lhs, double rhs) { return lhs <= rhs + 1e-12 * (std::fabs(lhs) + std::fabs(rhs)); }

std::vector<double> log_axis(int count, double lo, double hi) {
    std::vector<double> v(count);
    for (int k = 0; k < count; ++k) v[k] = lo * std::pow(hi / lo, double(k) / (count - 1));
    return v;
}

std::vector<double> signed_axis(const std::vector<double>& pos) {
    std::vector<double> v;
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) v.push_back(-*it);
    v.insert(v.end(), pos.begin(), pos.end());
    return v;
}

struct Sampler {
    std::mt19937_64 rng;
    std::uniform_real_distribution<double> uni{0.0, 1.0};
    Point next() {
        const double x = uni(rng);
        return {x, uni(rng)};
    }
};

HypothesisCheck range_check(std::string name, const std::vector<std::pair<bool, std::string>>& conds) {
    HypothesisCheck c;
    c.name = std::move(name);
    std::ostringstream os;
    for (const auto& [ok, what] : conds) {
        if (!ok) {
            c.pass = false;
            os << (os.tellp() > 0 ? "; " : "") << "violated: " << what;
        }
    }
    c.detail = c.pass ? "exponent ranges hold" : os.str();
    return c;
}

void record(HypothesisCheck& c, int i, const Point& x, double s, double t, double v, const std::string& why) {
    if (!c.pass) return;
    c.pass = false;
    c.witness = Witness{i, x, s, t, v};
    c.detail = why;
}

}  // namespace

HypothesisReport check_hypotheses(const ModelParams& model, std::uint64_t sampler_seed) {
    HypothesisReport rep;
    Sampler smp{std::mt19937_64(sampler_seed)};
    const auto& p = model.p;
    const auto &a = model.alpha, &b = model.beta, &ah = model.alpha_hat, &bh = model.beta_hat;
    auto mn = [&](int i) { return std::min(1.0, p[i] - 1.0); };
    const std::vector<double> pos = log_axis(100, 1e-6, 1e3);
    const std::vector<double> sgd = signed_axis(log_axis(50, 1e-6, 1e3));

    // H1: blow-up of f_i as its own argument tends to 0, with the sign of the other argument.
    {
        HypothesisCheck c;
        c.name = "H1";
        // decoupled systems carry the sign of the own argument instead of the other one
        const bool own_sign = model.coupling == Coupling::decoupled;
        c.detail = own_sign ? "|f_i| exceeds 1e3 with the sign of s_i as s_i -> 0"
                            : "|f_i| exceeds 1e3 with the sign of s_j as s_i -> 0";
        for (int i = 0; i < 2; ++i)
            for (double side : {1.0, -1.0})
                for (double other : {0.5, -0.5}) {
                    const Point x = smp.next();
                    double last = 0.0;
                    for (int k = 1; k <= 12; ++k) {
                        const double si = side * std::pow(10.0, -k);
                        last = i == 0 ? model.eval(0, x, si, other) : model.eval(1, x, other, si);
                    }
                    const double s = i == 0 ? side * 1e-12 : other, t = i == 0 ? other : side * 1e-12;
                    if (!((own_sign ? side : sgn(other)) * last > 1e3))
                        record(c, i, x, s, t, last, "no blow-up of the required sign at s_i = 1e-12");
                }
        rep.checks.push_back(c);
    }

    // H2: ranges exact, growth bounds sampled on the positive quadrant.
    {
        HypothesisCheck c = range_check(
            "H2", {{-1.0 < a[0] && a[0] < 0.0, "-1 < alpha1 < 0"},
                   {-1.0 < b[1] && b[1] < 0.0, "-1 < beta2 < 0"},
                   {b[0] != 0.0 && std::fabs(b[0]) < mn(0), "|beta1| < min(1, p1-1), beta1 != 0"},
                   {a[1] != 0.0 && std::fabs(a[1]) < mn(1), "|alpha2| < min(1, p2-1), alpha2 != 0"},
                   {model.M[0] > 0.0 && model.M[1] > 0.0, "M_i > 0"}});
        if (c.pass) {
            for (int i = 0; i < 2; ++i)
                for (double s : pos)
                    for (double t : pos) {
                        const Point x = smp.next();
                        const double bound = model.M[i] * (1.0 + std::pow(s, a[i]) + std::pow(t, b[i]));
                        const double fp = model.eval(i, x, s, t), fm = model.eval(i, x, -s, -t);
                        if (!leq(fp, bound)) record(c, i, x, s, t, fp, "upper growth bound violated");
                        if (!leq(-bound, fm)) record(c, i, x, -s, -t, fm, "lower growth bound violated");
                    }
        }
        rep.checks.push_back(c);
    }

    // H3
    {
        HypothesisCheck c =
            range_check("H3", {{a[0] >= ah[0] && a[1] >= ah[1], "alpha_i >= alpha_hat_i"},
                               {b[0] >= bh[0] && b[1] >= bh[1], "beta_i >= beta_hat_i"},
                               {ah[0] != 0 && ah[1] != 0 && bh[0] != 0 && bh[1] != 0, "hat exponents nonzero"},
                               {ah[0] + bh[0] > -mn(0), "alpha_hat1 + beta_hat1 > -min(1, p1-1)"},
                               {ah[1] + bh[1] > -mn(1), "alpha_hat2 + beta_hat2 > -min(1, p2-1)"},
                               {model.m[0] > 0.0 && model.m[1] > 0.0, "m_i > 0"}});
        if (c.pass) {
            for (int i = 0; i < 2; ++i)
                for (double s : pos)
                    for (double t : pos) {
                        const Point x = smp.next();
                        const double bound = model.m[i] * (std::pow(s, ah[i]) + std::pow(t, bh[i]));
                        const double fp = model.eval(i, x, s, t), fm = model.eval(i, x, -s, -t);
                        if (!leq(bound, fp)) record(c, i, x, s, t, fp, "lower growth bound violated");
                        if (!leq(fm, -bound)) record(c, i, x, -s, -t, fm, "negative-side bound violated");
                    }
        }
        rep.checks.push_back(c);
    }

    // H4: two-sided bound on the box [-eta1, eta1] x [-eta2, eta2] without the axes.
    {
        HypothesisCheck c = range_check("H4", {{model.eta[0] > 0.0 && model.eta[1] > 0.0, "eta_i > 0"}});
        if (c.pass) {
            std::vector<double> sa, ta;
            for (int k = 1; k <= 50; ++k) {
                sa.push_back(model.eta[0] * k / 50.0);
                ta.push_back(model.eta[1] * k / 50.0);
            }
            sa = signed_axis(sa);
            ta = signed_axis(ta);
            for (int i = 0; i < 2; ++i)
                for (double s : sa)
                    for (double t : ta) {
                        const Point x = smp.next();
                        const double v = model.eval(i, x, s, t);
                        const double bound = model.M[i] * (1.0 + pw(s, a[i]) + pw(t, b[i]));
                        if (!leq(std::fabs(v), bound)) record(c, i, x, s, t, v, "|f_i| exceeds the H4 bound");
                    }
        }
        rep.checks.push_back(c);
    }

    // H5: f_i carries the sign of the other component.
    {
        HypothesisCheck c;
        c.name = "H5";
        c.detail = "f_i sgn(s_j) > 0 on the sample grid";
        for (int i = 0; i < 2; ++i)
            for (double s : sgd)
                for (double t : sgd) {
                    const Point x = smp.next();
                    const double v = model.eval(i, x, s, t);
                    const double other = i == 0 ? t : s;
                    if (!(v * sgn(other) > 0.0)) record(c, i, x, s, t, v, "f_i sgn(s_j) <= 0");
                }
        rep.checks.push_back(c);
    }

    rep.checks.push_back(range_check("nodal_exponents", {{a[1] >= ah[1] && ah[1] > 0.0, "alpha2 >= alpha_hat2 > 0"},
                                                         {b[0] >= bh[0] && bh[0] > 0.0, "beta1 >= beta_hat1 > 0"}}));
    return rep;
}

void require_constant_sign_hypotheses(const ModelParams& model) {
    require_p_pair(model.p);
    const auto &a = model.alpha, &b = model.beta, &ah = model.alpha_hat, &bh = model.beta_hat;
    const auto mn = [&](int i) { return std::min(1.0, model.p[i] - 1.0); };
    auto fail = [](const std::string& w) { throw InvalidArgument("growth hypotheses violated: " + w); };
    if (!(-1.0 < a[0] && a[0] < 0.0) || !(-1.0 < b[1] && b[1] < 0.0)) fail("need -1 < alpha1, beta2 < 0");
    if (!(b[0] != 0.0 && std::fabs(b[0]) < mn(0)) || !(a[1] != 0.0 && std::fabs(a[1]) < mn(1)))
        fail("need 0 < |beta1| < min(1,p1-1) and 0 < |alpha2| < min(1,p2-1)");
    for (int i = 0; i < 2; ++i) {
        if (!(a[i] >= ah[i] && b[i] >= bh[i])) fail("need alpha_i >= alpha_hat_i and beta_i >= beta_hat_i");
        if (ah[i] == 0.0 || bh[i] == 0.0) fail("hat exponents must be nonzero");
        if (!(ah[i] + bh[i] > -mn(i))) fail("need alpha_hat_i + beta_hat_i > -min(1, p_i-1)");
        if (!(model.M[i] > 0.0)) fail("need M_i > 0");
        if (!(model.m[i] > 0.0)) fail("need m_i > 0");
    }
}

void require_nodal_exponents(const ModelParams& model) {
    if (!(model.alpha[1] >= model.alpha_hat[1] && model.alpha_hat[1] > 0.0 && model.beta[0] >= model.beta_hat[0] &&
          model.beta_hat[0] > 0.0))
        throw InvalidArgument("nodal pipeline needs alpha2 >= alpha_hat2 > 0 and beta1 >= beta_hat1 > 0");
}

}  // namespace lab

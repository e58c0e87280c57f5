#include <cmath>
#include <vector>

#include "doctest.h"
#include "lab/barriers.hpp"
#include "lab/errors.hpp"
#include "lab/model.hpp"

using namespace lab;

namespace {

const ModelParams& example() {
    static const ModelParams m = example_family({-0.5, 0.5}, {0.5, -0.5});
    return m;
}

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = lo + (hi - lo) * k / (n - 1);
    return v;
}

struct Calibrated {
    Mesh mesh = build_interval_mesh(256);
    DistanceField d = distance_field(mesh);
    std::array<Eigenpair, 2> eig;
    Calibration cal;
    Calibrated() {
        const auto opts = default_solver_opts(1);
        eig = {principal_eigenpair(mesh, 2.0, default_eigen_opts(1)), principal_eigenpair(mesh, 2.0, default_eigen_opts(1))};
        cal = calibrate_C(example(), mesh, d, boundary_layer(mesh, d, 0.1), eig, opts);
    }
};

const Calibrated& calibrated() {
    static const Calibrated c;
    return c;
}

}  // namespace

TEST_SUITE("model") {
TEST_CASE("example reactions") {
    const Point x{0.3, 0.0};
    CHECK(example().eval(0, x, 1.0, 4.0) == doctest::Approx(4.5).epsilon(1e-15));
    CHECK(example().eval(0, x, 1.0, -4.0) == doctest::Approx(-1.5).epsilon(1e-15));
    CHECK(example().eval(0, x, 1e-8, 1.0) > 1e3);
    CHECK(example().M == std::array<double, 2>{1.5, 1.5});
    CHECK(example().m == std::array<double, 2>{0.5, 0.5});
    CHECK(example().coupling == Coupling::sign_coupled);
    CHECK_THROWS_AS(example_family({-1.5, 0.5}, {0.5, -0.5}), InvalidArgument);
    CHECK_THROWS_AS(example_family({-0.5, 0.5}, {0.5, -0.5}, {0.5, 2.0}), InvalidArgument);
}

TEST_CASE("gamma_eps values and shifted oddness") {
    CHECK(gamma_eps(0.1, 2.0) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(gamma_eps(0.1, -3.0) == doctest::Approx(-0.05).epsilon(1e-15));
    CHECK(gamma_eps(0.1, 0.0) == doctest::Approx(0.05).epsilon(1e-15));
    for (double eps : grid(0.01, 0.99, 25))
        for (double s : grid(-5.0, 5.0, 41))
            CHECK(std::abs((gamma_eps(eps, s) - eps / 2) + (gamma_eps(eps, -s) - eps / 2)) <= 1e-14);
}

TEST_CASE("truncation values and bounds") {
    CHECK(truncate_T(0.1, 2.0, 1.0) == doctest::Approx(1.15).epsilon(1e-15));
    CHECK(truncate_T(0.1, -2.0, 1.0) == doctest::Approx(-1.05).epsilon(1e-15));
    CHECK(truncate_T(0.0, 0.3, 1.0) == 0.3);
    CHECK(truncate_T(0.0, -7.0, 1.0) == -1.0);

    // eps/2 <= |T| <= 3 eps/2 + u_bar on a 10 x 10 x 10 grid, plus the sign-change seam
    const double ubar_max = 2.0 * 0.15;  // C max y for the default 1D configuration is about this size
    for (double eps : grid(0.001, 0.999, 10))
        for (double u : grid(-10.0, 10.0, 10))
            for (double ub : grid(ubar_max / 10, ubar_max, 10)) {
                const double T = truncate_T(eps, u, ub);
                CHECK(std::abs(T) >= eps / 2 - 1e-14);
                CHECK(std::abs(T) <= 1.5 * eps + ub + 1e-14);
            }
    for (double eps : grid(0.001, 0.999, 10)) {
        CHECK(std::abs(truncate_T(eps, 0.0, 1.0)) == doctest::Approx(eps / 2).epsilon(1e-14));
        CHECK(std::abs(truncate_T(eps, -1e-300, 1.0)) >= eps / 2 - 1e-14);
    }
}

TEST_CASE("chi_hat branches and seams") {
    CHECK(chi_hat(1.0, 2.0) == 3.0);
    CHECK(chi_hat(1.0, 0.0) == 0.5);
    CHECK(chi_hat(1.0, -2.0) == -1.0);
    for (double phi : grid(0.05, 2.0, 20)) {
        CHECK(std::abs(chi_hat(phi, phi) - 1.5 * phi) <= 1e-14);
        CHECK(std::abs(chi_hat(phi, std::nextafter(phi, 10.0)) - 1.5 * phi) <= 1e-14 * (1 + phi));
        CHECK(std::abs(chi_hat(phi, -phi) + 0.5 * phi) <= 1e-14);
        CHECK(std::abs(chi_hat(phi, std::nextafter(-phi, -10.0)) + 0.5 * phi) <= 1e-14 * (1 + phi));
    }
}

TEST_CASE("chi_mu branches, continuity and sign splitting") {
    CHECK(chi_mu(1.0, 0.5) == 1.0);
    CHECK(chi_mu(1.0, 1.5) == 0.5);
    CHECK(chi_mu(1.0, -3.0) == 0.0);
    CHECK_THROWS_AS(chi_mu(0.0, 1.0), InvalidArgument);
    for (double mu : grid(0.1, 2.0, 10)) {
        for (double s : grid(-5.0, 5.0, 201)) {
            const double v = chi_mu(mu, s);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            // Lipschitz with constant 1/mu
            CHECK(std::abs(chi_mu(mu, s + 1e-9) - v) <= 1e-9 / mu + 1e-14);
        }
        for (double seam : {mu, 2 * mu, -mu, -2 * mu})
            CHECK(std::abs(chi_mu(mu, std::nextafter(seam, 10.0)) - chi_mu(mu, std::nextafter(seam, -10.0))) <= 1e-14);
        // splitting into positive and negative parts: the part that vanishes contributes chi_mu(0) = 1
        for (double u : grid(-5.0, 5.0, 200)) {
            if (u == 0.0) continue;
            const double up = std::max(u, 0.0), um = std::max(-u, 0.0);
            CHECK(chi_mu(mu, -um) + chi_mu(mu, up) - chi_mu(mu, u) == 1.0);
        }
    }
}

TEST_CASE("homotopy reactions at fixed points") {
    const Mesh mesh = build_interval_mesh(8);
    BarrierSet b;
    for (int i = 0; i < 2; ++i) {
        b.u_hi[i].assign(mesh.n_nodes(), 1.0);
        b.u_lo[i].assign(mesh.n_nodes(), 0.1);
    }
    std::array<Eigenpair, 2> eig;
    for (int i = 0; i < 2; ++i) {
        eig[i].lambda = M_PI * M_PI;
        eig[i].phi.resize(mesh.n_nodes());
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) eig[i].phi[k] = std::sin(M_PI * mesh.nodes[k].x);
    }
    const std::size_t node = 3;
    const double f1 = eval_F_t(example(), 0, 1.0, 0.1, mesh, node, 0.5, 0.5, b, eig);
    CHECK(f1 == doctest::Approx(1.5 * (std::pow(0.65, -0.5) + std::pow(0.65, 0.5))).epsilon(1e-14));
    CHECK(f1 == doctest::Approx(3.0698).epsilon(1e-4));
    const double f0 = eval_F_t(example(), 0, 0.0, 0.1, mesh, node, 0.5, 0.5, b, eig);
    CHECK(f0 == doctest::Approx(M_PI * M_PI * 0.5 + 1.0).epsilon(1e-14));
    CHECK(f0 != f1);
    CHECK(eval_F_t(example(), 0, 0.0, 0.1, mesh, node, 0.5, -3.0, b, eig) == f0);

    for (std::size_t k = 1; k + 1 < mesh.n_nodes(); ++k) {
        const double phi = eig[0].phi[k];
        CHECK(std::abs(eval_Fhat_t(example(), 0, 0.0, 0.1, mesh, k, phi, 0.2, b, eig) - M_PI * M_PI * phi) <= 1e-12);
        CHECK(eval_Fhat_t(example(), 0, 0.0, 0.1, mesh, k, 0.0, 0.2, b, eig) ==
              doctest::Approx(2.0 / 3.0 * M_PI * M_PI * phi / 2).epsilon(1e-14));
        CHECK(eval_Fhat_t(example(), 1, 1.0, 0.1, mesh, k, 0.3, -0.2, b, eig) ==
              eval_F_t(example(), 1, 1.0, 0.1, mesh, k, 0.3, -0.2, b, eig));
    }
    CHECK_THROWS_AS(eval_F_t(example(), 0, 1.5, 0.1, mesh, node, 0.5, 0.5, b, eig), InvalidArgument);
    CHECK_THROWS_AS(eval_F_t(example(), 0, 1.0, 0.0, mesh, node, 0.5, 0.0, b, eig), SingularEvaluation);
}

TEST_CASE("hypothesis sampler") {
    const auto rep = check_hypotheses(example(), 1);
    for (const auto& c : rep.checks) {
        CAPTURE(c.name);
        CAPTURE(c.detail);
        CHECK(c.pass);
    }
    CHECK(rep.all_pass());
    CHECK_NOTHROW(require_constant_sign_hypotheses(example()));
    CHECK_NOTHROW(require_nodal_exponents(example()));

    ModelParams bad = example();
    bad.alpha[0] = -1.5;
    const auto r2 = check_hypotheses(bad, 1);
    CHECK_FALSE(r2.get("H2").pass);
    CHECK_THROWS_AS(require_constant_sign_hypotheses(bad), InvalidArgument);

    ModelParams no_m = example();
    no_m.m = {0.0, 0.5};
    CHECK_FALSE(check_hypotheses(no_m, 1).get("H3").pass);
    CHECK_THROWS_AS(require_constant_sign_hypotheses(no_m), InvalidArgument);

    ModelParams nodal_bad = example();
    nodal_bad.beta_hat[0] = -0.1;
    CHECK_FALSE(check_hypotheses(nodal_bad, 1).get("nodal_exponents").pass);
    CHECK_THROWS_AS(require_nodal_exponents(nodal_bad), InvalidArgument);
}

TEST_CASE("decoupled variant violates sign coupling with a witness") {
    const auto dec = example_decoupled_family({-0.5, 0.5}, {0.5, -0.5});
    CHECK(dec.coupling == Coupling::decoupled);
    const auto rep = check_hypotheses(dec, 1);
    const auto& h5 = rep.get("H5");
    CHECK_FALSE(h5.pass);
    REQUIRE(h5.witness.has_value());
    const auto& w = *h5.witness;
    const double other = w.component == 0 ? w.t : w.s;
    CHECK(dec.eval(w.component, w.x, w.s, w.t) == doctest::Approx(w.value));
    CHECK(w.value * sgn(other) <= 0.0);
    CHECK(rep.get("H2").pass);
    CHECK(rep.get("H3").pass);
    // blow-up follows the own argument's sign; read with the other argument's sign it fails
    CHECK(rep.get("H1").pass);
    ModelParams as_coupled = dec;
    as_coupled.coupling = Coupling::sign_coupled;
    CHECK_FALSE(check_hypotheses(as_coupled, 1).get("H1").pass);
}

TEST_CASE("sampler is deterministic in its seed") {
    const auto dec = example_decoupled_family({-0.5, 0.5}, {0.5, -0.5});
    const auto a = check_hypotheses(dec, 42), b = check_hypotheses(dec, 42);
    REQUIRE(a.get("H5").witness.has_value());
    CHECK(a.get("H5").witness->x.x == b.get("H5").witness->x.x);
    CHECK(a.get("H5").witness->value == b.get("H5").witness->value);
}

TEST_CASE("homotopy lower bounds on the calibrated model") {
    const auto& c = calibrated();
    const auto& bar = c.cal.barriers;
    const auto& lay = c.cal.layer;
    const auto& m = example();
    int sampled = 0;
    for (double eps : {0.25, 1.0 / 32})
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
            for (std::size_t k = 0; k < c.mesh.n_nodes(); ++k) {
                if (c.mesh.boundary[k]) continue;
                for (double theta : {0.0, 0.5, 1.0}) {
                    std::array<double, 2> u;
                    for (int j = 0; j < 2; ++j) u[j] = bar.u_lo[j][k] + theta * (bar.u_hi[j][k] - bar.u_lo[j][k]);
                    for (int i = 0; i < 2; ++i) {
                        const double v = eval_Fhat_t(m, i, t, eps, c.mesh, k, u[0], u[1], bar, c.eig);
                        const double scale = std::pow(c.cal.C, -(m.p[i] - 1.0));
                        const double dk = c.d.values[k];
                        const double bound = lay.mask[k] ? -scale
                                                         : scale * (std::pow(dk, m.alpha_hat[i]) + std::pow(dk, m.beta_hat[i]));
                        CAPTURE(eps);
                        CAPTURE(t);
                        CAPTURE(k);
                        CAPTURE(i);
                        CHECK(v > bound);
                        ++sampled;
                    }
                }
            }
    CHECK(sampled > 0);
}
}

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "lab/barriers.hpp"
#include "lab/errors.hpp"

using namespace lab;

namespace {

struct Setup {
    Mesh mesh;
    DistanceField d;
    BoundaryLayer layer;
    std::array<Eigenpair, 2> eig;
    explicit Setup(int n) : mesh(build_interval_mesh(n)), d(distance_field(mesh)), layer(boundary_layer(mesh, d, 0.1)) {
        const auto e = principal_eigenpair(mesh, 2.0, default_eigen_opts(1));
        eig = {e, e};
    }
};

const Setup& setup256() {
    static const Setup s(256);
    return s;
}

const ModelParams& example() {
    static const ModelParams m = example_family({-0.5, 0.5}, {0.5, -0.5});
    return m;
}

const Calibration& calibrated() {
    static const Calibration c = [] {
        const auto& s = setup256();
        return calibrate_C(example(), s.mesh, s.d, s.layer, s.eig, default_solver_opts(1));
    }();
    return c;
}

BarrierReport report_at(double C) {
    const auto& s = setup256();
    const auto& cal = calibrated();
    const BarrierSet b = build_barriers(cal.barriers.y, cal.barriers.z, C, s.mesh, s.d, cal.layer.delta);
    return verify_sub_super(example(), b, s.mesh, s.d, cal.layer);
}

}  // namespace

TEST_SUITE("barriers") {
TEST_CASE("regular source: y(1/2) against the piecewise closed form") {
    // -y'' = 1 + 2d: y = x(1-x)/2 + w with -w'' = 2x on (0, 1/2), w'(1/2) = 0, so w(1/2) = 1/12.
    const Setup s(512);
    const auto y = solve_y(s.mesh, s.d, 2.0, 1.0, 1.0, default_solver_opts(1));
    CHECK(std::abs(y[256] - (0.125 + 1.0 / 12.0)) <= 1e-3);
}

TEST_CASE("singular source: y(1/2) against the Green function integral") {
    // y(1/2) = 2 int_0^{1/2} (s/2)(1 + s^{-1/2} + s^{1/2}) ds
    const double oracle = 0.125 + 2.0 / 3.0 * std::pow(0.5, 1.5) + 0.4 * std::pow(0.5, 2.5);
    const Setup s(512);
    const auto y = solve_y(s.mesh, s.d, 2.0, -0.5, 0.5, default_solver_opts(1));
    CHECK(std::abs(y[256] - oracle) / oracle <= 1e-2);
    for (std::size_t k = 0; k < s.mesh.n_nodes(); ++k) {
        if (s.mesh.boundary[k]) CHECK(y[k] == 0.0);
        else CHECK(y[k] > 0.0);
    }
    CHECK_THROWS_AS(solve_y(s.mesh, s.d, 2.0, -1.0, 0.5, default_solver_opts(1)), InvalidArgument);
    CHECK_THROWS_AS(solve_y(s.mesh, s.d, 2.0, 0.0, 0.5, default_solver_opts(1)), InvalidArgument);
}

TEST_CASE("piecewise source: z(1/2) against the closed form") {
    // z(1/2) = int_0^{1/2} s g(s) ds with g = -1 on d < 0.1 and 2d beyond
    const double oracle = -0.005 + 2.0 / 3.0 * (0.125 - 0.001);
    const Setup s(512);
    const auto z = solve_z(s.mesh, s.d, s.layer, 2.0, 1.0, 1.0, default_solver_opts(1));
    CHECK(std::abs(z[256] - oracle) <= 1e-3);
}

TEST_CASE("z is positive and below y for the default exponents") {
    const auto& s = setup256();
    const auto opts = default_solver_opts(1);
    for (auto [a, b] : {std::pair{-0.5, 0.5}, std::pair{0.5, -0.5}}) {
        const auto y = solve_y(s.mesh, s.d, 2.0, a, b, opts);
        const auto z = solve_z(s.mesh, s.d, s.layer, 2.0, a, b, opts);
        for (std::size_t k = 0; k < s.mesh.n_nodes(); ++k) {
            if (s.mesh.boundary[k]) continue;
            CHECK(z[k] > 0.0);
            CHECK(z[k] < y[k]);
        }
    }
}

TEST_CASE("build_barriers scaling, ordering and distance constant") {
    const auto& s = setup256();
    const auto opts = default_solver_opts(1);
    const auto y = solve_y(s.mesh, s.d, 2.0, -0.5, 0.5, opts);
    const auto z = solve_z(s.mesh, s.d, s.layer, 2.0, -0.5, 0.5, opts);

    const BarrierSet same = build_barriers({y, y}, {y, y}, 2.0, s.mesh, s.d, 0.1);
    for (std::size_t k = 0; k < s.mesh.n_nodes(); ++k)
        if (!s.mesh.boundary[k]) CHECK(same.u_hi[0][k] / same.u_lo[0][k] == doctest::Approx(4.0).epsilon(1e-15));

    const BarrierSet b10 = build_barriers({y, y}, {z, z}, 10.0, s.mesh, s.d, 0.1);
    for (std::size_t k = 0; k < s.mesh.n_nodes(); ++k) CHECK(b10.u_lo[0][k] <= b10.u_hi[0][k]);

    CHECK_THROWS_AS(build_barriers({y, y}, {z, z}, 1.0, s.mesh, s.d, 0.1), InvalidArgument);
    CHECK_THROWS_AS(build_barriers({y, y}, {z, z}, 0.5, s.mesh, s.d, 0.1), InvalidArgument);

    const double c = calibrated().barriers.c;
    CHECK(c >= 1.0);
    CHECK(c <= 20.0);
}

TEST_CASE("calibrated example passes every barrier inequality") {
    const auto& s = setup256();
    const auto& cal = calibrated();
    CHECK(cal.C > 1.0);
    CHECK(cal.C <= std::ldexp(1.0, 20));
    for (const auto& chk : cal.report.checks) {
        CAPTURE(chk.name);
        CHECK(chk.pass);
        if (chk.name.rfind("eigen_", 0) != 0) CHECK(chk.worst_margin > 0.0);
    }
    for (const auto& chk : distance_chain_checks(cal.barriers, s.mesh, s.d)) {
        CAPTURE(chk.name);
        CHECK(chk.pass);
    }
    for (const auto& chk : eigen_dominance_checks(cal.barriers, s.eig)) {
        CAPTURE(chk.name);
        CHECK(chk.pass);
    }
    // nesting of the rectangles, strict at interior nodes
    for (int i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < s.mesh.n_nodes(); ++k)
            if (!s.mesh.boundary[k]) CHECK(cal.barriers.u_lo[i][k] < cal.barriers.u_hi[i][k]);
}

TEST_CASE("doubling the calibrated constant keeps the inequalities") {
    CHECK(report_at(2.0 * calibrated().C).all_pass());
    CHECK(report_at(4.0 * calibrated().C).all_pass());
}

TEST_CASE("a constant close to one fails the supersolution side") {
    const auto rep = report_at(1.01);
    CHECK_FALSE(rep.all_pass());
    const auto& sup = rep.get("supersolution_positive_1");
    CHECK_FALSE(sup.pass);
    CHECK(sup.worst_margin < 0.0);
    // the binding node sits in the bulk, where the d^{-1/2} source no longer dominates;
    // inside the layer the singular source keeps the inequality
    CHECK(setup256().d.values[sup.worst_node] >= 0.1);
}

TEST_CASE("calibration is nontrivial: the square root of C fails") {
    CHECK_FALSE(report_at(std::sqrt(calibrated().C)).all_pass());
}

TEST_CASE("odd reactions give mirrored margins") {
    const auto& s = setup256();
    const auto odd = odd_coupled_family({-0.5, 0.5}, {0.5, -0.5});
    REQUIRE(odd.odd_symmetric);
    const auto cal = calibrate_C(odd, s.mesh, s.d, s.layer, s.eig, default_solver_opts(1));
    for (int i = 1; i <= 2; ++i) {
        const std::string tag = std::to_string(i);
        CHECK(std::abs(cal.report.get("supersolution_positive_" + tag).worst_margin -
                       cal.report.get("subsolution_negative_" + tag).worst_margin) <= 1e-12);
        CHECK(std::abs(cal.report.get("subsolution_positive_" + tag).worst_margin -
                       cal.report.get("supersolution_negative_" + tag).worst_margin) <= 1e-12);
    }
}

TEST_CASE("invalid hypotheses stop calibration before any solve") {
    const auto& s = setup256();
    ModelParams m = example();
    m.m = {0.0, 0.5};
    CHECK_THROWS_AS(calibrate_C(m, s.mesh, s.d, s.layer, s.eig, default_solver_opts(1)), InvalidArgument);
}
}

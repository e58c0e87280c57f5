#include <cmath>
#include <random>

#include "doctest.h"
#include "lab/mesh.hpp"
#include "lab/quadrature.hpp"

using namespace lab;

namespace {

double interpolate(const double* v, const std::array<double, 3>& bary, int nv) {
    double s = 0.0;
    for (int a = 0; a < nv; ++a) s += bary[a] * v[a];
    return s;
}

void check_element(const Mesh& m, std::size_t e, const double* p1, const double* p2) {
    std::vector<SignedPiece> pieces;
    split_element(m, e, p1, p2, pieces);
    REQUIRE_FALSE(pieces.empty());
    const int nv = m.verts_per_element();
    double total = 0.0;
    for (const auto& piece : pieces) {
        for (const auto& q : piece.points) {
            total += q.weight;
            CHECK(q.weight >= 0.0);
            double bsum = 0.0;
            for (int a = 0; a < nv; ++a) {
                CHECK(q.bary[a] >= -1e-14);
                bsum += q.bary[a];
            }
            CHECK(bsum == doctest::Approx(1.0).epsilon(1e-13));
            // the stored sign matches the interpolant at every quadrature point of the piece
            const double v1 = interpolate(p1, q.bary, nv), v2 = interpolate(p2, q.bary, nv);
            if (piece.sign[0] != 0) CHECK(v1 * piece.sign[0] >= -1e-13);
            if (piece.sign[1] != 0) CHECK(v2 * piece.sign[1] >= -1e-13);
        }
    }
    CHECK(total == doctest::Approx(m.measure[e]).epsilon(1e-12));
    if (!changes_sign(p1, nv) && !changes_sign(p2, nv)) CHECK(pieces.size() == 1);
}

}  // namespace

TEST_SUITE("quadrature") {
TEST_CASE("sign change detection") {
    const double a[3] = {1.0, 2.0, -0.5}, b[3] = {0.0, 2.0, 1.0}, c[3] = {0.0, -1.0, 0.0};
    CHECK(changes_sign(a, 3));
    CHECK_FALSE(changes_sign(b, 3));
    CHECK_FALSE(changes_sign(c, 3));
    CHECK(changes_sign(a + 1, 2));
}

TEST_CASE("interval element split at the zero of the interpolant") {
    const Mesh m = build_interval_mesh(4);
    const double p1[2] = {1.0, -3.0}, p2[2] = {1.0, 1.0};
    std::vector<SignedPiece> pieces;
    split_element(m, 0, p1, p2, pieces);
    REQUIRE(pieces.size() == 2);
    double plus = 0.0, minus = 0.0;
    for (const auto& pc : pieces)
        for (const auto& q : pc.points) (pc.sign[0] > 0 ? plus : minus) += q.weight;
    CHECK(plus == doctest::Approx(0.25 * 0.25).epsilon(1e-14));
    CHECK(minus == doctest::Approx(0.25 * 0.75).epsilon(1e-14));
}

TEST_CASE("pieces cover each element with consistent signs") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (const Mesh& m : {build_interval_mesh(8), build_rectangle_mesh(5, 5)}) {
        for (int trial = 0; trial < 40; ++trial)
            for (std::size_t e = 0; e < m.n_elements(); ++e) {
                double p1[3], p2[3];
                for (int a = 0; a < 3; ++a) {
                    p1[a] = dist(rng);
                    p2[a] = trial % 4 == 0 ? 0.5 : dist(rng);
                }
                if (trial % 5 == 1) p1[0] = 0.0;  // vertex exactly on the zero set
                check_element(m, e, p1, p2);
            }
    }
}
}

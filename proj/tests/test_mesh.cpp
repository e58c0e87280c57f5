#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "lab/errors.hpp"
#include "lab/mesh.hpp"

using namespace lab;

TEST_SUITE("mesh") {
TEST_CASE("interval mesh layout") {
    const Mesh m = build_interval_mesh(4);
    REQUIRE(m.n_nodes() == 5);
    CHECK(m.n_elements() == 4);
    for (int i = 0; i <= 4; ++i) CHECK(m.nodes[i].x == doctest::Approx(0.25 * i));
    CHECK(m.boundary[0] == 1);
    CHECK(m.boundary[4] == 1);
    for (int i = 1; i < 4; ++i) CHECK(m.boundary[i] == 0);
    CHECK(m.n_interior() == 3);
    CHECK(build_interval_mesh(256).h == doctest::Approx(1.0 / 256).epsilon(1e-14));
    CHECK_THROWS_AS(build_interval_mesh(2), InvalidArgument);
}

TEST_CASE("rectangle mesh counts and size") {
    const Mesh m = build_rectangle_mesh(4, 4);
    CHECK(m.n_nodes() == 25);
    CHECK(m.n_elements() == 32);
    int nb = 0;
    for (auto b : m.boundary) nb += b;
    CHECK(nb == 16);
    CHECK_THROWS_AS(build_rectangle_mesh(4, 2), InvalidArgument);
    CHECK(build_rectangle_mesh(64, 64).h == doctest::Approx(std::sqrt(2.0) / 64).epsilon(1e-14));

    double area = 0.0;
    for (double a : m.measure) area += a;
    CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("boundary and interior nodes partition the mesh") {
    for (const Mesh& m : {build_interval_mesh(17), build_rectangle_mesh(6, 9)}) {
        std::size_t nb = 0;
        for (auto b : m.boundary) nb += b;
        CHECK(nb + m.n_interior() == m.n_nodes());
    }
}

TEST_CASE("distance to the boundary") {
    const Mesh m1 = build_interval_mesh(10);
    CHECK(boundary_distance(m1, {0.3, 0.0}) == doctest::Approx(0.3));
    CHECK(boundary_distance(m1, {0.7, 0.0}) == doctest::Approx(0.3));
    const Mesh m2 = build_rectangle_mesh(10, 10);
    CHECK(boundary_distance(m2, {0.5, 0.1}) == doctest::Approx(0.1));

    const auto d = distance_field(m2);
    for (std::size_t i = 0; i < m2.n_nodes(); ++i) {
        if (m2.boundary[i]) CHECK(d.values[i] == 0.0);
        else CHECK(d.values[i] > 0.0);
    }
    // 1-Lipschitz along element edges
    for (const auto& el : m2.elements)
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                const auto& pa = m2.nodes[el[a]];
                const auto& pb = m2.nodes[el[b]];
                const double len = std::hypot(pa.x - pb.x, pa.y - pb.y);
                CHECK(std::abs(d.values[el[a]] - d.values[el[b]]) <= len + m2.h * 1e-12);
            }
}

TEST_CASE("distance field is mirror invariant nodewise") {
    const Mesh m1 = build_interval_mesh(33);
    const auto d1 = distance_field(m1);
    for (std::size_t i = 0; i < m1.n_nodes(); ++i) CHECK(d1.values[i] == d1.values[m1.n_nodes() - 1 - i]);

    const Mesh m2 = build_rectangle_mesh(8, 6);
    const auto d2 = distance_field(m2);
    auto at = [&](int i, int j) { return d2.values[static_cast<std::size_t>(j) * 9 + i]; };
    for (int j = 0; j <= 6; ++j)
        for (int i = 0; i <= 8; ++i) {
            CHECK(at(i, j) == at(8 - i, j));
            CHECK(at(i, j) == at(i, 6 - j));
        }
}

TEST_CASE("boundary layer masks") {
    const Mesh m = build_interval_mesh(4);
    const auto d = distance_field(m);
    const auto layer = boundary_layer(m, d, 0.3);
    CHECK(layer.mask == std::vector<std::uint8_t>{0, 1, 0, 1, 0});
    CHECK(layer.complement_mask == std::vector<std::uint8_t>{0, 0, 1, 0, 0});
    CHECK_THROWS_AS(boundary_layer(m, d, 0.6), InvalidArgument);
    CHECK_THROWS_AS(boundary_layer(m, d, 0.0), InvalidArgument);

    const Mesh m2 = build_rectangle_mesh(4, 4);
    const auto d2 = distance_field(m2);
    const auto l2 = boundary_layer(m2, d2, 0.2);
    for (std::size_t i = 0; i < m2.n_nodes(); ++i) {
        const bool interior = !m2.boundary[i];
        CHECK(static_cast<bool>(l2.mask[i]) == (interior && d2.values[i] < 0.2));
        CHECK(static_cast<bool>(l2.complement_mask[i]) == (interior && d2.values[i] >= 0.2));
        if (interior) CHECK(l2.mask[i] + l2.complement_mask[i] == 1);
    }
    // nodes with d >= 0.2 on the 4x4 grid: d takes the values 0.25 and 0.5
    int inner = 0;
    for (auto c : l2.complement_mask) inner += c;
    CHECK(inner == 9);
}

TEST_CASE("mesh csv export") {
    const Mesh m = build_interval_mesh(4);
    std::ostringstream os;
    write_mesh_csv(os, m, distance_field(m));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "node_id,x,boundary,d");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 5);

    const Mesh m2 = build_rectangle_mesh(4, 4);
    std::ostringstream os2;
    write_mesh_csv(os2, m2, distance_field(m2));
    CHECK(os2.str().rfind("node_id,x,y,boundary,d\n", 0) == 0);
}
}

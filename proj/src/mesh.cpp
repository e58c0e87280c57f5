#include "lab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "lab/errors.hpp"
#include "lab/output.hpp"

namespace lab {

Point Mesh::centroid(std::size_t e) const {
    const int nv = verts_per_element();
    Point c;
    for (int a = 0; a < nv; ++a) {
        c.x += nodes[elements[e][a]].x;
        c.y += nodes[elements[e][a]].y;
    }
    c.x /= nv;
    c.y /= nv;
    return c;
}

Point Mesh::point_at(std::size_t e, const std::array<double, 3>& bary) const {
    Point c;
    for (int a = 0; a < verts_per_element(); ++a) {
        c.x += bary[a] * nodes[elements[e][a]].x;
        c.y += bary[a] * nodes[elements[e][a]].y;
    }
    return c;
}

namespace {

void finish_geometry(Mesh& m) {
    const std::size_t ne = m.elements.size();
    m.measure.assign(ne, 0.0);
    m.grad.assign(ne, {});
    m.lumped.assign(m.nodes.size(), 0.0);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& el = m.elements[e];
        if (m.dim == 1) {
            const double len = m.nodes[el[1]].x - m.nodes[el[0]].x;
            m.measure[e] = len;
            m.grad[e][0] = {-1.0 / len, 0.0};
            m.grad[e][1] = {1.0 / len, 0.0};
        } else {
            const Point& p0 = m.nodes[el[0]];
            const Point& p1 = m.nodes[el[1]];
            const Point& p2 = m.nodes[el[2]];
            const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
            m.measure[e] = 0.5 * std::fabs(det);
            // grad(lambda_a) = perp(opposite edge) / det
            m.grad[e][0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
            m.grad[e][1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
            m.grad[e][2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
        }
        for (int a = 0; a < m.verts_per_element(); ++a)
            m.lumped[el[a]] += m.measure[e] / m.verts_per_element();
    }
    m.dof.assign(m.nodes.size(), -1);
    m.node_of_dof.clear();
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        if (!m.boundary[i]) {
            m.dof[i] = static_cast<int>(m.node_of_dof.size());
            m.node_of_dof.push_back(static_cast<int>(i));
        }
    }
}

}  // namespace

Mesh build_interval_mesh(int n) {
    if (n < 4) throw InvalidArgument("interval mesh needs n >= 4, got " + std::to_string(n));
    Mesh m;
    m.dim = 1;
    m.nx = n;
    m.ny = 0;
    m.h = 1.0 / n;
    for (int i = 0; i <= n; ++i) {
        m.nodes.push_back({static_cast<double>(i) / n, 0.0});
        m.grid_index.push_back({i, 0});
        m.boundary.push_back(i == 0 || i == n ? 1 : 0);
    }
    for (int i = 0; i < n; ++i) m.elements.push_back({i, i + 1, -1});
    finish_geometry(m);
    return m;
}

Mesh build_rectangle_mesh(int nx, int ny) {
    if (nx < 4 || ny < 4)
        throw InvalidArgument("rectangle mesh needs nx, ny >= 4, got " + std::to_string(nx) + "x" +
                              std::to_string(ny));
    Mesh m;
    m.dim = 2;
    m.nx = nx;
    m.ny = ny;
    m.h = std::sqrt(1.0 / (double(nx) * nx) + 1.0 / (double(ny) * ny));
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            m.nodes.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});
            m.grid_index.push_back({i, j});
            m.boundary.push_back(i == 0 || j == 0 || i == nx || j == ny ? 1 : 0);
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            // counter-clockwise triangles sharing the diagonal (i,j)-(i+1,j+1)
            m.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    finish_geometry(m);
    return m;
}

double boundary_distance(const Mesh& mesh, const Point& p) {
    const double dx = std::min(p.x, 1.0 - p.x);
    if (mesh.dim == 1) return std::max(dx, 0.0);
    return std::max(std::min(dx, std::min(p.y, 1.0 - p.y)), 0.0);
}

DistanceField distance_field(const Mesh& mesh) {
    // Computed from integer lattice indices so mirror images agree exactly.
    DistanceField d;
    d.values.resize(mesh.n_nodes());
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        const auto [i, j] = mesh.grid_index[k];
        double v = static_cast<double>(std::min(i, mesh.nx - i)) / mesh.nx;
        if (mesh.dim == 2) v = std::min(v, static_cast<double>(std::min(j, mesh.ny - j)) / mesh.ny);
        d.values[k] = v;
    }
    return d;
}

double max_value(const DistanceField& d) {
    return d.values.empty() ? 0.0 : *std::max_element(d.values.begin(), d.values.end());
}

BoundaryLayer boundary_layer(const Mesh& mesh, const DistanceField& d, double delta) {
    const double dmax = max_value(d);
    if (!(delta > 0.0) || !(delta < dmax))
        throw InvalidArgument("boundary layer width must satisfy 0 < delta < max d = " + format_double(dmax));
    BoundaryLayer layer;
    layer.delta = delta;
    layer.mask.assign(mesh.n_nodes(), 0);
    layer.complement_mask.assign(mesh.n_nodes(), 0);
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        if (mesh.boundary[k]) continue;
        if (d.values[k] < delta)
            layer.mask[k] = 1;
        else
            layer.complement_mask[k] = 1;
    }
    return layer;
}

void write_mesh_csv(std::ostream& os, const Mesh& mesh, const DistanceField& d) {
    os << (mesh.dim == 1 ? "node_id,x,boundary,d\n" : "node_id,x,y,boundary,d\n");
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        os << k << ',' << format_double(mesh.nodes[k].x);
        if (mesh.dim == 2) os << ',' << format_double(mesh.nodes[k].y);
        os << ',' << int(mesh.boundary[k]) << ',' << format_double(d.values[k]) << '\n';
    }
}

}  // namespace lab

#pragma once
// Structured P1 meshes of the unit interval and the unit square, the exact
// boundary-distance field and the boundary layer {d < delta}.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace lab {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Simplicial mesh: segments in 1D, triangles in 2D. Immutable once built.
struct Mesh {
    int dim = 1;
    int nx = 0;  ///< cells along x
    int ny = 0;  ///< cells along y (0 in 1D)
    std::vector<Point> nodes;
    std::vector<std::array<int, 2>> grid_index;  ///< (i, j) lattice index of each node
    std::vector<std::array<int, 3>> elements;    ///< vertex ids; 1D uses the first two
    std::vector<std::uint8_t> boundary;          ///< 1 for nodes on the boundary
    double h = 0.0;                              ///< max element diameter

    // Derived geometry, filled by the builders.
    std::vector<double> measure;                ///< |K| per element
    std::vector<std::array<Point, 3>> grad;     ///< gradient of each vertex basis function on K
    std::vector<int> dof;                       ///< node -> interior index, -1 on the boundary
    std::vector<int> node_of_dof;               ///< interior index -> node
    std::vector<double> lumped;                 ///< lumped nodal measure sum |K|/(dim+1)

    int verts_per_element() const { return dim + 1; }
    std::size_t n_nodes() const { return nodes.size(); }
    std::size_t n_elements() const { return elements.size(); }
    std::size_t n_interior() const { return node_of_dof.size(); }
    Point centroid(std::size_t e) const;
    /// Point with barycentric coordinates `bary` inside element e.
    Point point_at(std::size_t e, const std::array<double, 3>& bary) const;
};

/// Uniform mesh of (0,1) with n elements. Throws InvalidArgument if n < 4.
Mesh build_interval_mesh(int n);
/// Structured triangulation of (0,1)^2, each cell split along its rising diagonal.
Mesh build_rectangle_mesh(int nx, int ny);

struct DistanceField {
    std::vector<double> values;
};

/// Exact distance from a point of the unit interval/square to the boundary.
double boundary_distance(const Mesh& mesh, const Point& p);
DistanceField distance_field(const Mesh& mesh);
double max_value(const DistanceField& d);

struct BoundaryLayer {
    double delta = 0.0;
    std::vector<std::uint8_t> mask;             ///< interior node with d < delta
    std::vector<std::uint8_t> complement_mask;  ///< interior node with d >= delta
};

/// Throws InvalidArgument unless 0 < delta < max(d).
BoundaryLayer boundary_layer(const Mesh& mesh, const DistanceField& d, double delta);

/// CSV with columns node_id,x[,y],boundary,d.
void write_mesh_csv(std::ostream& os, const Mesh& mesh, const DistanceField& d);

}  // namespace lab

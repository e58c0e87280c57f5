#pragma once
// Element quadrature that respects the sign structure of two P1 fields.
//
// The singular reactions jump where a component changes sign. Splitting each
// element along the zero sets of both interpolants and using one point per
// piece makes the assembled load a continuous function of the nodal values,
// which Newton-type solvers need.

#include <array>
#include <vector>

#include "lab/mesh.hpp"

namespace lab {

struct QuadPoint {
    std::array<double, 3> bary{};  ///< barycentric coordinates in the element
    double weight = 0.0;           ///< physical measure carried by the point
};

struct SignedPiece {
    std::vector<QuadPoint> points;
    std::array<int, 2> sign{};  ///< sign of each pattern field on the piece (-1, 0, +1)
};

/// Splits element e along {psi1 = 0} and {psi2 = 0}; psi values are given per
/// local vertex. Elements without a strict sign change of either field yield a
/// single centroid piece. Piece weights sum to |K|.
void split_element(const Mesh& mesh, std::size_t e, const double* psi1, const double* psi2,
                   std::vector<SignedPiece>& out);

/// True if the local vertex values take both strict signs.
bool changes_sign(const double* v, int nv);

}  // namespace lab

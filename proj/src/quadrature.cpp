#include "lab/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "lab/model.hpp"

namespace lab {

bool changes_sign(const double* v, int nv) {
    bool pos = false, neg = false;
    for (int a = 0; a < nv; ++a) {
        pos = pos || v[a] > 0.0;
        neg = neg || v[a] < 0.0;
    }
    return pos && neg;
}

namespace {

using Bary = std::array<double, 3>;
using Polygon = std::vector<Bary>;

double eval(const Bary& b, const double* v, int nv) {
    double s = 0.0;
    for (int a = 0; a < nv; ++a) s += b[a] * v[a];
    return s;
}

int sign_at(const Bary& b, const double* v, int nv) { return static_cast<int>(sgn(eval(b, v, nv))); }

/// Part of a convex polygon where the affine function g has sign `side` (weakly).
Polygon clip(const Polygon& poly, const double* g, double side) {
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Bary& A = poly[k];
        const Bary& B = poly[(k + 1) % n];
        const double ga = side * eval(A, g, 3), gb = side * eval(B, g, 3);
        if (ga >= 0.0) out.push_back(A);
        if ((ga > 0.0 && gb < 0.0) || (ga < 0.0 && gb > 0.0)) {
            const double s = ga / (ga - gb);
            out.push_back({A[0] + s * (B[0] - A[0]), A[1] + s * (B[1] - A[1]), A[2] + s * (B[2] - A[2])});
        }
    }
    return out;
}

void split_1d(const Mesh& mesh, std::size_t e, const double* psi1, const double* psi2,
              std::vector<SignedPiece>& out) {
    double cuts[4] = {0.0, 1.0, 1.0, 1.0};
    int nc = 1;
    for (const double* v : {psi1, psi2})
        if (changes_sign(v, 2)) cuts[nc++] = v[0] / (v[0] - v[1]);
    cuts[nc++] = 1.0;
    std::sort(cuts, cuts + nc);
    for (int k = 0; k + 1 < nc; ++k) {
        const double len = cuts[k + 1] - cuts[k];
        if (!(len > 0.0)) continue;
        const double m = 0.5 * (cuts[k] + cuts[k + 1]);
        SignedPiece piece;
        const Bary b{1.0 - m, m, 0.0};
        piece.points.push_back({b, len * mesh.measure[e]});
        piece.sign = {sign_at(b, psi1, 2), sign_at(b, psi2, 2)};
        out.push_back(std::move(piece));
    }
}

void split_2d(const Mesh& mesh, std::size_t e, const double* psi1, const double* psi2,
              std::vector<SignedPiece>& out) {
    std::vector<Polygon> polys{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
    for (const double* g : {psi1, psi2}) {
        if (!changes_sign(g, 3)) continue;
        std::vector<Polygon> next;
        for (const Polygon& P : polys)
            for (double side : {1.0, -1.0}) {
                Polygon Q = clip(P, g, side);
                if (Q.size() >= 3) next.push_back(std::move(Q));
            }
        polys.swap(next);
    }
    for (const Polygon& P : polys) {
        SignedPiece piece;
        Bary centre{0.0, 0.0, 0.0};
        double area = 0.0;
        for (std::size_t k = 1; k + 1 < P.size(); ++k) {
            const Bary &A = P[0], &B = P[k], &C = P[k + 1];
            // area fraction = |det| of the barycentric vertex matrix
            const double det = A[0] * (B[1] * C[2] - B[2] * C[1]) - A[1] * (B[0] * C[2] - B[2] * C[0]) +
                               A[2] * (B[0] * C[1] - B[1] * C[0]);
            const double frac = std::fabs(det);
            if (!(frac > 0.0)) continue;
            const Bary c{(A[0] + B[0] + C[0]) / 3.0, (A[1] + B[1] + C[1]) / 3.0, (A[2] + B[2] + C[2]) / 3.0};
            piece.points.push_back({c, frac * mesh.measure[e]});
            for (int a = 0; a < 3; ++a) centre[a] += frac * c[a];
            area += frac;
        }
        if (piece.points.empty()) continue;
        for (double& c : centre) c /= area;
        piece.sign = {sign_at(centre, psi1, 3), sign_at(centre, psi2, 3)};
        out.push_back(std::move(piece));
    }
}

}  // namespace

void split_element(const Mesh& mesh, std::size_t e, const double* psi1, const double* psi2,
                   std::vector<SignedPiece>& out) {
    out.clear();
    if (mesh.dim == 1)
        split_1d(mesh, e, psi1, psi2, out);
    else
        split_2d(mesh, e, psi1, psi2, out);
}

}  // namespace lab

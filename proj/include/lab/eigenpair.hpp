#pragma once
// Principal Dirichlet eigenpair of the p-Laplacian and the comparability
// constant between the eigenfunction and the boundary distance.

#include <iosfwd>

#include "lab/mesh.hpp"
#include "lab/plap.hpp"

namespace lab {

struct Eigenpair {
    double p = 2.0;
    double lambda = 0.0;
    ScalarField phi;  ///< positive inside, zero on the boundary, max = 1
    double c0 = 1.0;  ///< c0 d >= phi >= d / c0 at interior nodes
    int iterations = 0;
};

struct EigenOpts {
    SolverOpts inner;              ///< settings of each inverse-iteration solve
    double lambda_rel_tol = 1e-8;  ///< stop on relative eigenvalue change below this ...
    double phi_tol = 1e-10;        ///< ... and sup-norm eigenfunction change below this
    int max_iters = 400;
};

EigenOpts default_eigen_opts(int dim);

/// int |grad v|^p / int |v|^p with centroid quadrature in the denominator.
double rayleigh_quotient(const Mesh& mesh, double p, const ScalarField& v);

/// Normalized inverse power iteration started from the torsion function.
/// Throws ConvergenceFailure (carrying the last lambda and phi) on budget exhaustion.
Eigenpair principal_eigenpair(const Mesh& mesh, double p, const EigenOpts& opts);
Eigenpair principal_eigenpair(const Mesh& mesh, double p, const SolverOpts& opts);

/// Smallest c >= 1 with c d >= phi >= d / c at nodes where d > 0.
/// Throws InvalidArgument if phi is not positive at such a node.
double comparability_constant(const ScalarField& phi, const DistanceField& d);

/// Closed-form first eigenvalue on (0,1): (p-1) (2 pi / (p sin(pi/p)))^p.
double interval_eigenvalue(double p);

}  // namespace lab

#pragma once
// Discrete p-Laplacian on P1 elements: weak-form residual, energy and a
// damped Newton solver for -div(|grad u|^{p-2} grad u) = g with u = 0 on the
// boundary.

#include <Eigen/SparseCore>
#include <vector>

#include "lab/mesh.hpp"

namespace lab {

/// One value per mesh node.
using ScalarField = std::vector<double>;

struct SolverOpts {
    double tol_residual = 1e-9;        ///< dual-norm stopping tolerance
    int max_newton_iters = 100;
    int max_picard_iters = 200;        ///< budget for frozen-coefficient fallback steps
    double jacobian_floor_rel = 1e-8;  ///< kappa = max(rel * max|grad u|, min)
    double jacobian_floor_min = 1e-12;
    double line_search_shrink = 0.5;
};

/// Defaults: tolerance 1e-9 in 1D and 1e-7 in 2D.
SolverOpts default_solver_opts(int dim);
void validate(const SolverOpts& opts);

struct SolveStats {
    int newton_iters = 0;
    int picard_iters = 0;
    double residual = 0.0;
};

/// Euclidean norm of the interior entries scaled by h^{dim/2}.
double dual_norm(const Mesh& mesh, const ScalarField& r);

/// Load vector b_j = sum_K |K| g(centroid) / (dim+1), g interpolated from nodal values.
ScalarField nodal_load(const Mesh& mesh, const ScalarField& g);
/// Load vector from one source value per element (taken at the centroid).
ScalarField element_load(const Mesh& mesh, const std::vector<double>& g_elem);

/// Principal part: a_j = sum_K |K| |grad u|^{p-2} grad u . grad phi_j (boundary entries zero).
ScalarField apply_plap(const Mesh& mesh, double p, const ScalarField& u);
/// r = apply_plap(u) - load on interior nodes, zero on the boundary.
ScalarField residual_with_load(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& load);
ScalarField assemble_residual(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& g);

/// (1/p) int |grad u|^p - sum_j load_j u_j
double energy_with_load(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& load);
double energy(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& g);
/// int |grad u|^p (exact for P1 fields)
double gradient_power_integral(const Mesh& mesh, double p, const ScalarField& u);

/// Jacobian of the regularized operator on interior dofs, kappa as in SolverOpts.
Eigen::SparseMatrix<double> plap_tangent(const Mesh& mesh, double p, const ScalarField& u, double kappa);
double jacobian_floor(const Mesh& mesh, const ScalarField& u, const SolverOpts& opts);

/// Solve with a precomputed load vector; `init` (optional) is a warm start.
ScalarField solve_dirichlet_load(const Mesh& mesh, double p, const ScalarField& load, const SolverOpts& opts,
                                 const ScalarField* init = nullptr, SolveStats* stats = nullptr);
/// Solve with nodal source g. Throws ConvergenceFailure when budgets run out.
ScalarField solve_dirichlet(const Mesh& mesh, double p, const ScalarField& g, const SolverOpts& opts);

}  // namespace lab

#include "lab/plap.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "lab/errors.hpp"
#include "lab/kernels.hpp"
#include "lab/output.hpp"

namespace lab {

namespace {

void require_p(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must exceed 1, got " + format_double(p));
}

void require_size(const Mesh& mesh, const ScalarField& v, const char* what) {
    if (v.size() != mesh.n_nodes())
        throw InvalidArgument(std::string(what) + " has " + std::to_string(v.size()) + " entries, mesh has " +
                              std::to_string(mesh.n_nodes()) + " nodes");
}

Point element_gradient(const Mesh& mesh, std::size_t e, const ScalarField& u) {
    Point g;
    for (int a = 0; a < mesh.verts_per_element(); ++a) {
        const double ua = u[mesh.elements[e][a]];
        g.x += ua * mesh.grad[e][a].x;
        g.y += ua * mesh.grad[e][a].y;
    }
    return g;
}

std::vector<double> interior_values(const Mesh& mesh, const ScalarField& v) {
    std::vector<double> out(mesh.n_interior());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = v[mesh.node_of_dof[k]];
    return out;
}

double max_gradient(const Mesh& mesh, const ScalarField& u) {
    double m = 0.0;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point g = element_gradient(mesh, e, u);
        m = std::max(m, std::hypot(g.x, g.y));
    }
    return m;
}

/// Frozen-coefficient (Kacanov) matrix: sum_K |K| w_K grad phi_a . grad phi_b.
Eigen::SparseMatrix<double> frozen_matrix(const Mesh& mesh, double p, const ScalarField& u, double kappa) {
    std::vector<Eigen::Triplet<double>> trip;
    const int nv = mesh.verts_per_element();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point g = element_gradient(mesh, e, u);
        const double w = std::pow(g.x * g.x + g.y * g.y + kappa * kappa, 0.5 * (p - 2.0));
        for (int a = 0; a < nv; ++a) {
            const int ia = mesh.dof[mesh.elements[e][a]];
            if (ia < 0) continue;
            for (int b = 0; b < nv; ++b) {
                const int ib = mesh.dof[mesh.elements[e][b]];
                if (ib < 0) continue;
                const Point& ga = mesh.grad[e][a];
                const Point& gb = mesh.grad[e][b];
                trip.emplace_back(ia, ib, mesh.measure[e] * w * (ga.x * gb.x + ga.y * gb.y));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.n_interior());
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

SolverOpts default_solver_opts(int dim) {
    SolverOpts o;
    o.tol_residual = dim == 1 ? 1e-9 : 1e-7;
    return o;
}

void validate(const SolverOpts& opts) {
    if (!(opts.tol_residual > 0.0)) throw InvalidArgument("tol_residual must be positive");
    if (!(opts.jacobian_floor_min > 0.0) || opts.jacobian_floor_rel < 0.0)
        throw InvalidArgument("jacobian floor must be positive");
    if (!(opts.line_search_shrink > 0.0 && opts.line_search_shrink < 1.0))
        throw InvalidArgument("line_search_shrink must lie in (0,1)");
    if (opts.max_newton_iters < 1 || opts.max_picard_iters < 0) throw InvalidArgument("iteration budgets invalid");
}

double dual_norm(const Mesh& mesh, const ScalarField& r) {
    const std::vector<double> ri = interior_values(mesh, r);
    return std::sqrt(kernels::sum_squares(ri.data(), ri.size())) * std::pow(mesh.h, 0.5 * mesh.dim);
}

ScalarField nodal_load(const Mesh& mesh, const ScalarField& g) {
    require_size(mesh, g, "source");
    std::vector<double> ge(mesh.n_elements());
    const int nv = mesh.verts_per_element();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        double s = 0.0;
        for (int a = 0; a < nv; ++a) s += g[mesh.elements[e][a]];
        ge[e] = s / nv;
    }
    return element_load(mesh, ge);
}

ScalarField element_load(const Mesh& mesh, const std::vector<double>& g_elem) {
    if (g_elem.size() != mesh.n_elements()) throw InvalidArgument("element source size mismatch");
    ScalarField b(mesh.n_nodes(), 0.0);
    const int nv = mesh.verts_per_element();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const double share = mesh.measure[e] * g_elem[e] / nv;
        for (int a = 0; a < nv; ++a) b[mesh.elements[e][a]] += share;
    }
    for (std::size_t k = 0; k < b.size(); ++k)
        if (mesh.boundary[k]) b[k] = 0.0;
    return b;
}

ScalarField apply_plap(const Mesh& mesh, double p, const ScalarField& u) {
    require_p(p);
    require_size(mesh, u, "field");
    ScalarField a(mesh.n_nodes(), 0.0);
    const int nv = mesh.verts_per_element();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point g = element_gradient(mesh, e, u);
        const double n2 = g.x * g.x + g.y * g.y;
        if (n2 == 0.0) continue;
        const double coef = mesh.measure[e] * std::pow(n2, 0.5 * (p - 2.0));
        for (int a_ = 0; a_ < nv; ++a_) {
            const Point& ga = mesh.grad[e][a_];
            a[mesh.elements[e][a_]] += coef * (g.x * ga.x + g.y * ga.y);
        }
    }
    for (std::size_t k = 0; k < a.size(); ++k)
        if (mesh.boundary[k]) a[k] = 0.0;
    return a;
}

ScalarField residual_with_load(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& load) {
    require_size(mesh, load, "load");
    ScalarField r = apply_plap(mesh, p, u);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = mesh.boundary[k] ? 0.0 : r[k] - load[k];
    return r;
}

ScalarField assemble_residual(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& g) {
    require_p(p);
    return residual_with_load(mesh, p, u, nodal_load(mesh, g));
}

double gradient_power_integral(const Mesh& mesh, double p, const ScalarField& u) {
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point g = element_gradient(mesh, e, u);
        s += mesh.measure[e] * std::pow(g.x * g.x + g.y * g.y, 0.5 * p);
    }
    return s;
}

double energy_with_load(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& load) {
    require_p(p);
    require_size(mesh, u, "field");
    double work = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (!mesh.boundary[k]) work += load[k] * u[k];
    return gradient_power_integral(mesh, p, u) / p - work;
}

double energy(const Mesh& mesh, double p, const ScalarField& u, const ScalarField& g) {
    return energy_with_load(mesh, p, u, nodal_load(mesh, g));
}

double jacobian_floor(const Mesh& mesh, const ScalarField& u, const SolverOpts& opts) {
    return std::max(opts.jacobian_floor_rel * max_gradient(mesh, u), opts.jacobian_floor_min);
}

Eigen::SparseMatrix<double> plap_tangent(const Mesh& mesh, double p, const ScalarField& u, double kappa) {
    std::vector<Eigen::Triplet<double>> trip;
    const int nv = mesh.verts_per_element();
    trip.reserve(mesh.n_elements() * nv * nv);
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        const Point g = element_gradient(mesh, e, u);
        const double w = g.x * g.x + g.y * g.y + kappa * kappa;
        const double c0 = std::pow(w, 0.5 * (p - 2.0));
        const double c1 = (p - 2.0) * std::pow(w, 0.5 * (p - 4.0));
        for (int a = 0; a < nv; ++a) {
            const int ia = mesh.dof[mesh.elements[e][a]];
            if (ia < 0) continue;
            const Point& ga = mesh.grad[e][a];
            const double gga = g.x * ga.x + g.y * ga.y;
            for (int b = 0; b < nv; ++b) {
                const int ib = mesh.dof[mesh.elements[e][b]];
                if (ib < 0) continue;
                const Point& gb = mesh.grad[e][b];
                const double ggb = g.x * gb.x + g.y * gb.y;
                trip.emplace_back(ia, ib, mesh.measure[e] * (c0 * (ga.x * gb.x + ga.y * gb.y) + c1 * gga * ggb));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.n_interior());
    Eigen::SparseMatrix<double> J(n, n);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

namespace {

/// Linear (p = 2) solve scaled along its ray to minimise the p-energy.
ScalarField initial_guess(const Mesh& mesh, double p, const ScalarField& load) {
    ScalarField zero(mesh.n_nodes(), 0.0);
    Eigen::SparseMatrix<double> L = frozen_matrix(mesh, 2.0, zero, 1.0);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(L);
    const Eigen::VectorXd x = ldlt.solve(to_eigen(interior_values(mesh, load)));
    ScalarField v(mesh.n_nodes(), 0.0);
    for (std::size_t k = 0; k < mesh.n_interior(); ++k) v[mesh.node_of_dof[k]] = x[static_cast<Eigen::Index>(k)];
    const double A = gradient_power_integral(mesh, p, v);
    double B = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) B += load[k] * v[k];
    if (!(A > 0.0) || B == 0.0) return v;
    const double t = std::copysign(std::pow(std::fabs(B) / A, 1.0 / (p - 1.0)), B);
    for (double& x_ : v) x_ *= t;
    return v;
}

void add_interior(const Mesh& mesh, const ScalarField& u, double t, const Eigen::VectorXd& d, ScalarField& out) {
    out = u;
    for (std::size_t k = 0; k < mesh.n_interior(); ++k)
        out[mesh.node_of_dof[k]] += t * d[static_cast<Eigen::Index>(k)];
}

}  // namespace

ScalarField solve_dirichlet_load(const Mesh& mesh, double p, const ScalarField& load, const SolverOpts& opts,
                                 const ScalarField* init, SolveStats* stats) {
    require_p(p);
    validate(opts);
    require_size(mesh, load, "load");
    ScalarField u = init != nullptr ? *init : initial_guess(mesh, p, load);
    require_size(mesh, u, "initial guess");
    for (std::size_t k = 0; k < u.size(); ++k)
        if (mesh.boundary[k]) u[k] = 0.0;

    SolveStats st;
    ScalarField r = residual_with_load(mesh, p, u, load);
    double nr = dual_norm(mesh, r);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool pattern_ready = false;
    ScalarField trial;
    int picard_left = opts.max_picard_iters;

    while (nr > opts.tol_residual) {
        if (st.newton_iters >= opts.max_newton_iters) break;
        ++st.newton_iters;
        const double kappa = jacobian_floor(mesh, u, opts);
        const Eigen::SparseMatrix<double> J = plap_tangent(mesh, p, u, kappa);
        if (!pattern_ready) {
            ldlt.analyzePattern(J);
            pattern_ready = true;
        }
        ldlt.factorize(J);
        const Eigen::VectorXd ri = to_eigen(interior_values(mesh, r));
        bool accepted = false;
        if (ldlt.info() == Eigen::Success) {
            const Eigen::VectorXd d = ldlt.solve(-ri);
            const double slope = ri.dot(d);
            const double e0 = energy_with_load(mesh, p, u, load);
            // Decrease of the residual norm first: for p < 2 full steps flip near-zero
            // gradients and the energy test alone accepts that oscillation. Armijo on the
            // energy is the second choice.
            for (int pass = 0; pass < 2 && !accepted; ++pass) {
                for (double t = 1.0; t > 1e-10; t *= opts.line_search_shrink) {
                    add_interior(mesh, u, t, d, trial);
                    const bool ok = pass == 1
                                        ? energy_with_load(mesh, p, trial, load) <= e0 + 1e-4 * t * slope
                                        : dual_norm(mesh, residual_with_load(mesh, p, trial, load)) <
                                              (1.0 - 1e-4 * t) * nr;
                    if (ok) {
                        accepted = true;
                        break;
                    }
                }
            }
        }
        if (!accepted) {
            // Picard fallback: p = 2 problem with the coefficient frozen at u.
            if (picard_left-- <= 0) break;
            ++st.picard_iters;
            Eigen::SparseMatrix<double> A = frozen_matrix(mesh, p, u, kappa);
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> frozen(A);
            const Eigen::VectorXd x = frozen.solve(to_eigen(interior_values(mesh, load)));
            Eigen::VectorXd d(x.size());
            for (std::size_t k = 0; k < mesh.n_interior(); ++k)
                d[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(k)] - u[mesh.node_of_dof[k]];
            add_interior(mesh, u, 1.0, d, trial);
        }
        u.swap(trial);
        r = residual_with_load(mesh, p, u, load);
        nr = dual_norm(mesh, r);
        if (!std::isfinite(nr)) break;
    }
    st.residual = nr;
    if (stats != nullptr) *stats = st;
    if (!(nr <= opts.tol_residual))
        throw ConvergenceFailure("p-Laplacian Dirichlet solve did not converge (residual " + format_double(nr) +
                                     ")",
                                 nr, u);
    return u;
}

ScalarField solve_dirichlet(const Mesh& mesh, double p, const ScalarField& g, const SolverOpts& opts) {
    require_p(p);
    return solve_dirichlet_load(mesh, p, nodal_load(mesh, g), opts);
}

}  // namespace lab

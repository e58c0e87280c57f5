#include "lab/eigenpair.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lab/errors.hpp"
#include "lab/output.hpp"

namespace lab {

namespace {

std::vector<double> centroid_values(const Mesh& mesh, const ScalarField& v) {
    std::vector<double> out(mesh.n_elements());
    const int nv = mesh.verts_per_element();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        double s = 0.0;
        for (int a = 0; a < nv; ++a) s += v[mesh.elements[e][a]];
        out[e] = s / nv;
    }
    return out;
}

}  // namespace

EigenOpts default_eigen_opts(int dim) {
    EigenOpts o;
    o.inner = default_solver_opts(dim);
    return o;
}

double rayleigh_quotient(const Mesh& mesh, double p, const ScalarField& v) {
    const std::vector<double> vc = centroid_values(mesh, v);
    double den = 0.0;
    for (std::size_t e = 0; e < vc.size(); ++e) den += mesh.measure[e] * std::pow(std::fabs(vc[e]), p);
    if (!(den > 0.0)) throw InvalidArgument("Rayleigh quotient of the zero field");
    return gradient_power_integral(mesh, p, v) / den;
}

Eigenpair principal_eigenpair(const Mesh& mesh, double p, const SolverOpts& opts) {
    EigenOpts eo = default_eigen_opts(mesh.dim);
    eo.inner = opts;
    return principal_eigenpair(mesh, p, eo);
}

Eigenpair principal_eigenpair(const Mesh& mesh, double p, const EigenOpts& opts) {
    if (!(p > 1.0)) throw InvalidArgument("p must exceed 1, got " + format_double(p));
    validate(opts.inner);

    ScalarField phi = solve_dirichlet(mesh, p, ScalarField(mesh.n_nodes(), 1.0), opts.inner);
    const double m0 = *std::max_element(phi.begin(), phi.end());
    for (double& v : phi) v /= m0;
    double lambda = rayleigh_quotient(mesh, p, phi);

    SolverOpts inner = opts.inner;
    for (int it = 1; it <= opts.max_iters; ++it) {
        std::vector<double> src = centroid_values(mesh, phi);
        for (double& s : src) s = lambda * std::pow(std::fabs(s), p - 2.0) * s;
        const ScalarField load = element_load(mesh, src);
        // inner solves must be much tighter than the eigenfunction tolerance
        inner.tol_residual = std::min(opts.inner.tol_residual, 1e-12 * std::max(1.0, dual_norm(mesh, load)));
        ScalarField w;
        try {
            w = solve_dirichlet_load(mesh, p, load, inner, &phi);
        } catch (const ConvergenceFailure& e) {
            throw ConvergenceFailure(std::string("eigen inverse iteration: ") + e.what(), e.residual(), phi,
                                     lambda);
        }
        const double wmax = *std::max_element(w.begin(), w.end());
        double change = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] /= wmax;
            change = std::max(change, std::fabs(w[k] - phi[k]));
        }
        const double lambda_new = rayleigh_quotient(mesh, p, w);
        const double rel = std::fabs(lambda_new - lambda) / lambda;
        phi.swap(w);
        lambda = lambda_new;
        if (rel < opts.lambda_rel_tol && change < opts.phi_tol) {
            Eigenpair ep;
            ep.p = p;
            ep.lambda = lambda;
            ep.phi = std::move(phi);
            ep.c0 = comparability_constant(ep.phi, distance_field(mesh));
            ep.iterations = it;
            return ep;
        }
    }
    throw ConvergenceFailure("eigen inverse iteration exhausted its budget", 0.0, phi, lambda);
}

double comparability_constant(const ScalarField& phi, const DistanceField& d) {
    if (phi.size() != d.values.size()) throw InvalidArgument("field sizes differ");
    double c = 1.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        if (!(d.values[k] > 0.0)) continue;
        if (!(phi[k] > 0.0))
            throw InvalidArgument("eigenfunction is not positive at interior node " + std::to_string(k));
        c = std::max({c, phi[k] / d.values[k], d.values[k] / phi[k]});
    }
    return c;
}

double interval_eigenvalue(double p) {
    const double pi_p = 2.0 * std::numbers::pi / (p * std::sin(std::numbers::pi / p));
    return (p - 1.0) * std::pow(pi_p, p);
}

}  // namespace lab

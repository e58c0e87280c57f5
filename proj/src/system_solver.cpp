#include "lab/system_solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lab/kernels.hpp"
#include "lab/output.hpp"
#include "lab/quadrature.hpp"

namespace lab {

std::string to_string(BoxKind b) {
    switch (b) {
        case BoxKind::positive: return "positive";
        case BoxKind::negative: return "negative";
        case BoxKind::nodal: return "nodal";
    }
    return "?";
}

BoxKind parse_box_kind(const std::string& s) {
    if (s == "positive") return BoxKind::positive;
    if (s == "negative") return BoxKind::negative;
    if (s == "nodal") return BoxKind::nodal;
    throw InvalidArgument("unknown branch '" + s + "' (expected positive, negative or nodal)");
}

std::string to_string(SignKind k) {
    switch (k) {
        case SignKind::positive: return "positive";
        case SignKind::negative: return "negative";
        case SignKind::nodal_synchronized: return "nodal_synchronized";
        case SignKind::nodal_other: return "nodal_other";
        case SignKind::degenerate: return "degenerate";
    }
    return "?";
}

Box make_box(BoxKind kind, const BarrierSet& b) {
    Box box;
    box.kind = kind;
    for (int i = 0; i < 2; ++i) {
        const std::size_t n = b.u_lo[i].size();
        box.lo[i].resize(n);
        box.hi[i].resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            switch (kind) {
                case BoxKind::positive:
                    box.lo[i][k] = b.u_lo[i][k];
                    box.hi[i][k] = b.u_hi[i][k];
                    break;
                case BoxKind::negative:
                    box.lo[i][k] = -b.u_hi[i][k];
                    box.hi[i][k] = -b.u_lo[i][k];
                    break;
                case BoxKind::nodal:
                    box.lo[i][k] = -b.u_lo[i][k];
                    box.hi[i][k] = b.u_lo[i][k];
                    break;
            }
        }
    }
    return box;
}

bool inside(const Box& box, const FieldPair& u, double tol) {
    for (int i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < u[i].size(); ++k)
            if (u[i][k] < box.lo[i][k] - tol || u[i][k] > box.hi[i][k] + tol) return false;
    return true;
}

double SolutionPair::residual_norm() const { return std::hypot(residual[0], residual[1]); }

SystemOpts default_system_opts(int dim) {
    SystemOpts o;
    o.scalar = default_solver_opts(dim);
    o.accept_tol = dim == 1 ? 1e-6 : 1e-4;
    o.target_tol = dim == 1 ? 1e-11 : 1e-9;
    return o;
}

SystemConvergenceFailure::SystemConvergenceFailure(const std::string& what, SolutionPair best)
    : ConvergenceFailure(what, best.residual_norm(), best.u1), best_(std::move(best)) {}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Local = std::array<std::array<double, 3>, 2>;

/// Assembles the reaction load of the coupled system with a frozen sign pattern.
class Assembler {
public:
    Assembler(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers, double eps)
        : mesh_(mesh), model_(model), barriers_(barriers), eps_(eps), n_(mesh.n_interior()) {}

    std::size_t size() const { return 2 * n_; }
    const Mesh& mesh() const { return mesh_; }

    /// load: full node vectors; du, dpsi: derivatives w.r.t. interior values (2N x 2N).
    void assemble(const FieldPair& u, const FieldPair& psi, FieldPair& load, SpMat* du, SpMat* dpsi) const {
        const int nv = mesh_.verts_per_element();
        for (int i = 0; i < 2; ++i) load[i].assign(mesh_.n_nodes(), 0.0);
        std::vector<Eigen::Triplet<double>> tu, tp;
        std::vector<SignedPiece> pieces;
        for (std::size_t e = 0; e < mesh_.n_elements(); ++e) {
            Local ul{}, pl{};
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a < nv; ++a) {
                    ul[k][a] = u[k][mesh_.elements[e][a]];
                    pl[k][a] = psi[k][mesh_.elements[e][a]];
                }
            Local out{};
            double jac[2][3][2][3] = {};
            element(e, ul, pl, out, du != nullptr ? jac : nullptr, pieces);
            for (int i = 0; i < 2; ++i)
                for (int a = 0; a < nv; ++a) load[i][mesh_.elements[e][a]] += out[i][a];
            if (du != nullptr) {
                for (int i = 0; i < 2; ++i)
                    for (int a = 0; a < nv; ++a) {
                        const int r = index(i, e, a);
                        if (r < 0) continue;
                        for (int k = 0; k < 2; ++k)
                            for (int b = 0; b < nv; ++b) {
                                const int c = index(k, e, b);
                                if (c >= 0 && jac[i][a][k][b] != 0.0) tu.emplace_back(r, c, jac[i][a][k][b]);
                            }
                    }
            }
            if (dpsi != nullptr) pattern_derivative(e, ul, pl, tp, pieces);
        }
        for (int i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < mesh_.n_nodes(); ++k)
                if (mesh_.boundary[k]) load[i][k] = 0.0;
        const auto n = static_cast<Eigen::Index>(size());
        if (du != nullptr) {
            du->resize(n, n);
            du->setFromTriplets(tu.begin(), tu.end());
        }
        if (dpsi != nullptr) {
            dpsi->resize(n, n);
            dpsi->setFromTriplets(tp.begin(), tp.end());
        }
    }

    int index(int comp, std::size_t e, int a) const {
        const int d = mesh_.dof[mesh_.elements[e][a]];
        return d < 0 ? -1 : comp * static_cast<int>(n_) + d;
    }

private:
    /// Truncated argument with the piece sign frozen: the value is pushed to the
    /// pattern's side of zero so reactions stay bounded by the regularization.
    void truncated(double uq, double ubar, int sign, double& T, double& dT) const {
        if (eps_ == 0.0) {
            T = uq;
            dT = 1.0;
            return;
        }
        const double c = std::clamp(uq, -ubar, ubar);
        const double dc = std::fabs(uq) < ubar ? 1.0 : 0.0;
        if (sign > 0) {
            T = std::max(c, 0.0) + 1.5 * eps_;
            dT = c > 0.0 ? dc : 0.0;
        } else if (sign < 0) {
            T = std::min(c, 0.0) - 0.5 * eps_;
            dT = c < 0.0 ? dc : 0.0;
        } else {
            T = c + 0.5 * eps_;
            dT = dc;
        }
    }

    void element(std::size_t e, const Local& u, const Local& psi, Local& out, double (*jac)[3][2][3],
                 std::vector<SignedPiece>& pieces) const {
        const int nv = mesh_.verts_per_element();
        split_element(mesh_, e, psi[0].data(), psi[1].data(), pieces);
        for (const SignedPiece& piece : pieces) {
            for (const QuadPoint& q : piece.points) {
                const Point x = mesh_.point_at(e, q.bary);
                double T[2], dT[2];
                for (int k = 0; k < 2; ++k) {
                    double uq = 0.0, ubar = 0.0;
                    for (int a = 0; a < nv; ++a) {
                        uq += q.bary[a] * u[k][a];
                        ubar += q.bary[a] * barriers_.u_hi[k][mesh_.elements[e][a]];
                    }
                    truncated(uq, ubar, piece.sign[k], T[k], dT[k]);
                }
                double F[2];
                for (int i = 0; i < 2; ++i) F[i] = model_.eval(i, x, T[0], T[1]);
                for (int i = 0; i < 2; ++i)
                    for (int a = 0; a < nv; ++a) out[i][a] += q.weight * F[i] * q.bary[a];
                if (jac == nullptr) continue;
                for (int k = 0; k < 2; ++k) {
                    if (dT[k] == 0.0 || T[k] == 0.0) continue;
                    const double h = 1e-6 * std::fabs(T[k]);
                    double Tp[2] = {T[0], T[1]}, Tm[2] = {T[0], T[1]};
                    Tp[k] += h;
                    Tm[k] -= h;
                    for (int i = 0; i < 2; ++i) {
                        const double dF = (model_.eval(i, x, Tp[0], Tp[1]) - model_.eval(i, x, Tm[0], Tm[1])) / (2 * h);
                        const double s = q.weight * dF * dT[k];
                        for (int a = 0; a < nv; ++a)
                            for (int b = 0; b < nv; ++b) jac[i][a][k][b] += s * q.bary[a] * q.bary[b];
                    }
                }
            }
        }
    }

    /// Central differences of the element load w.r.t. the pattern values that
    /// position the zero crossings inside the element.
    void pattern_derivative(std::size_t e, const Local& u, const Local& psi, std::vector<Eigen::Triplet<double>>& trip,
                            std::vector<SignedPiece>& pieces) const {
        const int nv = mesh_.verts_per_element();
        for (int k = 0; k < 2; ++k) {
            if (!changes_sign(psi[k].data(), nv)) continue;
            for (int b = 0; b < nv; ++b) {
                const int c = index(k, e, b);
                if (c < 0 || psi[k][b] == 0.0) continue;
                const double h = 1e-7 * std::fabs(psi[k][b]);
                Local pp = psi, pm = psi, lp{}, lm{};
                pp[k][b] += h;
                pm[k][b] -= h;
                element(e, u, pp, lp, nullptr, pieces);
                element(e, u, pm, lm, nullptr, pieces);
                for (int i = 0; i < 2; ++i)
                    for (int a = 0; a < nv; ++a) {
                        const int r = index(i, e, a);
                        const double v = (lp[i][a] - lm[i][a]) / (2 * h);
                        if (r >= 0 && v != 0.0) trip.emplace_back(r, c, v);
                    }
            }
        }
    }

    const Mesh& mesh_;
    const ModelParams& model_;
    const BarrierSet& barriers_;
    double eps_;
    std::size_t n_;
};

Vec pack(const Mesh& mesh, const FieldPair& f) {
    const std::size_t n = mesh.n_interior();
    Vec v(static_cast<Eigen::Index>(2 * n));
    for (int i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < n; ++k) v[static_cast<Eigen::Index>(i * n + k)] = f[i][mesh.node_of_dof[k]];
    return v;
}

void unpack_into(const Mesh& mesh, const Vec& v, FieldPair& f) {
    const std::size_t n = mesh.n_interior();
    for (int i = 0; i < 2; ++i) {
        f[i].assign(mesh.n_nodes(), 0.0);
        for (std::size_t k = 0; k < n; ++k) f[i][mesh.node_of_dof[k]] = v[static_cast<Eigen::Index>(i * n + k)];
    }
}

double scaled_norm(const Mesh& mesh, const Vec& v) {
    return std::sqrt(kernels::sum_squares(v.data(), static_cast<std::size_t>(v.size()))) *
           std::pow(mesh.h, 0.5 * mesh.dim);
}

void project(const Box& box, FieldPair& u) {
    for (int i = 0; i < 2; ++i) kernels::clamp(u[i].data(), box.lo[i].data(), box.hi[i].data(), u[i].size());
}

/// Residual (interior, packed) of the system with pattern psi.
Vec frozen_residual(const Assembler& as, const ModelParams& model, const FieldPair& u, const FieldPair& psi,
                    SpMat* du = nullptr, SpMat* dpsi = nullptr) {
    FieldPair load;
    as.assemble(u, psi, load, du, dpsi);
    FieldPair r;
    for (int i = 0; i < 2; ++i) r[i] = residual_with_load(as.mesh(), model.p[i], u[i], load[i]);
    return pack(as.mesh(), r);
}

SpMat principal_tangent(const Mesh& mesh, const ModelParams& model, const FieldPair& u, const SolverOpts& so) {
    const auto n = static_cast<Eigen::Index>(mesh.n_interior());
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < 2; ++i) {
        const SpMat T = plap_tangent(mesh, model.p[i], u[i], jacobian_floor(mesh, u[i], so));
        for (int c = 0; c < T.outerSize(); ++c)
            for (SpMat::InnerIterator it(T, c); it; ++it) trip.emplace_back(it.row() + i * n, it.col() + i * n, it.value());
    }
    SpMat J(2 * n, 2 * n);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

/// Marks bound constraints that are active: at the lower bound with the residual
/// pushing down, or at the upper bound with the residual pushing up.
std::vector<char> active_set(const Mesh& mesh, const Box& box, const FieldPair& u, const Vec& r) {
    const std::size_t n = mesh.n_interior();
    std::vector<char> act(2 * n, 0);
    for (int i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const int node = mesh.node_of_dof[k];
            const double rv = r[static_cast<Eigen::Index>(i * n + k)];
            if ((u[i][node] <= box.lo[i][node] && rv > 0.0) || (u[i][node] >= box.hi[i][node] && rv < 0.0))
                act[i * n + k] = 1;
        }
    return act;
}

Vec masked(const Vec& r, const std::vector<char>& act) {
    Vec out = r;
    for (Eigen::Index k = 0; k < out.size(); ++k)
        if (act[static_cast<std::size_t>(k)]) out[k] = 0.0;
    return out;
}

SpMat with_identity_rows(const SpMat& J, const std::vector<char>& act) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < J.outerSize(); ++c)
        for (SpMat::InnerIterator it(J, c); it; ++it)
            if (!act[static_cast<std::size_t>(it.row())]) trip.emplace_back(it.row(), it.col(), it.value());
    for (std::size_t k = 0; k < act.size(); ++k)
        if (act[k]) trip.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
    SpMat A(J.rows(), J.cols());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

bool lu_solve(const SpMat& A, const Vec& b, Vec& x) {
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) return false;
    x = lu.solve(b);
    return lu.info() == Eigen::Success && x.allFinite();
}

struct Context {
    const Mesh& mesh;
    const ModelParams& model;
    const Assembler& as;
    const Box& box;
    const SystemOpts& opts;
};

/// Projected Newton for the system with the sign pattern frozen at psi.
FieldPair frozen_solve(const Context& cx, const FieldPair& psi, FieldPair u, double tol, int* iters) {
    project(cx.box, u);
    Vec r = frozen_residual(cx.as, cx.model, u, psi);
    std::vector<char> act = active_set(cx.mesh, cx.box, u, r);
    double nr = scaled_norm(cx.mesh, masked(r, act));
    FieldPair trial;
    for (int it = 0; it < cx.opts.max_inner_iters && nr > tol; ++it) {
        SpMat du;
        frozen_residual(cx.as, cx.model, u, psi, &du);
        const SpMat J = with_identity_rows(principal_tangent(cx.mesh, cx.model, u, cx.opts.scalar) - du, act);
        Vec d;
        if (!lu_solve(J, -masked(r, act), d)) break;
        FieldPair step;
        unpack_into(cx.mesh, d, step);
        bool accepted = false;
        for (double t = 1.0; t > 1e-8; t *= 0.5) {
            trial = u;
            for (int i = 0; i < 2; ++i) kernels::axpy(t, step[i].data(), trial[i].data(), trial[i].size());
            project(cx.box, trial);
            const Vec rt = frozen_residual(cx.as, cx.model, trial, psi);
            const std::vector<char> at = active_set(cx.mesh, cx.box, trial, rt);
            const double nt = scaled_norm(cx.mesh, masked(rt, at));
            if (nt < (1.0 - 1e-4 * t) * nr) {
                u.swap(trial);
                r = rt;
                act = at;
                nr = nt;
                accepted = true;
                break;
            }
        }
        if (iters != nullptr) ++*iters;
        if (!accepted) break;
    }
    return u;
}

std::array<double, 2> component_norms(const Mesh& mesh, const FieldPair& r) {
    return {dual_norm(mesh, r[0]), dual_norm(mesh, r[1])};
}

}  // namespace

FieldPair system_residual(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers, double eps,
                          const FieldPair& u) {
    Assembler as(mesh, model, barriers, eps);
    FieldPair load;
    as.assemble(u, u, load, nullptr, nullptr);
    FieldPair r;
    for (int i = 0; i < 2; ++i) r[i] = residual_with_load(mesh, model.p[i], u[i], load[i]);
    return r;
}

SolutionPair solve_regularized(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                               const std::array<Eigenpair, 2>& eig, double eps, BoxKind box_kind,
                               const SolutionPair& init, const SystemOpts& opts) {
    (void)eig;
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("eps must lie in (0,1), got " + format_double(eps));
    if (init.u1.size() != mesh.n_nodes() || init.u2.size() != mesh.n_nodes())
        throw InvalidArgument("initial pair does not match the mesh");
    const Box box = make_box(box_kind, barriers);
    FieldPair u = init.fields();
    if (!inside(box, u, 1e-12)) throw InvalidArgument("initial pair lies outside the " + to_string(box_kind) + " box");
    project(box, u);

    const Assembler as(mesh, model, barriers, eps);
    const Context cx{mesh, model, as, box, opts};
    auto true_norm = [&](const FieldPair& v) { return scaled_norm(mesh, frozen_residual(as, model, v, v)); };

    SolutionPair out;
    out.eps = eps;
    out.box = box_kind;

    // Phase 1: Gauss-Seidel Picard sweeps of the fixed-point form, clamped to the box.
    FieldPair best = u;
    double best_r = true_norm(u);
    std::vector<double> updates;
    for (int sweep = 0; sweep < opts.max_picard_sweeps && best_r > opts.target_tol; ++sweep) {
        double upd = 0.0;
        bool ok = true;
        for (int i = 0; i < 2 && ok; ++i) {
            FieldPair load;
            as.assemble(u, u, load, nullptr, nullptr);
            try {
                ScalarField next = solve_dirichlet_load(mesh, model.p[i], load[i], opts.scalar, &u[i]);
                kernels::clamp(next.data(), box.lo[i].data(), box.hi[i].data(), next.size());
                for (std::size_t k = 0; k < next.size(); ++k) upd = std::max(upd, std::fabs(next[k] - u[i][k]));
                u[i].swap(next);
            } catch (const ConvergenceFailure&) {
                ok = false;
            }
        }
        ++out.picard_sweeps;
        if (!ok) break;
        const double r = true_norm(u);
        if (r < best_r) {
            best_r = r;
            best = u;
        }
        updates.push_back(upd);
        if (upd < opts.tol_outer) break;
        const std::size_t w = static_cast<std::size_t>(opts.stall_window);
        if (updates.size() > w && upd >= updates[updates.size() - 1 - w]) break;
    }

    // Phase 2: residual minimization by Newton on the pattern equation psi = G(psi),
    // where G solves the system with the sign pattern of psi frozen. It starts from
    // the best Picard iterate; when Picard has pinned the pair to the box without
    // solving the system (typical inside the nodal box), it restarts from init.
    auto newton_phase = [&](FieldPair psi) {
        int inner = 0;
        FieldPair g = frozen_solve(cx, psi, psi, 0.1 * opts.target_tol, &inner);
        for (int it = 0; it < opts.max_newton_iters; ++it) {
            const double r = true_norm(g);
            if (r < best_r) {
                best_r = r;
                best = g;
            }
            if (r <= opts.target_tol) return;
            const Vec F = pack(mesh, psi) - pack(mesh, g);
            const double nF = scaled_norm(mesh, F);
            if (!(nF > 0.0)) return;
            ++out.newton_iters;
            SpMat du, dpsi;
            const Vec rg = frozen_residual(as, model, g, psi, &du, &dpsi);
            const SpMat Jf = principal_tangent(mesh, model, g, opts.scalar) - du;
            const std::vector<char> act = active_set(mesh, box, g, rg);
            const SpMat M = with_identity_rows(Jf - dpsi, act);
            Vec rhs = -(Jf * F);
            for (std::size_t k = 0; k < act.size(); ++k)
                if (act[k]) rhs[static_cast<Eigen::Index>(k)] = 0.0;
            Vec dpsi_v;
            if (!lu_solve(M, rhs, dpsi_v)) return;
            FieldPair step;
            unpack_into(mesh, dpsi_v, step);
            bool accepted = false;
            for (double t = 1.0; t > 1e-6; t *= 0.5) {
                FieldPair pt = psi, warm = g;
                for (int i = 0; i < 2; ++i) {
                    kernels::axpy(t, step[i].data(), pt[i].data(), pt[i].size());
                    kernels::axpy(t, step[i].data(), warm[i].data(), warm[i].size());
                }
                project(box, pt);
                FieldPair gt = frozen_solve(cx, pt, warm, 0.1 * opts.target_tol, &inner);
                const double nt = scaled_norm(mesh, pack(mesh, pt) - pack(mesh, gt));
                if (nt < (1.0 - 1e-4 * t) * nF) {
                    psi.swap(pt);
                    g.swap(gt);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                const double rl = true_norm(g);
                if (rl < best_r) {
                    best_r = rl;
                    best = g;
                }
                return;
            }
        }
    };
    if (best_r > opts.target_tol) newton_phase(best);
    if (best_r > opts.accept_tol) {
        FieldPair start = init.fields();
        project(box, start);
        newton_phase(std::move(start));
    }

    out.u1 = best[0];
    out.u2 = best[1];
    out.residual = component_norms(mesh, system_residual(mesh, model, barriers, eps, best));
    if (!(out.residual_norm() <= opts.accept_tol))
        throw SystemConvergenceFailure("regularized system (eps = " + format_double(eps) + ", " +
                                           to_string(box_kind) + " box) stalled at residual " +
                                           format_double(out.residual_norm()),
                                       out);
    return out;
}

double guarded_residual(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                        const FieldPair& u, double guard, double* fraction) {
    const FieldPair r = system_residual(mesh, model, barriers, 0.0, u);
    double s = 0.0;
    std::size_t kept = 0;
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        if (mesh.boundary[k] || std::min(std::fabs(u[0][k]), std::fabs(u[1][k])) < guard) continue;
        ++kept;
        s += r[0][k] * r[0][k] + r[1][k] * r[1][k];
    }
    if (fraction != nullptr) *fraction = double(kept) / double(mesh.n_interior());
    if (kept == 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(s) * std::pow(mesh.h, 0.5 * mesh.dim);
}

double w1p_distance(const Mesh& mesh, const std::array<double, 2>& p, const FieldPair& a, const FieldPair& b) {
    double total = 0.0;
    for (int i = 0; i < 2; ++i) {
        ScalarField e(mesh.n_nodes());
        for (std::size_t k = 0; k < e.size(); ++k) e[k] = a[i][k] - b[i][k];
        double lp = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k) lp += mesh.lumped[k] * std::pow(std::fabs(e[k]), p[i]);
        total += std::pow(gradient_power_integral(mesh, p[i], e) + lp, 1.0 / p[i]);
    }
    return total;
}

bool ContinuationDiagnostics::gaps_decreasing() const {
    for (std::size_t k = 1; k < cauchy_gaps.size(); ++k)
        if (!(cauchy_gaps[k] < cauchy_gaps[k - 1])) return false;
    return true;
}

namespace {

SolutionPair constant_seed(const Mesh& mesh, const BarrierSet& b, double sign) {
    SolutionPair s;
    s.u1 = b.u_lo[0];
    s.u2 = b.u_lo[1];
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        s.u1[k] *= sign;
        s.u2[k] *= sign;
    }
    return s;
}

SolutionPair nodal_seed(const Mesh& mesh, const BarrierSet& b, int mode, double amplitude) {
    SolutionPair s;
    s.u1.assign(mesh.n_nodes(), 0.0);
    s.u2.assign(mesh.n_nodes(), 0.0);
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        const Point& x = mesh.nodes[k];
        double w = std::sin(mode * std::numbers::pi * x.x);
        if (mesh.dim == 2) w *= std::sin(std::numbers::pi * x.y);
        s.u1[k] = amplitude * b.u_lo[0][k] * w;
        s.u2[k] = amplitude * b.u_lo[1][k] * w;
    }
    return s;
}

void record_diagnostics(const Mesh& mesh, const ModelParams& model, SolutionBranch& br) {
    auto& dg = br.diagnostics;
    dg.cauchy_gaps.clear();
    dg.small_set_measure.clear();
    dg.min_abs_interior.clear();
    for (std::size_t r = 0; r < br.ladder.size(); ++r) {
        const FieldPair f = br.ladder[r].fields();
        if (r + 1 < br.ladder.size()) dg.cauchy_gaps.push_back(w1p_distance(mesh, model.p, f, br.ladder[r + 1].fields()));
        std::array<std::array<double, 3>, 2> ssm{};
        std::array<double, 2> mins{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        for (int i = 0; i < 2; ++i) {
            for (int m = 0; m < 3; ++m)
                for (std::size_t k = 0; k < mesh.n_nodes(); ++k)
                    if (std::fabs(f[i][k]) <= dg.mu[m]) ssm[i][m] += mesh.lumped[k];
            for (std::size_t k = 0; k < mesh.n_nodes(); ++k)
                if (!mesh.boundary[k]) mins[i] = std::min(mins[i], std::fabs(f[i][k]));
        }
        dg.small_set_measure.push_back(ssm);
        dg.min_abs_interior.push_back(mins);
    }
}

bool is_nodal(const Mesh& mesh, const SolutionPair& s, const BarrierSet& b, const SystemOpts& opts) {
    const SignClass sc = classify_solution(mesh, s, b, distance_field(mesh), opts.sign_tol_rel);
    return sc.kind == SignKind::nodal_synchronized || sc.kind == SignKind::nodal_other;
}

SolutionBranch run_ladder(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                          const std::array<Eigenpair, 2>& eig, BoxKind box, const std::vector<int>& ladder_ns,
                          const SystemOpts& opts, SolutionPair current) {
    SolutionBranch br;
    br.label = to_string(box);
    br.ladder_ns = ladder_ns;
    for (int n : ladder_ns) {
        try {
            current = solve_regularized(mesh, model, barriers, eig, 1.0 / n, box, current, opts);
        } catch (const SystemConvergenceFailure& e) {
            br.failed = true;
            br.failure = "rung eps = 1/" + std::to_string(n) + ": " + e.what();
            br.ladder.push_back(e.best());
            break;
        }
        br.ladder.push_back(current);
        if (box == BoxKind::nodal && !is_nodal(mesh, current, barriers, opts)) {
            br.failed = true;
            br.failure = "rung eps = 1/" + std::to_string(n) + " lost its sign changes";
            break;
        }
    }
    record_diagnostics(mesh, model, br);
    if (br.failed) {
        br.limit = br.ladder.back();
    } else {
        // Descend geometrically to the limit eps, then check the singular system.
        double eps = 1.0 / ladder_ns.back();
        while (eps > opts.limit_eps) {
            eps = std::max(eps * opts.limit_eps_ratio, opts.limit_eps);
            try {
                current = solve_regularized(mesh, model, barriers, eig, eps, box, current, opts);
            } catch (const SystemConvergenceFailure& e) {
                // keep the deepest converged iterate as the limit candidate
                br.failed = true;
                br.failure = "limit descent at eps = " + format_double(eps) + ": " + e.what();
                break;
            }
        }
        br.limit = current;
    }
    const double guard = opts.singular_guard_factor * mesh.h;
    double frac = 0.0;
    br.limit_residual = guarded_residual(mesh, model, barriers, br.limit.fields(), guard, &frac);
    br.limit.eps = 0.0;
    br.limit.guard_fraction = frac;
    br.limit.residual = {br.limit_residual, 0.0};
    {
        const FieldPair r = system_residual(mesh, model, barriers, 0.0, br.limit.fields());
        std::array<double, 2> s{};
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
            if (mesh.boundary[k] || std::min(std::fabs(br.limit.u1[k]), std::fabs(br.limit.u2[k])) < guard) continue;
            for (int i = 0; i < 2; ++i) s[i] += r[i][k] * r[i][k];
        }
        for (int i = 0; i < 2; ++i) br.limit.residual[i] = std::sqrt(s[i]) * std::pow(mesh.h, 0.5 * mesh.dim);
        if (frac == 0.0) br.limit.residual = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    if (!br.failed && !(br.limit_residual <= opts.limit_accept_tol)) {
        br.failed = true;
        br.failure = "singular-system residual of the limit " + format_double(br.limit_residual) +
                     " exceeds " + format_double(opts.limit_accept_tol);
    }
    if (!br.failed && box == BoxKind::nodal && !is_nodal(mesh, br.limit, barriers, opts)) {
        br.failed = true;
        br.failure = "limit is not nodal";
    }
    return br;
}

}  // namespace

SolutionBranch continuation(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                            const std::array<Eigenpair, 2>& eig, BoxKind box, const std::vector<int>& ladder_ns,
                            const SystemOpts& opts) {
    if (ladder_ns.empty()) throw InvalidArgument("ladder must not be empty");
    for (std::size_t k = 0; k < ladder_ns.size(); ++k) {
        if (ladder_ns[k] < 2) throw InvalidArgument("ladder entries must be at least 2 (eps = 1/n < 1)");
        if (k > 0 && ladder_ns[k] <= ladder_ns[k - 1]) throw InvalidArgument("ladder must be increasing");
    }
    if (box != BoxKind::nodal)
        return run_ladder(mesh, model, barriers, eig, box, ladder_ns, opts,
                          constant_seed(mesh, barriers, box == BoxKind::positive ? 1.0 : -1.0));

    SolutionBranch best;
    bool have = false;
    for (int mode : opts.nodal_modes) {
        SolutionBranch br = run_ladder(mesh, model, barriers, eig, box, ladder_ns, opts,
                                       nodal_seed(mesh, barriers, mode, opts.nodal_seed_amplitude));
        br.seed_mode = mode;
        if (!br.failed) return br;
        const auto progress = [](const SolutionBranch& b) {
            return std::make_pair(b.ladder.size(), -b.limit_residual);
        };
        if (!have || progress(br) > progress(best)) {
            best = std::move(br);
            have = true;
        }
    }
    best.failure = "no nodal seed converged; best attempt (mode " + std::to_string(best.seed_mode) +
                   "): " + best.failure;
    return best;
}

SignClass classify_solution(const Mesh& mesh, const SolutionPair& pair, const BarrierSet& barriers,
                            const DistanceField& d, double tol_rel) {
    SignClass sc;
    const FieldPair u = pair.fields();
    const double umax = std::max(kernels::max_abs(u[0].data(), u[0].size()), kernels::max_abs(u[1].data(), u[1].size()));
    sc.tol = tol_rel * umax;
    const double tol = sc.tol;
    bool pos = true, neg = true, degenerate = umax == 0.0;
    for (int i = 0; i < 2; ++i) {
        bool has_pos = false, has_neg = false;
        std::size_t small = 0;
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
            if (mesh.boundary[k]) continue;
            const double v = u[i][k];
            has_pos = has_pos || v > tol;
            has_neg = has_neg || v < -tol;
            if (std::fabs(v) <= tol) ++small;
            pos = pos && v >= barriers.u_lo[i][k] - tol;
            neg = neg && v <= -barriers.u_lo[i][k] + tol;
        }
        sc.changes_sign[i] = has_pos && has_neg;
        if (2 * small > mesh.n_interior()) degenerate = true;
    }
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) sc.sync_defect = std::max(sc.sync_defect, -u[0][k] * u[1][k]);
    if (degenerate)
        sc.kind = SignKind::degenerate;
    else if (pos)
        sc.kind = SignKind::positive;
    else if (neg)
        sc.kind = SignKind::negative;
    else if (sc.changes_sign[0] && sc.changes_sign[1] && sc.sync_defect <= tol)
        sc.kind = SignKind::nodal_synchronized;
    else
        sc.kind = SignKind::nodal_other;
    const double side = sc.kind == SignKind::negative ? -1.0 : 1.0;
    for (int i = 0; i < 2; ++i) {
        double weak = std::numeric_limits<double>::infinity(), strict = weak;
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
            if (mesh.boundary[k]) continue;
            const double m = side * u[i][k] - barriers.u_lo[i][k];
            weak = std::min(weak, m);
            strict = std::min(strict, m / d.values[k]);
        }
        sc.weak_margin[i] = weak;
        sc.strict_margin[i] = strict;
    }
    return sc;
}

OppositeSignCheck opposite_sign_detector(const Mesh& mesh, const ModelParams& model, const FieldPair& u) {
    OppositeSignCheck oc;
    auto sign_of = [&](const ScalarField& v) {
        bool p = false, n = false;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (mesh.boundary[k]) continue;
            p = p || v[k] > 0.0;
            n = n || v[k] < 0.0;
        }
        return p && !n ? 1 : (n && !p ? -1 : 0);
    };
    const int s1 = sign_of(u[0]), s2 = sign_of(u[1]);
    if (s1 == 0 || s2 == 0 || s1 == s2) return oc;
    oc.applicable = true;
    const int i = s1 < 0 ? 0 : 1;
    oc.component = i;
    ScalarField neg_part(mesh.n_nodes());
    for (std::size_t k = 0; k < neg_part.size(); ++k) neg_part[k] = std::max(-u[i][k], 0.0);
    oc.gradient_integral = gradient_power_integral(mesh, model.p[i], neg_part);
    // -int f_i(u1, u2) u_i^- with the sign-aware quadrature (no crossings here).
    double s = 0.0;
    std::vector<SignedPiece> pieces;
    const int nv = mesh.verts_per_element();
    for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
        double a[3], b[3];
        for (int v = 0; v < nv; ++v) {
            a[v] = u[0][mesh.elements[e][v]];
            b[v] = u[1][mesh.elements[e][v]];
        }
        split_element(mesh, e, a, b, pieces);
        for (const auto& pc : pieces)
            for (const auto& q : pc.points) {
                double q1 = 0.0, q2 = 0.0, qn = 0.0;
                for (int v = 0; v < nv; ++v) {
                    q1 += q.bary[v] * a[v];
                    q2 += q.bary[v] * b[v];
                    qn += q.bary[v] * neg_part[mesh.elements[e][v]];
                }
                if (q1 == 0.0 || q2 == 0.0) continue;
                s -= q.weight * model.eval(i, mesh.point_at(e, q.bary), q1, q2) * qn;
            }
    }
    oc.reaction_integral = s;
    oc.fires = oc.gradient_integral > 0.0 && oc.reaction_integral < 0.0;
    return oc;
}

}  // namespace lab

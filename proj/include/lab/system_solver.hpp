#pragma once
// Regularized coupled system solver, eps-continuation and sign classification.
//
// Discrete problem for eps in (0,1): for i = 1, 2 and every interior node j
//   sum_K |K| |grad u_i|^{p_i-2} grad u_i . grad phi_j
//     = sum_K sum_pieces w f_i(x, T_1(u_1), T_2(u_2)) phi_j(x),
// with T_k(u) = gamma_eps(u) + clamp(u, -u_hi_k, u_hi_k) and the sign-aware
// piecewise quadrature of quadrature.hpp.

#include <array>
#include <string>
#include <vector>

#include "lab/barriers.hpp"
#include "lab/eigenpair.hpp"
#include "lab/errors.hpp"
#include "lab/mesh.hpp"
#include "lab/model.hpp"
#include "lab/plap.hpp"

namespace lab {

using FieldPair = std::array<ScalarField, 2>;

enum class BoxKind { positive, negative, nodal };
std::string to_string(BoxKind b);
BoxKind parse_box_kind(const std::string& s);

/// Nodewise bounds: positive [u_lo, u_hi], negative [-u_hi, -u_lo], nodal [-u_lo, u_lo].
struct Box {
    BoxKind kind = BoxKind::positive;
    FieldPair lo, hi;
};
Box make_box(BoxKind kind, const BarrierSet& barriers);
bool inside(const Box& box, const FieldPair& u, double tol);

struct SolutionPair {
    ScalarField u1, u2;
    double eps = 0.0;                 ///< 0 marks the limit object
    std::array<double, 2> residual{}; ///< dual residual norms per component
    BoxKind box = BoxKind::positive;
    int picard_sweeps = 0;
    int newton_iters = 0;
    double guard_fraction = 1.0;  ///< limit only: share of interior nodes kept by the singular guard

    FieldPair fields() const { return {u1, u2}; }
    double residual_norm() const;
};

struct SystemOpts {
    SolverOpts scalar;              ///< inner scalar solves of the Picard phase
    double tol_outer = 1e-10;       ///< Picard update tolerance (sup norm)
    int max_picard_sweeps = 40;
    int stall_window = 10;          ///< Picard stalls if the update has not decreased over this many sweeps
    double accept_tol = 1e-6;       ///< residual needed to accept a solve
    double target_tol = 1e-11;      ///< residual at which the Newton phase stops early
    int max_newton_iters = 60;      ///< outer Newton steps
    int max_inner_iters = 40;       ///< Newton steps of each frozen-pattern solve
    double singular_guard_factor = 10.0;
    double limit_eps = 1e-8;
    double limit_accept_tol = 1e-4;  ///< guarded singular residual needed to accept the limit
    double limit_eps_ratio = 0.25;  ///< geometric step of the eps ladder below the last rung
    double sign_tol_rel = 1e-8;
    std::vector<int> nodal_modes{7, 5, 6, 4, 8, 10};  ///< half-wave counts of the seeds, tried in order
    double nodal_seed_amplitude = 0.03;
};

/// accept_tol 1e-6 (1D) / 1e-4 (2D), target 1e-11 / 1e-9.
SystemOpts default_system_opts(int dim);

/// Thrown when a solve cannot reach accept_tol; carries the best iterate.
class SystemConvergenceFailure : public ConvergenceFailure {
public:
    SystemConvergenceFailure(const std::string& what, SolutionPair best);
    const SolutionPair& best() const noexcept { return best_; }

private:
    SolutionPair best_;
};

/// Residual of the regularized system (eps > 0) or of the singular system (eps = 0,
/// reactions evaluated at the raw values) for fields u, full node vectors.
FieldPair system_residual(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers, double eps,
                          const FieldPair& u);

/// Picard (Gauss-Seidel) phase followed by a frozen-sign-pattern Newton phase.
SolutionPair solve_regularized(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                               const std::array<Eigenpair, 2>& eig, double eps, BoxKind box,
                               const SolutionPair& init, const SystemOpts& opts);

struct ContinuationDiagnostics {
    std::vector<double> cauchy_gaps;  ///< discrete W^{1,p} distance between consecutive rungs
    std::array<double, 3> mu{0.1, 0.05, 0.025};
    /// [rung][component][mu index] measure of {|u_i| <= mu}
    std::vector<std::array<std::array<double, 3>, 2>> small_set_measure;
    std::vector<std::array<double, 2>> min_abs_interior;
    bool gaps_decreasing() const;
};

struct SolutionBranch {
    std::string label;
    std::vector<int> ladder_ns;
    std::vector<SolutionPair> ladder;
    SolutionPair limit;
    double limit_residual = 0.0;  ///< guarded residual of the singular system
    ContinuationDiagnostics diagnostics;
    bool failed = false;
    std::string failure;  ///< which stage failed and why
    int seed_mode = 0;    ///< nodal branches: number of half-waves in the accepted seed
};

/// Solves the ladder eps = 1/n with warm starts, then descends to opts.limit_eps and
/// evaluates the singular residual with the guard. Nodal branches search seeds.
SolutionBranch continuation(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                            const std::array<Eigenpair, 2>& eig, BoxKind box, const std::vector<int>& ladder_ns,
                            const SystemOpts& opts);

/// Residual of the singular system over interior nodes with min(|u1|,|u2|) >= guard;
/// `fraction` receives the share of interior nodes kept. Infinite if none is kept.
double guarded_residual(const Mesh& mesh, const ModelParams& model, const BarrierSet& barriers,
                        const FieldPair& u, double guard, double* fraction);

/// Discrete W^{1,p1} x W^{1,p2} norm of a - b (sum of component norms).
double w1p_distance(const Mesh& mesh, const std::array<double, 2>& p, const FieldPair& a, const FieldPair& b);

enum class SignKind { positive, negative, nodal_synchronized, nodal_other, degenerate };
std::string to_string(SignKind k);

struct SignClass {
    SignKind kind = SignKind::degenerate;
    double tol = 0.0;
    std::array<double, 2> weak_margin{};    ///< min over interior of u_i - u_lo_i (negative: -u_lo_i - u_i)
    std::array<double, 2> strict_margin{};  ///< same, divided by d(x)
    std::array<bool, 2> changes_sign{};
    double sync_defect = 0.0;               ///< max over nodes of max(0, -u1 u2)
};

SignClass classify_solution(const Mesh& mesh, const SolutionPair& pair, const BarrierSet& barriers,
                            const DistanceField& d, double tol_rel = 1e-8);

/// Test-function argument against opposite constant signs: for the negative component i,
/// a solution needs int |grad u_i^-|^{p_i} = -int f_i(u1,u2) u_i^-; the detector fires when the
/// right-hand side has the wrong sign.
struct OppositeSignCheck {
    bool applicable = false;  ///< pair has opposite constant signs
    int component = -1;       ///< index of the negative component
    double gradient_integral = 0.0;
    double reaction_integral = 0.0;  ///< -int f_i u_i^-
    bool fires = false;
};
OppositeSignCheck opposite_sign_detector(const Mesh& mesh, const ModelParams& model, const FieldPair& u);

}  // namespace lab

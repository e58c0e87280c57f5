#pragma once
// Reaction families of the singular system, the truncations used by the
// regularized problems, the homotopy reactions and sampled hypothesis checks.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lab/eigenpair.hpp"
#include "lab/mesh.hpp"

namespace lab {

struct BarrierSet;

/// f_i(x, s, t): must be pure and thread-safe.
using Reaction = std::function<double(const Point& x, double s, double t)>;

enum class Coupling { sign_coupled, decoupled };

struct ModelParams {
    std::string family;
    std::array<double, 2> p{2.0, 2.0};
    std::array<double, 2> alpha{}, beta{};
    std::array<double, 2> alpha_hat{}, beta_hat{};
    std::array<double, 2> M{}, m{};
    std::array<double, 2> eta{1.0, 1.0};
    std::array<Reaction, 2> f;
    Coupling coupling = Coupling::sign_coupled;
    bool odd_symmetric = false;  ///< f(x,-s,-t) = -f(x,s,t) for both components

    double eval(int i, const Point& x, double s, double t) const { return f[i](x, s, t); }
};

/// Sign function with sgn(0) = 0.
double sgn(double s);

/// f1 = (1/2 + sgn t)(|s|^a1 + |t|^b1), f2 = (1/2 + sgn s)(|s|^a2 + |t|^b2); M = 3/2, m = 1/2.
ModelParams example_family(std::array<double, 2> alpha, std::array<double, 2> beta,
                           std::array<double, 2> p = {2.0, 2.0});
/// Same powers, but f1 carries sgn(s) and f2 carries sgn(t) (decoupled signs).
ModelParams example_decoupled_family(std::array<double, 2> alpha, std::array<double, 2> beta,
                                     std::array<double, 2> p = {2.0, 2.0});
/// Odd sign-coupled family f1 = k sgn(t)(|s|^a1 + |t|^b1), f2 = k sgn(s)(|s|^a2 + |t|^b2); M = m = k.
ModelParams odd_coupled_family(std::array<double, 2> alpha, std::array<double, 2> beta,
                               std::array<double, 2> p = {2.0, 2.0}, double amplitude = 1.0);

double gamma_eps(double eps, double s);
/// gamma_eps(u) + clamp(u, -u_bar, u_bar); eps = 0 gives the plain clamp.
double truncate_T(double eps, double u, double u_bar);
double chi_hat(double phi_val, double s);
double chi_mu(double mu, double s);

/// Homotopy to the eigen-type source: t f_i(T1, T2) + (1-t)(lambda_i T_{i,0}(u_i^+)^{p_i-1} + 1).
double eval_F_t(const ModelParams& model, int i, double t, double eps, const Mesh& mesh, std::size_t node,
                double u1, double u2, const BarrierSet& barriers, const std::array<Eigenpair, 2>& eig);
/// Homotopy to the scaled eigen source: t f_i(T1, T2) + (1-t)(2/3)^{p_i-1} lambda_i |chi|^{p_i-2} chi.
double eval_Fhat_t(const ModelParams& model, int i, double t, double eps, const Mesh& mesh, std::size_t node,
                   double u1, double u2, const BarrierSet& barriers, const std::array<Eigenpair, 2>& eig);

struct Witness {
    int component = 0;  ///< 0 or 1
    Point x;
    double s = 0.0, t = 0.0;
    double value = 0.0;  ///< reaction value at the witness
};

struct HypothesisCheck {
    std::string name;  ///< H1..H5 or nodal_exponents
    bool pass = true;
    std::string detail;
    std::optional<Witness> witness;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    const HypothesisCheck& get(const std::string& name) const;
    bool all_pass() const;
};

/// Exponent ranges are checked exactly, growth and sign conditions on deterministic sample grids.
HypothesisReport check_hypotheses(const ModelParams& model, std::uint64_t sampler_seed);

/// Exponent-range part of H2 and H3 (the calibration precondition). Throws InvalidArgument.
void require_constant_sign_hypotheses(const ModelParams& model);
/// Throws InvalidArgument unless the nodal exponent condition holds.
void require_nodal_exponents(const ModelParams& model);

}  // namespace lab

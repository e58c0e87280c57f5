#pragma once
// Auxiliary singular Dirichlet problems y_i, z_i, the scaled barrier rectangle
// (sub = z/C, super = C y), the calibration of C and the barrier inequality checks.

#include <array>
#include <string>
#include <vector>

#include "lab/eigenpair.hpp"
#include "lab/mesh.hpp"
#include "lab/model.hpp"
#include "lab/plap.hpp"

namespace lab {

struct BarrierSet {
    std::array<ScalarField, 2> y, z;
    std::array<ScalarField, 2> u_lo;  ///< z_i / C
    std::array<ScalarField, 2> u_hi;  ///< C y_i
    double C = 2.0;
    double c = 1.0;  ///< smallest constant with d/c <= z_i <= y_i <= c d
    double delta = 0.1;
};

/// Solves -Delta_p y = 1 + d^alpha + d^beta with the source sampled at element centroids.
/// Exponents must lie in (-1, 1] without 0 (1 is admitted as a regular stand-in).
ScalarField solve_y(const Mesh& mesh, const DistanceField& d, double p, double alpha, double beta,
                    const SolverOpts& opts);
/// Solves -Delta_p z = d^alpha_hat + d^beta_hat off the layer and -1 inside it (centroid membership).
ScalarField solve_z(const Mesh& mesh, const DistanceField& d, const BoundaryLayer& layer, double p,
                    double alpha_hat, double beta_hat, const SolverOpts& opts);

/// u_lo = z / C, u_hi = C y; computes c. Throws InvalidArgument if C <= 1.
BarrierSet build_barriers(const std::array<ScalarField, 2>& y, const std::array<ScalarField, 2>& z, double C,
                          const Mesh& mesh, const DistanceField& d, double delta);

struct BarrierCheck {
    std::string name;
    int component = 0;
    double worst_margin = 0.0;  ///< positive = satisfied with room
    std::size_t worst_node = 0;
    bool pass = true;
};

struct BarrierReport {
    std::vector<BarrierCheck> checks;
    bool all_pass() const;
    const BarrierCheck& worst() const;
    const BarrierCheck& get(const std::string& name) const;
};

/// Nodewise sub/supersolution inequalities on both sign sides, with the other
/// component taken at both ends of its barrier interval (worst case).
BarrierReport verify_sub_super(const ModelParams& model, const BarrierSet& barriers, const Mesh& mesh,
                               const DistanceField& d, const BoundaryLayer& layer);

/// d/c <= z_i <= y_i <= c d at interior nodes, one check per component.
std::vector<BarrierCheck> distance_chain_checks(const BarrierSet& barriers, const Mesh& mesh,
                                                const DistanceField& d);
/// phi_i >= u_lo_i at every node, one check per component.
std::vector<BarrierCheck> eigen_dominance_checks(const BarrierSet& barriers, const std::array<Eigenpair, 2>& eig);

struct Calibration {
    double C = 0.0;
    BarrierSet barriers;
    BoundaryLayer layer;  ///< may be narrower than requested if z had to be made positive
    BarrierReport report;
    int delta_halvings = 0;
};

/// Doubling search C = 2, 4, ..., 2^20 for the first C passing all barrier checks and
/// phi_i >= u_lo_i. Throws InvalidArgument on hypothesis-range violations and
/// CalibrationFailure (with the worst check) when no C passes.
Calibration calibrate_C(const ModelParams& model, const Mesh& mesh, const DistanceField& d,
                        const BoundaryLayer& layer, const std::array<Eigenpair, 2>& eig, const SolverOpts& opts);

}  // namespace lab

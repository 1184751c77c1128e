#pragma once

#include <cstdint>
#include <vector>

#include "bsde/planner.hpp"
#include "bsde/solver.hpp"

namespace bsde {

// One iterate of the coupled map: forward ensemble on the full grid (prefix
// nodes copied in) plus pathwise backward values aligned with it.
struct CoupledIterate {
    PathBundle x;
    RowMat y;  // n_paths x (node_count * d)
    RowMat z;  // n_paths x (steps * d * n)
};

struct LocalFbsdeSolution {
    CoupledIterate triple;
    DiscreteSolution backward;  // fields and diagnostics of the final inner solve
    Eigen::MatrixXd decoupling_coeffs;  // fitted value field at the left endpoint
    FeatureBasis basis;
    int first_node = 0;
    std::vector<double> contraction_log;  // triple gap per outer iteration
    std::vector<double> contraction_ratios;
    int outer_iterations = 0;
    bool converged = false;
};

// The coupled contraction map: freeze (P, Q, R) = prev, integrate
//   X_{i+1} = X_i + g(t_i, P_[0..i], Q_i, R_i) dt + sigma(t_i, P_[0..i]) dW_i
// from the prefix end, then solve the backward equation with terminal
// xi(X path) and driver f along the fresh forward paths. Requires m == n.
CoupledIterate picard_map(const CoupledIterate& prev, const ProblemSpec& spec,
                          const PathPrefix& prefix, const PathBundle& noise,
                          const FeatureBasis& basis, const SolverConfig& config,
                          DiscreteSolution* backward_out = nullptr);

// Triple distance: sup-over-grid L2 gaps of X and Y plus the time-integrated
// L2 gap of Z, over nodes >= first_node.
double triple_gap(const CoupledIterate& a, const CoupledIterate& b, int first_node);

// Iterate picard_map from (prefix held constant, 0, 0) until the triple gap
// drops below config.tol. Refuses intervals failing the contraction
// admissibility check; three consecutive non-contracting outer sweeps raise
// ContractionFailureError with the measured ratio.
LocalFbsdeSolution solve_local_fbsde(const ProblemSpec& spec, const PathPrefix& prefix,
                                     const PathBundle& noise, const FeatureBasis& basis,
                                     const SolverConfig& config);

// Empirical squared Lipschitz quotient of the left-endpoint value field:
// solve from pairs of randomly drawn constant prefixes and compare the
// fitted values against the prefix distance. Returns the max quotient.
double decoupling_lipschitz_probe(const ProblemSpec& spec, int first_node, const PathBundle& noise,
                                  const FeatureBasis& basis, const SolverConfig& config,
                                  int n_prefix_pairs, std::uint64_t seed);

struct AdaptednessReport {
    double x_explained = 0.0;      // explained-variance fraction, forward-state features
    double w_explained = 0.0;      // explained-variance fraction, Brownian features
    double explained_ratio = 0.0;  // x_explained / w_explained
};
// How much of the (Y, Z) variance forward-state features recover relative to
// Brownian features; near 1 when the backward pair is a function of the
// forward state.
AdaptednessReport adaptedness_diagnostic(const LocalFbsdeSolution& sol, const PathBundle& noise);

}  // namespace bsde

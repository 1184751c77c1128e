#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "bsde/paths.hpp"
#include "bsde/problem.hpp"
#include "bsde/regression.hpp"
#include "bsde/time_grid.hpp"

namespace bsde {

struct SolverConfig {
    double tol = 1e-6;
    int max_iter = 50;
};

// Backward solution on [first_node, last_node] of the bundle grid. Values
// outside the solved range stay zero; coefficient slots outside it stay empty.
struct DiscreteSolution {
    TimeGrid grid;
    int d = 0;        // backward dimension
    int n = 0;        // driving dimension
    int n_paths = 0;
    int first_node = 0;
    int last_node = 0;

    RowMat y;  // n_paths x (node_count * d)
    RowMat z;  // n_paths x (steps * d * n), z at node i covers [t_i, t_{i+1})

    std::vector<Eigen::MatrixXd> y_coeffs;  // per node: feature count x d
    std::vector<Eigen::MatrixXd> z_coeffs;  // per step: feature count x (d*n)
    FeatureBasis basis;

    int picard_iterations = 0;
    bool converged = false;
    std::vector<double> gaps;        // successive-iterate norm gaps
    std::vector<double> gap_ratios;  // gaps[k]/gaps[k-1]
    std::vector<double> y_residual_rms;  // per node
    std::vector<double> z_residual_rms;  // per step
    std::vector<double> z_abs_max;       // per step: max over paths of |Z|_F

    auto y_block(int node) { return y.middleCols(static_cast<Eigen::Index>(node) * d, d); }
    auto y_block(int node) const { return y.middleCols(static_cast<Eigen::Index>(node) * d, d); }
    auto z_block(int step) { return z.middleCols(static_cast<Eigen::Index>(step) * d * n, d * n); }
    auto z_block(int step) const {
        return z.middleCols(static_cast<Eigen::Index>(step) * d * n, d * n);
    }
    // Pathwise views: y is a d-vector, z a d x n matrix.
    Eigen::Map<const Eigen::VectorXd> y_at(int path, int node) const;
    Eigen::Map<const RowMat> z_at(int path, int step) const;
};

// Total driver for the backward recursion, indexed so closures can reach
// their own path data: out = F(t, omega_path, y, z).
using TotalDriverFn = std::function<void(int node, int path, double t, const Eigen::VectorXd& y,
                                         const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out)>;

// One backward regression solve. `features` feeds the basis, `noise` supplies
// the Brownian increments for the z projection; the two bundles share grid
// and path count (they may be the same object).
struct BackwardProblem {
    const PathBundle* features = nullptr;
    const PathBundle* noise = nullptr;
    int first_node = 0;
    int last_node = 0;
    int d = 1;
    Eigen::MatrixXd terminal;  // n_paths x d
    TotalDriverFn driver;      // empty means F == 0
};

// Backward least-squares recursion with Picard iteration over the interval:
//   Z_i  = Regress(Y_{i+1} dW_i^T / delta | features_i)
//   Y_i  = Regress(Y_{i+1} + F(t_i, ., Y_prev_i, Z_i) delta | features_i),
// Y_prev from the previous Picard sweep, initialized to the cross-path mean
// of the terminal values. Stops at gap <= tol (sup-over-grid L2 in Y plus
// time-integrated L2 in Z) or max_iter; three consecutive non-contracting
// sweeps raise DivergenceError.
DiscreteSolution solve_backward(const BackwardProblem& problem, const FeatureBasis& basis,
                                const SolverConfig& config);

// Spec-level wrapper: terminal xi(path up to last_node), driver f + z g, the
// bundle serving as both feature source and noise.
DiscreteSolution solve_lipschitz_bsde(const ProblemSpec& spec, int first_node, int last_node,
                                      const PathBundle& bundle, const FeatureBasis& basis,
                                      const SolverConfig& config);

// Fitted-field evaluation at a bare state (state-only bases).
Eigen::VectorXd eval_y_field(const DiscreteSolution& sol, int node,
                             const Eigen::Ref<const Eigen::VectorXd>& x);
// Fitted projection field for the step starting at `step`, reshaped d x n.
Eigen::MatrixXd eval_z_field(const DiscreteSolution& sol, int step,
                             const Eigen::Ref<const Eigen::VectorXd>& x);
// Z via the spatial derivative of the fitted Y field (cross-check route for
// the dW-projection); valid when the driving noise is the state itself.
Eigen::MatrixXd eval_z_field_derivative(const DiscreteSolution& sol, int node,
                                        const Eigen::Ref<const Eigen::VectorXd>& x);

// Two-problem stability estimate from node `from_node` to the horizon:
//   lhs = E[sup |dY|^2] + E[int |dZ|^2]
//   rhs = 6 e^{b (T - t)} (E|dXi|^2 + E[int |dF|^2]),  b = 2(C+1),
// with the driver difference evaluated along the second solution.
struct StabilityGapReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double y_part = 0.0;
    double z_part = 0.0;
    double terminal_part = 0.0;
    double driver_part = 0.0;
    double b = 0.0;
};
StabilityGapReport stability_gap(const ProblemSpec& spec_a, const DiscreteSolution& sol_a,
                                 const ProblemSpec& spec_b, const DiscreteSolution& sol_b,
                                 const PathBundle& bundle, int from_node);

// Pathwise bound |Y_t|^2 + (1/2) E_t int_t^T |Z|^2 <= e^{aT}(C + T/2) with
// a = 4C + 1/2, checked at every grid node with 10% slack; the conditional
// tail is a regression estimate on the same basis.
struct AprioriReport {
    bool pass = false;
    double bound = 0.0;
    double worst_value = 0.0;
    int worst_node = 0;
    double slack = 0.1;
};
AprioriReport apriori_bound_check(const ProblemSpec& spec, const DiscreteSolution& sol,
                                  const PathBundle& bundle);

}  // namespace bsde

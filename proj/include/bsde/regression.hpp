#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bsde/paths.hpp"

namespace bsde {

// Feature family for conditional-expectation regression: an intercept,
// per-coordinate monomials of the current state up to `degree`, then
// optional per-coordinate running max / running integral of the path up
// to the evaluation node.
struct FeatureBasis {
    int dim = 1;
    int degree = 2;
    bool running_max = false;
    bool running_integral = false;

    int count() const;
    bool path_dependent() const { return running_max || running_integral; }
    // Column of the monomial x_coord^power, power in [1, degree].
    int monomial_index(int coord, int power) const;

    void eval(const PathView& path, int node, Eigen::Ref<Eigen::RowVectorXd> out) const;
    // State-only evaluation, used to read fitted fields at arbitrary points.
    // Refuses bases with path functionals.
    void eval_state(const Eigen::Ref<const Eigen::VectorXd>& x,
                    Eigen::Ref<Eigen::RowVectorXd> out) const;
};

// One row of features per path, evaluated at the given node.
RowMat design_matrix(const FeatureBasis& basis, const PathBundle& bundle, int node);

struct RegressionResult {
    Eigen::MatrixXd coeffs;  // full feature count x targets; dropped rows zero
    Eigen::MatrixXd fitted;  // samples x targets
    std::vector<int> kept;   // feature columns that entered the solve
    double residual_rms = 0.0;
};

// Least squares via normal equations. Constant feature columns beyond the
// first are dropped (the intercept absorbs them), which keeps degenerate
// nodes such as a bundle's deterministic start well posed: the fit there
// reduces to a cross-path mean. Rank deficiency after dropping is an error.
RegressionResult regress(const Eigen::Ref<const RowMat>& features,
                         const Eigen::Ref<const Eigen::MatrixXd>& targets);

}  // namespace bsde

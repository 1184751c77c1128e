#pragma once

#include "bsde/fbsde_local.hpp"
#include "bsde/paths.hpp"
#include "bsde/problem.hpp"
#include "bsde/regression.hpp"
#include "bsde/solver.hpp"

namespace bsde {

// Discrete stochastic exponential of -int theta dW. The integrand is laid
// out step-major: theta(p, i * dim + c) is coordinate c on [t_i, t_{i+1}).
struct GirsanovWeights {
    Eigen::VectorXd weight;      // per path, strictly positive
    Eigen::VectorXd log_weight;  // -sum theta.dW - (1/2) sum |theta|^2 dt
    RowMat log_increments;       // n_paths x steps
    double integrand_bound = 0.0;  // max |theta| over (path, step)
    double mean_weight = 0.0;
    double se_weight = 0.0;  // standard error of the empirical mean
};

GirsanovWeights stochastic_exponential(const Eigen::Ref<const RowMat>& theta,
                                       const PathBundle& bundle);

// sup over grid nodes of the regression estimate of E_t[int_t^T |theta|^2 ds],
// square-rooted. Deterministic grid times relax the stopping-time family, so
// the true norm dominates this estimate: the check is necessary, not
// sufficient.
double bmo_norm_estimate(const Eigen::Ref<const RowMat>& theta, const PathBundle& bundle,
                         const FeatureBasis& basis);

// Forward construction from frozen fields: P by Euler with drift
// g(t, P, yhat(t, P), zhat(t, P)) and unit volatility, then Q = yhat(t, P),
// R = zhat(t, P). State-dependent coefficients only.
struct ViaBsdeResult {
    CoupledIterate triple;   // (P, Q, R)
    double drift_bound = 0.0;  // max |g| seen along the construction
    double bmo_norm = 0.0;     // BMO estimate of the drift integrand
};

ViaBsdeResult fbsde_via_bsde(const ProblemSpec& spec, const DiscreteSolution& fields,
                             const PathBundle& noise);

// Discrete residuals of a candidate (P, Q, R) against the coupled system
//   P_t = P_0 + int g ds + W_t,   Q_t = xi(P) + int_t^T f ds - int_t^T R dW.
// Each residual is the max over grid times of the cross-path rms norm.
struct FbsdeResidualReport {
    double terminal = 0.0;  // rms |Q_T - xi(P)|
    double backward = 0.0;
    double forward = 0.0;
};

FbsdeResidualReport fbsde_residual(const CoupledIterate& candidate, const ProblemSpec& spec,
                                   const PathBundle& noise);

}  // namespace bsde

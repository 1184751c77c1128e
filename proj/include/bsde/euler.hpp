#pragma once

#include <Eigen/Dense>
#include <functional>

#include "bsde/paths.hpp"

namespace bsde {

// Drift b(t, state path so far) -> R^state_dim, written into `out`.
using DriftFn = std::function<void(double t, const PathView& state, Eigen::Ref<Eigen::VectorXd> out)>;
// Volatility sigma(t, state path so far) -> R^{state_dim x driver_dim}.
using VolFn = std::function<void(double t, const PathView& state, Eigen::Ref<Eigen::MatrixXd> out)>;

// Explicit Euler step along a driving bundle:
//   X_{i+1} = X_i + b(t_i, X_[0..i]) dt + sigma(t_i, X_[0..i]) dM_i,  X_0 = x0.
// Coefficients only see the state path up to the current node. Any non-finite
// value raises NumericBlowupError naming the path and step.
PathBundle euler_forward(const DriftFn& drift, const VolFn& vol, const PathBundle& driver,
                         const Eigen::VectorXd& x0);

}  // namespace bsde

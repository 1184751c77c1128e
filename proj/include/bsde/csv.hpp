#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsde/girsanov.hpp"
#include "bsde/reflection.hpp"
#include "bsde/solver.hpp"

namespace bsde {

// Shortest round-trippable decimal form (printf %.17g trimmed is not; we pin
// %.17g so files are byte-stable across runs).
std::string format_full(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Per-node solution summary. Columns, in order:
//   t, y_mean_1..d, y_std_1..d, z_abs_mean, z_abs_max, sqrt_rho_bound
// The terminal row has no projection step; its z columns repeat the last
// step's values.
void write_solution_csv(const std::string& path, const DiscreteSolution& sol, double K, double C);

// Per-path density weights.
void write_weights_csv(const std::string& path, const GirsanovWeights& weights);

// One reflected path: t, value_1..m, regulator_1..m, variation.
void write_reflected_csv(const std::string& path, const TimeGrid& grid, const ReflectedPath& rp);

}  // namespace bsde

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "bsde/time_grid.hpp"

namespace bsde {

// Rows are paths; a row stores node-major blocks, so per-path access is
// contiguous: entry (node, coord) lives at column node * dim + coord.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class PathKind { brownian, forward_state, generic };

// Read-only window onto one path, valid up to node `upto`. Coefficient
// callables receive these so they can only depend on the past.
struct PathView {
    const TimeGrid* grid = nullptr;
    const double* data = nullptr;
    int dim = 0;
    int upto = 0;

    double at(int node, int coord = 0) const { return data[node * dim + coord]; }
    Eigen::Map<const Eigen::VectorXd> node_vec(int node) const {
        return Eigen::Map<const Eigen::VectorXd>(data + node * dim, dim);
    }
    // Largest coordinate-wise |value| over nodes 0..upto.
    double sup_abs(int coord) const;
    // Left Riemann sum of the coordinate over [0, t_upto].
    double integral(int coord) const;
};

// Ensemble of discretized paths on a shared grid.
struct PathBundle {
    TimeGrid grid;
    int dim = 0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    PathKind kind = PathKind::generic;
    RowMat values;  // n_paths x (node_count * dim)

    double value(int path, int node, int coord) const { return values(path, node * dim + coord); }
    double& value(int path, int node, int coord) { return values(path, node * dim + coord); }
    double increment(int path, int step, int coord) const {
        return value(path, step + 1, coord) - value(path, step, coord);
    }
    PathView view(int path, int upto) const {
        return PathView{&grid, values.row(path).data(), dim, upto};
    }
    PathView full_view(int path) const { return view(path, grid.steps); }
};

// One deterministic path known on nodes 0..upto of a global grid.
struct PathPrefix {
    TimeGrid grid;
    int dim = 0;
    int upto = 0;
    RowMat values;  // (upto + 1) x dim, row-major so the view sees node-major data

    PathView view() const {
        return PathView{&grid, values.data(), dim, upto};
    }
    static PathPrefix constant(const TimeGrid& grid, const Eigen::VectorXd& x, int upto);
};

// Driving noise with variance `step` per increment; draw (path, step, coord)
// is a pure function of (seed, path, step, coord).
PathBundle simulate_brownian(const TimeGrid& grid, int dim, int n_paths, std::uint64_t seed);

// Splice a prefix on [0, u] with a tail on [u, v] into one full path that
// stays constant after v. The two inputs must agree exactly at node u.
// `tail` holds rows for nodes tail_start .. tail_start + rows - 1.
Eigen::MatrixXd concat_paths(const PathPrefix& prefix, const Eigen::MatrixXd& tail, int tail_start);

// Materialize prefix + per-path tail segments (nodes seg_start..seg_end of
// `segment`'s grid positions) into a full bundle, constant after seg_end.
PathBundle splice_bundle(const PathPrefix& prefix, const RowMat& segment, int seg_start, int seg_end,
                         int n_paths, int dim);

// Empirical per-step increment statistics in standard-error units.
struct IncrementStats {
    double worst_mean_se = 0.0;  // max over (step, coord) of |mean| / se(mean)
    double worst_var_se = 0.0;   // max over (step, coord) of |var - step| / se(var)
    bool within(double n_se) const { return worst_mean_se <= n_se && worst_var_se <= n_se; }
};
IncrementStats brownian_increment_stats(const PathBundle& bundle);

}  // namespace bsde

#include "bsde/paths.hpp"

#include <cmath>
#include <string>

#include "bsde/errors.hpp"
#include "bsde/rng.hpp"

namespace bsde {

double PathView::sup_abs(int coord) const {
    double m = 0.0;
    for (int i = 0; i <= upto; ++i) {
        m = std::max(m, std::fabs(at(i, coord)));
    }
    return m;
}

double PathView::integral(int coord) const {
    double s = 0.0;
    for (int i = 0; i < upto; ++i) {
        s += at(i, coord);
    }
    return s * grid->step;
}

PathPrefix PathPrefix::constant(const TimeGrid& grid, const Eigen::VectorXd& x, int upto) {
    if (upto < 0 || upto > grid.steps) {
        throw GridError("PathPrefix: upto outside the grid");
    }
    PathPrefix p;
    p.grid = grid;
    p.dim = static_cast<int>(x.size());
    p.upto = upto;
    p.values.resize(upto + 1, p.dim);
    for (int i = 0; i <= upto; ++i) {
        p.values.row(i) = x.transpose();
    }
    return p;
}

PathBundle simulate_brownian(const TimeGrid& grid, int dim, int n_paths, std::uint64_t seed) {
    if (dim < 1 || n_paths < 1) {
        throw GridError("simulate_brownian: dim and n_paths must be positive");
    }
    PathBundle b;
    b.grid = grid;
    b.dim = dim;
    b.n_paths = n_paths;
    b.seed = seed;
    b.kind = PathKind::brownian;
    b.values.resize(n_paths, grid.node_count() * dim);
    const double sqrt_dt = std::sqrt(grid.step);
    for (int p = 0; p < n_paths; ++p) {
        double* row = b.values.row(p).data();
        for (int k = 0; k < dim; ++k) {
            row[k] = 0.0;
        }
        for (int i = 0; i < grid.steps; ++i) {
            const double* prev = row + i * dim;
            double* next = row + (i + 1) * dim;
            for (int k = 0; k < dim; ++k) {
                next[k] = prev[k] + sqrt_dt * rng::normal(seed, static_cast<std::uint64_t>(p),
                                                          static_cast<std::uint64_t>(i),
                                                          static_cast<std::uint64_t>(k));
            }
        }
    }
    return b;
}

Eigen::MatrixXd concat_paths(const PathPrefix& prefix, const Eigen::MatrixXd& tail, int tail_start) {
    const int dim = prefix.dim;
    if (tail.cols() != dim) {
        throw SpliceError("concat_paths: coordinate dimensions disagree");
    }
    if (tail_start != prefix.upto) {
        throw SpliceError("concat_paths: tail must start at the prefix's last node");
    }
    const int tail_end = tail_start + static_cast<int>(tail.rows()) - 1;
    if (tail_end > prefix.grid.steps) {
        throw SpliceError("concat_paths: tail runs past the grid");
    }
    for (int k = 0; k < dim; ++k) {
        if (prefix.values(prefix.upto, k) != tail(0, k)) {
            throw SpliceError("concat_paths: segment values disagree at the splice node");
        }
    }
    Eigen::MatrixXd full(prefix.grid.node_count(), dim);
    for (int i = 0; i <= prefix.upto; ++i) {
        full.row(i) = prefix.values.row(i);
    }
    for (int i = 1; i < tail.rows(); ++i) {
        full.row(tail_start + i) = tail.row(i);
    }
    for (int i = tail_end + 1; i < full.rows(); ++i) {
        full.row(i) = tail.row(tail.rows() - 1);
    }
    return full;
}

PathBundle splice_bundle(const PathPrefix& prefix, const RowMat& segment, int seg_start, int seg_end,
                         int n_paths, int dim) {
    if (prefix.dim != dim) {
        throw SpliceError("splice_bundle: coordinate dimensions disagree");
    }
    if (seg_start != prefix.upto) {
        throw SpliceError("splice_bundle: segment must start at the prefix's last node");
    }
    if (seg_end > prefix.grid.steps || seg_end < seg_start) {
        throw SpliceError("splice_bundle: segment range outside the grid");
    }
    const int seg_nodes = seg_end - seg_start + 1;
    if (segment.rows() != n_paths || segment.cols() != seg_nodes * dim) {
        throw SpliceError("splice_bundle: segment shape mismatch");
    }
    PathBundle b;
    b.grid = prefix.grid;
    b.dim = dim;
    b.n_paths = n_paths;
    b.kind = PathKind::forward_state;
    b.values.resize(n_paths, b.grid.node_count() * dim);
    for (int p = 0; p < n_paths; ++p) {
        for (int k = 0; k < dim; ++k) {
            if (segment(p, k) != prefix.values(prefix.upto, k)) {
                throw SpliceError("splice_bundle: segment disagrees with prefix at node " +
                                  std::to_string(seg_start));
            }
        }
        double* row = b.values.row(p).data();
        for (int i = 0; i <= prefix.upto; ++i) {
            for (int k = 0; k < dim; ++k) {
                row[i * dim + k] = prefix.values(i, k);
            }
        }
        const double* seg = segment.row(p).data();
        for (int i = 1; i < seg_nodes; ++i) {
            for (int k = 0; k < dim; ++k) {
                row[(seg_start + i) * dim + k] = seg[i * dim + k];
            }
        }
        for (int i = seg_end + 1; i <= b.grid.steps; ++i) {
            for (int k = 0; k < dim; ++k) {
                row[i * dim + k] = seg[(seg_nodes - 1) * dim + k];
            }
        }
    }
    return b;
}

IncrementStats brownian_increment_stats(const PathBundle& bundle) {
    IncrementStats st;
    const int n = bundle.n_paths;
    const double dt = bundle.grid.step;
    const double se_mean = std::sqrt(dt / n);
    const double se_var = dt * std::sqrt(2.0 / std::max(1, n - 1));
    for (int i = 0; i < bundle.grid.steps; ++i) {
        for (int k = 0; k < bundle.dim; ++k) {
            double s = 0.0, s2 = 0.0;
            for (int p = 0; p < n; ++p) {
                const double d = bundle.increment(p, i, k);
                s += d;
                s2 += d * d;
            }
            const double mean = s / n;
            const double var = s2 / n - mean * mean;
            st.worst_mean_se = std::max(st.worst_mean_se, std::fabs(mean) / se_mean);
            st.worst_var_se = std::max(st.worst_var_se, std::fabs(var - dt) / se_var);
        }
    }
    return st;
}

}  // namespace bsde

#include "bsde/euler.hpp"

#include <cmath>
#include <string>

#include "bsde/errors.hpp"

namespace bsde {

PathBundle euler_forward(const DriftFn& drift, const VolFn& vol, const PathBundle& driver,
                         const Eigen::VectorXd& x0) {
    const int state_dim = static_cast<int>(x0.size());
    const int driver_dim = driver.dim;
    const int steps = driver.grid.steps;
    const double dt = driver.grid.step;

    PathBundle x;
    x.grid = driver.grid;
    x.dim = state_dim;
    x.n_paths = driver.n_paths;
    x.seed = driver.seed;
    x.kind = PathKind::forward_state;
    x.values.resize(x.n_paths, x.grid.node_count() * state_dim);

    Eigen::VectorXd b(state_dim);
    Eigen::MatrixXd s(state_dim, driver_dim);
    Eigen::VectorXd dm(driver_dim);

    for (int p = 0; p < x.n_paths; ++p) {
        double* row = x.values.row(p).data();
        for (int k = 0; k < state_dim; ++k) {
            row[k] = x0[k];
        }
        for (int i = 0; i < steps; ++i) {
            const PathView state{&x.grid, row, state_dim, i};
            const double t = x.grid.node(i);
            drift(t, state, b);
            vol(t, state, s);
            for (int k = 0; k < driver_dim; ++k) {
                dm[k] = driver.increment(p, i, k);
            }
            for (int k = 0; k < state_dim; ++k) {
                const double next = row[i * state_dim + k] + b[k] * dt + s.row(k).dot(dm);
                if (!std::isfinite(next)) {
                    throw NumericBlowupError("euler_forward: non-finite state at path " +
                                             std::to_string(p) + ", step " + std::to_string(i));
                }
                row[(i + 1) * state_dim + k] = next;
            }
        }
    }
    return x;
}

}  // namespace bsde

#include "bsde/time_grid.hpp"

#include <cmath>

#include "bsde/errors.hpp"

namespace bsde {

TimeGrid TimeGrid::uniform(double horizon, int steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw GridError("TimeGrid: horizon must be finite and positive");
    }
    if (steps < 1) {
        throw GridError("TimeGrid: need at least one step");
    }
    TimeGrid g;
    g.horizon = horizon;
    g.steps = steps;
    g.step = horizon / steps;
    g.nodes.resize(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        g.nodes[static_cast<std::size_t>(i)] = (i == steps) ? horizon : g.step * i;
    }
    return g;
}

}  // namespace bsde

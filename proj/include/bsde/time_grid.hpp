#pragma once

#include <vector>

namespace bsde {

// Uniform partition of [0, T] into `steps` intervals. Node i sits at i * step.
struct TimeGrid {
    double horizon = 0.0;
    int steps = 0;
    double step = 0.0;
    std::vector<double> nodes;  // steps + 1 entries, nodes.front() == 0, nodes.back() == horizon

    static TimeGrid uniform(double horizon, int steps);

    int node_count() const { return steps + 1; }
    double node(int i) const { return nodes[static_cast<std::size_t>(i)]; }
};

}  // namespace bsde

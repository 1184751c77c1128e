#include <doctest.h>

#include <cmath>

#include "bsde/paths.hpp"
#include "bsde/rng.hpp"
#include "bsde/time_grid.hpp"

using namespace bsde;

TEST_CASE("counter draws are pure functions of their coordinates") {
    CHECK(rng::normal(1, 2, 3, 4) == rng::normal(1, 2, 3, 4));
    CHECK(rng::normal(1, 2, 3, 4) != rng::normal(1, 2, 3, 5));
    CHECK(rng::uniform01(9, 0, 0, 0) != rng::uniform01(10, 0, 0, 0));
    CHECK(rng::counter_hash(1, 2, 3, 4) == rng::counter_hash(1, 2, 3, 4));
}

TEST_CASE("inverse normal cdf anchors") {
    CHECK(rng::inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    // Phi(1) = 0.8413447460685429
    CHECK(rng::inverse_normal_cdf(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rng::inverse_normal_cdf(1.0 - 0.8413447460685429) ==
          doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("uniform grid nodes") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    CHECK(grid.node_count() == 5);
    CHECK(grid.step == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(grid.node(0) == 0.0);
    CHECK(grid.node(4) == 1.0);
}

TEST_CASE("brownian ensembles start at zero with calibrated increments") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 20);
    const PathBundle bundle = simulate_brownian(grid, 2, 20000, 424242);
    for (int c = 0; c < 2; ++c) CHECK(bundle.value(7, 0, c) == 0.0);
    const IncrementStats stats = brownian_increment_stats(bundle);
    CHECK(stats.within(5.0));
}

TEST_CASE("a bundle prefix does not depend on the ensemble size") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 8);
    const PathBundle small = simulate_brownian(grid, 2, 100, 99);
    const PathBundle large = simulate_brownian(grid, 2, 300, 99);
    CHECK((small.values.array() == large.values.topRows(100).array()).all());
}

TEST_CASE("path views expose past data only") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    PathBundle bundle;
    bundle.grid = grid;
    bundle.dim = 1;
    bundle.n_paths = 1;
    bundle.values = RowMat::Zero(1, 5);
    bundle.values << 0.0, 1.0, -2.0, 3.0, 0.5;
    const PathView view = bundle.view(0, 2);
    CHECK(view.at(2, 0) == -2.0);
    CHECK(view.sup_abs(0) == 2.0);
    // Left Riemann sum over [0, 0.5]: (0 + 1) * 0.25
    CHECK(view.integral(0) == doctest::Approx(0.25).epsilon(1e-15));
}

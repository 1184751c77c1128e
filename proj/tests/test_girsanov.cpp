#include <doctest.h>

#include <cmath>

#include "bsde/catalog.hpp"
#include "bsde/errors.hpp"
#include "bsde/girsanov.hpp"
#include "bsde/global.hpp"

using namespace bsde;

namespace {

FeatureBasis quad_basis() {
    FeatureBasis b;
    b.dim = 1;
    b.degree = 2;
    return b;
}

}  // namespace

TEST_CASE("constant integrand density has unit mean and exact bookkeeping") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 20);
    const PathBundle bundle = simulate_brownian(grid, 1, 20000, 41);
    const RowMat theta = RowMat::Constant(20000, 20, 0.3);
    const GirsanovWeights w = stochastic_exponential(theta, bundle);

    CHECK(w.integrand_bound == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(std::abs(w.mean_weight - 1.0) <= 4.0 * w.se_weight);
    CHECK((w.weight.array() > 0.0).all());
    for (int p = 0; p < 5; ++p) {
        CHECK(w.log_weight(p) == doctest::Approx(w.log_increments.row(p).sum()).epsilon(1e-12));
    }
}

TEST_CASE("bmo estimate of a constant integrand") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 20);
    const PathBundle bundle = simulate_brownian(grid, 1, 4000, 43);
    const RowMat theta = RowMat::Constant(4000, 20, 0.3);
    // E_t int_t^T |theta|^2 ds peaks at t = 0 with value 0.09, so the norm is 0.3.
    CHECK(bmo_norm_estimate(theta, bundle, quad_basis()) == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("frozen-field forward construction closes the coupled system") {
    const ProblemSpec spec = lookup_catalog("linear-drift", {{"T", 1.0}});
    const TimeGrid grid = TimeGrid::uniform(1.0, 20);
    const PathBundle reference = simulate_brownian(grid, 1, 4000, 47);
    const PartitionPlan plan = plan_for_route(spec, "lipschitz");
    const GlobalSolution fields =
        solve_global_lipschitz_g(spec, reference, plan, quad_basis(), SolverConfig{});

    const PathBundle fresh = simulate_brownian(grid, 1, 4000, 53);
    const ViaBsdeResult via = fbsde_via_bsde(spec, fields.solution, fresh);
    CHECK(via.drift_bound == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(via.bmo_norm > 0.0);

    const FbsdeResidualReport res = fbsde_residual(via.triple, spec, fresh);
    // The forward leg is rebuilt by the same Euler recursion, so it closes
    // to rounding; the backward legs carry frozen-field regression noise,
    // which scales like 1/sqrt(reference paths).
    CHECK(res.forward <= 1e-12);
    CHECK(res.terminal <= 1e-8);
    CHECK(res.backward <= 0.25);
}

TEST_CASE("integrand shape mismatches are refused") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 100, 59);
    const RowMat theta = RowMat::Constant(100, 9, 0.1);
    CHECK_THROWS_AS(stochastic_exponential(theta, bundle), PreconditionError);
}

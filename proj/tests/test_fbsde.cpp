#include <doctest.h>

#include <cmath>

#include "bsde/catalog.hpp"
#include "bsde/errors.hpp"
#include "bsde/fbsde_local.hpp"

using namespace bsde;

namespace {

FeatureBasis quad_basis() {
    FeatureBasis b;
    b.dim = 1;
    b.degree = 2;
    return b;
}

}  // namespace

TEST_CASE("coupled picard iteration contracts on an admissible interval") {
    const ProblemSpec spec = lookup_catalog("coupled-linear", {{"T", 0.25}});
    CHECK(eps_ok_contraction(spec.constants.C, spec.constants.C_g, spec.constants.K, spec.T));

    const TimeGrid grid = TimeGrid::uniform(spec.T, 8);
    const PathBundle noise = simulate_brownian(grid, 1, 4000, 17);
    const PathPrefix prefix = PathPrefix::constant(grid, Eigen::VectorXd::Zero(1), 0);
    const LocalFbsdeSolution sol =
        solve_local_fbsde(spec, prefix, noise, quad_basis(), SolverConfig{1e-4, 10});

    CHECK(sol.converged);
    CHECK(sol.outer_iterations <= 6);
    for (double ratio : sol.contraction_ratios) CHECK(ratio <= 0.5);
    CHECK(sol.triple.x.n_paths == 4000);
    CHECK(sol.first_node == 0);

    const AdaptednessReport adapted = adaptedness_diagnostic(sol, noise);
    CHECK(adapted.explained_ratio > 0.5);
}

TEST_CASE("triple distance vanishes on identical iterates") {
    const ProblemSpec spec = lookup_catalog("coupled-linear", {{"T", 0.25}});
    const TimeGrid grid = TimeGrid::uniform(spec.T, 4);
    const PathBundle noise = simulate_brownian(grid, 1, 50, 19);
    const PathPrefix prefix = PathPrefix::constant(grid, Eigen::VectorXd::Zero(1), 0);
    const LocalFbsdeSolution sol =
        solve_local_fbsde(spec, prefix, noise, quad_basis(), SolverConfig{1e-3, 10});
    CHECK(triple_gap(sol.triple, sol.triple, 0) == 0.0);
}

TEST_CASE("inadmissible intervals are refused before any solve") {
    const ProblemSpec spec = lookup_catalog("coupled-linear", {{"T", 5.0}});
    CHECK_FALSE(eps_ok_contraction(spec.constants.C, spec.constants.C_g, spec.constants.K, spec.T));
    const TimeGrid grid = TimeGrid::uniform(spec.T, 8);
    const PathBundle noise = simulate_brownian(grid, 1, 100, 23);
    const PathPrefix prefix = PathPrefix::constant(grid, Eigen::VectorXd::Zero(1), 0);
    CHECK_THROWS_AS(solve_local_fbsde(spec, prefix, noise, quad_basis(), SolverConfig{}),
                    SolverError);
}

TEST_CASE("decoupling field quotient stays under its envelope") {
    const ProblemSpec spec = lookup_catalog("coupled-linear", {{"T", 0.25}});
    const TimeGrid grid = TimeGrid::uniform(spec.T, 8);
    const int first_node = 4;
    const PathBundle noise = simulate_brownian(grid, 1, 2000, 29);
    const double quotient = decoupling_lipschitz_probe(spec, first_node, noise, quad_basis(),
                                                       SolverConfig{1e-4, 10}, 3, 117);
    const double interval = spec.T - grid.node(first_node);
    CHECK(quotient >= 0.0);
    CHECK(quotient <=
          rho_fb(interval, spec.constants.K, spec.constants.C, spec.constants.C_g) * 1.15);
}

#include <doctest.h>

#include <cmath>

#include "bsde/catalog.hpp"
#include "bsde/errors.hpp"
#include "bsde/global.hpp"

using namespace bsde;

namespace {

FeatureBasis quad_basis() {
    FeatureBasis b;
    b.dim = 1;
    b.degree = 2;
    return b;
}

// The change-of-variable route regresses an exponential of the state; a
// global quadratic dips negative on several percent of the mass there, so
// that route gets more polynomial headroom.
FeatureBasis rich_basis() {
    FeatureBasis b;
    b.dim = 1;
    b.degree = 6;
    return b;
}

}  // namespace

TEST_CASE("route planning runs off the spec constants") {
    CHECK(plan_for_route(lookup_catalog("bounded-sine"), "lipschitz").levels == 2);
    CHECK(plan_for_route(lookup_catalog("bounded-sine"), "superquadratic").levels == 2);
    CHECK(plan_for_route(lookup_catalog("quad-1d"), "diagonal").levels == 2);
    CHECK(plan_for_route(lookup_catalog("quad-terminal"), "lipschitz").levels == 2);
    CHECK_THROWS_AS(plan_for_route(lookup_catalog("bounded-sine"), "diagonal"), PreconditionError);
    CHECK_THROWS_AS(plan_for_route(lookup_catalog("bounded-sine"), "unknown"), PreconditionError);
}

TEST_CASE("radial truncation is an exact identity inside its radius") {
    Eigen::MatrixXd z(1, 2);
    z << 0.3, -0.4;  // norm 0.5
    const Eigen::MatrixXd same = localize(z, 0.5);
    CHECK((same.array() == z.array()).all());
    const Eigen::MatrixXd shrunk = localize(z, 0.25);
    CHECK(shrunk.norm() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(localize(z, 0.0), PreconditionError);
}

TEST_CASE("glued solve reproduces the affine closed form with a certificate") {
    const ProblemSpec spec = lookup_catalog("linear-drift", {{"c", 0.3}});
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 8000, 21);
    const PartitionPlan plan = plan_for_route(spec, "lipschitz");
    const GlobalSolution gs =
        solve_global_lipschitz_g(spec, bundle, plan, quad_basis(), SolverConfig{});
    CHECK(gs.solution.converged);
    CHECK(gs.solution.y_block(0).col(0).mean() == doctest::Approx(0.3).epsilon(0.1));
    CHECK(gs.z_certificate.checked);
    CHECK(gs.z_certificate.pass);
    CHECK(gs.localizer_active_fraction == 0.0);
    CHECK(gs.localizer_self_consistent);
}

TEST_CASE("grid and level misalignment is refused") {
    const ProblemSpec spec = lookup_catalog("bounded-sine");
    const TimeGrid grid = TimeGrid::uniform(1.0, 9);  // not a multiple of 2 levels
    const PathBundle bundle = simulate_brownian(grid, 1, 200, 3);
    const PartitionPlan plan = plan_for_route(spec, "lipschitz");
    CHECK_THROWS_AS(solve_global_lipschitz_g(spec, bundle, plan, quad_basis(), SolverConfig{}),
                    GridError);
}

TEST_CASE("dormant localization makes the two global routes coincide") {
    const ProblemSpec spec = lookup_catalog("bounded-sine");
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 2000, 57);
    const PartitionPlan plan = plan_for_route(spec, "lipschitz");
    const GlobalSolution a =
        solve_global_lipschitz_g(spec, bundle, plan, quad_basis(), SolverConfig{});
    const GlobalSolution b = solve_global_superquadratic(spec, bundle, quad_basis(), SolverConfig{});
    CHECK((a.solution.y.array() == b.solution.y.array()).all());
    CHECK((a.solution.z.array() == b.solution.z.array()).all());
}

TEST_CASE("exponential transform round trip") {
    Eigen::VectorXd a(2);
    a << 1.0, -0.5;
    Eigen::VectorXd y(2), ybar(2), back_y(2);
    Eigen::MatrixXd z(2, 2), zbar(2, 2), back_z(2, 2);
    y << 0.4, -1.2;
    z << 0.3, -0.7, 1.1, 0.0;
    diagonal_forward(a, y, z, ybar, zbar);
    diagonal_inverse(a, ybar, zbar, back_y, back_z);
    CHECK((back_y - y).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((back_z - z).cwiseAbs().maxCoeff() <= 1e-14);

    Eigen::VectorXd bad(2);
    bad << 1.0, -1.0;
    CHECK_THROWS_AS(diagonal_inverse(a, bad, zbar, back_y, back_z), TransformDomainError);
}

TEST_CASE("diagonal route approximates the change-of-variable reference") {
    const ProblemSpec spec = lookup_catalog("quad-1d");
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 8000, 8);
    const GlobalSolution gs = solve_diagonal_quadratic(spec, bundle, rich_basis(), SolverConfig{});
    // log E[e^{2 sin(W_1)}] / 2 = 0.36933296898209934
    CHECK(gs.solution.y_block(0).col(0).mean() ==
          doctest::Approx(0.36933296898209934).epsilon(0.06));
    CHECK(gs.envelope.checked);
    CHECK(gs.envelope.mean_pass);
    CHECK(gs.clamp_fraction <= 0.05);
    CHECK_THROWS_AS(
        solve_diagonal_quadratic(lookup_catalog("bounded-sine"), bundle, rich_basis(), SolverConfig{}),
        PreconditionError);
}

TEST_CASE("perturbation route returns its base bit for bit at zero deviation") {
    const ProblemSpec base = lookup_catalog("bounded-sine");
    const ProblemSpec target = lookup_catalog("bounded-sine");
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 2000, 303);
    const PartitionPlan plan = plan_for_route(base, "lipschitz");
    const GlobalSolution reference =
        solve_global_lipschitz_g(base, bundle, plan, quad_basis(), SolverConfig{});
    const GlobalSolution per = solve_perturbed(target, base, PerturbationConstants{}, bundle,
                                               quad_basis(), SolverConfig{});
    CHECK_FALSE(per.rejected);
    CHECK(per.margin.deviation == 0.0);
    CHECK((per.solution.y.array() == reference.solution.y.array()).all());
    CHECK((per.solution.z.array() == reference.solution.z.array()).all());
}

TEST_CASE("perturbation route rejects a distant target") {
    const ProblemSpec base = lookup_catalog("bounded-sine");
    const ProblemSpec target = lookup_catalog("quad-terminal");
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 2000, 304);
    const GlobalSolution per = solve_perturbed(target, base, PerturbationConstants{}, bundle,
                                               quad_basis(), SolverConfig{});
    CHECK(per.rejected);
    CHECK_FALSE(per.margin.pass);
    CHECK(per.margin.deviation > per.margin.threshold);
}

#include <doctest.h>

#include <cmath>

#include "bsde/catalog.hpp"
#include "bsde/oracle.hpp"
#include "bsde/regression.hpp"
#include "bsde/rng.hpp"
#include "bsde/solver.hpp"

using namespace bsde;

TEST_CASE("least squares reproduces exact polynomial data") {
    const int n = 500;
    RowMat features(n, 3);
    Eigen::MatrixXd targets(n, 1);
    for (int i = 0; i < n; ++i) {
        const double x = -2.0 + 4.0 * rng::uniform01(5, i, 0, 0);
        features(i, 0) = 1.0;
        features(i, 1) = x;
        features(i, 2) = x * x;
        targets(i, 0) = 0.7 - 1.3 * x + 0.25 * x * x;
    }
    const RegressionResult fit = regress(features, targets);
    CHECK(fit.coeffs(0, 0) == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(fit.coeffs(1, 0) == doctest::Approx(-1.3).epsilon(1e-10));
    CHECK(fit.coeffs(2, 0) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(fit.residual_rms <= 1e-10);
    CHECK(fit.kept.size() == 3);
}

TEST_CASE("constant columns collapse into the intercept") {
    RowMat features(50, 3);
    Eigen::MatrixXd targets(50, 1);
    for (int i = 0; i < 50; ++i) {
        features(i, 0) = 1.0;
        features(i, 1) = 3.0;  // degenerate: the start node of a bundle
        features(i, 2) = 9.0;
        targets(i, 0) = 4.2;
    }
    const RegressionResult fit = regress(features, targets);
    CHECK(fit.fitted.col(0).isApproxToConstant(4.2, 1e-12));
    CHECK(fit.kept.size() == 1);
}

TEST_CASE("feature basis layout") {
    FeatureBasis basis;
    basis.dim = 2;
    basis.degree = 2;
    CHECK(basis.count() == 5);  // intercept + x1 + x1^2 + x2 + x2^2 layout-dependent count
    basis.running_max = true;
    CHECK(basis.count() == 7);
    CHECK(basis.path_dependent());
}

TEST_CASE("driver-free chains preserve the terminal sample mean") {
    const ProblemSpec spec = lookup_catalog("bounded-sine");
    const TimeGrid grid = TimeGrid::uniform(1.0, 8);
    const PathBundle bundle = simulate_brownian(grid, 1, 4000, 31);
    FeatureBasis basis;
    const DiscreteSolution sol = solve_lipschitz_bsde(spec, 0, 8, bundle, basis, SolverConfig{});

    double terminal_mean = 0.0;
    Eigen::VectorXd xi(1);
    for (int p = 0; p < 4000; ++p) {
        spec.eval_terminal(bundle.full_view(p), xi);
        terminal_mean += xi(0);
    }
    terminal_mean /= 4000.0;

    // Each regression carries an intercept, so fitted values keep the sample
    // mean; with no driver the chain telescopes it to the start node exactly.
    CHECK(std::abs(sol.y_block(0).col(0).mean() - terminal_mean) <= 1e-12);
    CHECK(sol.converged);
}

TEST_CASE("affine driver solves to its closed form") {
    const ProblemSpec spec = lookup_catalog("linear-drift", {{"c", 0.3}});
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 8000, 77);
    FeatureBasis basis;
    const DiscreteSolution sol = solve_lipschitz_bsde(spec, 0, 10, bundle, basis, SolverConfig{});
    CHECK(sol.converged);

    // Y(t, x) = x + c (T - t), Z = 1.
    CHECK(sol.y_block(0).col(0).mean() == doctest::Approx(0.3).epsilon(0.1));
    Eigen::VectorXd probe(1);
    probe << 0.2;
    CHECK(eval_y_field(sol, 5, probe)(0) == doctest::Approx(0.2 + 0.3 * 0.5).epsilon(0.1));
    CHECK(eval_z_field(sol, 5, probe)(0, 0) == doctest::Approx(1.0).epsilon(0.15));
    CHECK(eval_z_field_derivative(sol, 5, probe)(0, 0) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("two-solution stability bound holds on a synthetic pair") {
    const ProblemSpec a = lookup_catalog("bounded-sine", {{"amp", 1.0}});
    const ProblemSpec b = lookup_catalog("bounded-sine", {{"amp", 0.6}, {"phase", 0.3}});
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 4000, 13);
    FeatureBasis basis;
    const DiscreteSolution sol_a = solve_lipschitz_bsde(a, 0, 10, bundle, basis, SolverConfig{});
    const DiscreteSolution sol_b = solve_lipschitz_bsde(b, 0, 10, bundle, basis, SolverConfig{});
    const StabilityGapReport rep = stability_gap(a, sol_a, b, sol_b, bundle, 0);
    CHECK(rep.lhs > 0.0);
    CHECK(rep.rhs > 0.0);
    CHECK(rep.lhs <= rep.rhs * 1.05);
}

TEST_CASE("solver matches the quadrature reference on a driver-free problem") {
    const ProblemSpec spec = lookup_catalog("quad-terminal");
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle bundle = simulate_brownian(grid, 1, 20000, 101);
    FeatureBasis basis;
    const DiscreteSolution sol = solve_lipschitz_bsde(spec, 0, 10, bundle, basis, SolverConfig{});
    const OracleResult ref = quadrature_conditional_expectation(
        [](double x) { return x * x; }, 0.0, 0.0, 1.0);
    CHECK(sol.y_block(0).col(0).mean() == doctest::Approx(ref.value).epsilon(0.05));
}

#include "bsde/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "bsde/catalog.hpp"
#include "bsde/csv.hpp"
#include "bsde/errors.hpp"
#include "bsde/fbsde_local.hpp"
#include "bsde/girsanov.hpp"
#include "bsde/global.hpp"
#include "bsde/oracle.hpp"
#include "bsde/planner.hpp"
#include "bsde/reflection.hpp"
#include "bsde/rng.hpp"
#include "bsde/run.hpp"
#include "bsde/solver.hpp"

namespace bsde {

namespace {

// Scaled tolerances: absolute limits multiply by the scale, multiplicative
// slack factors shrink toward 1 with it.
struct Tol {
    double scale = 1.0;
    double abs(double x) const { return x * scale; }
    double slack(double s) const { return 1.0 + (s - 1.0) * scale; }
};

struct Ctx {
    std::uint64_t seed = 0;
    Tol tol;
};

double u01(const Ctx& ctx, int criterion, std::uint64_t i, std::uint64_t lane) {
    return rng::uniform01(ctx.seed, 0xACCE0000ULL + static_cast<std::uint64_t>(criterion), i, lane);
}

std::uint64_t salt(const Ctx& ctx, int criterion, std::uint64_t sub) {
    return rng::counter_hash(ctx.seed, 0xACCE, static_cast<std::uint64_t>(criterion), sub);
}

FeatureBasis quadratic_basis(int dim) {
    FeatureBasis b;
    b.dim = dim;
    b.degree = 2;
    return b;
}

double rel_gap(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Relative error with a unit floor, so references at zero stay comparable.
double unit_floor_rel(double value, double reference) {
    return std::abs(value - reference) / std::max(1.0, std::abs(reference));
}

std::string fnum(double v) { return format_full(v); }

// ---------------------------------------------------------------------------
// 1. Closed-form constants: anchor values, recursion vs closed form, and the
//    fine-partition limit of the level constants.
// ---------------------------------------------------------------------------
CriterionResult c01_constants(const Ctx& ctx) {
    CriterionResult r{1, "constants-exactness"};
    double worst = 0.0;

    const double ks[] = {0.1, 0.5, 1.0, 2.0};
    const double cs[] = {0.3, 1.0, 1.7};
    const double cgs[] = {0.0, 0.25, 1.2};
    for (double K : ks) {
        for (double C : cs) {
            worst = std::max(worst, rel_gap(rho(0.0, K, C), K));
            for (double Cg : cgs) {
                worst = std::max(worst, rel_gap(rho_fb(0.0, K, C, Cg), K));
                for (double delta : {0.01, 0.17}) {
                    for (long long j : {1LL, 7LL, 53LL}) {
                        worst = std::max(worst, rel_gap(level_recursion(K, C, Cg, delta, j),
                                                        level_closed_form(K, C, Cg, delta, j)));
                    }
                }
            }
        }
    }

    const double threshold = tevzadze_margin(1.0, 1.0, 1.0, 0.0).threshold;
    worst = std::max(worst, rel_gap(threshold, 1.0 / 256.0));

    // Level-constant limit at (T, K, C, C_g) = (1, 1, 1, 0). The raw gap at
    // N = 1e6 decays like 1/N (about 2.7e-5 here); the limit itself is pinned
    // through first-order extrapolation in 1/N, which removes that term.
    const long long n_fine = 1'000'000;
    const double target = rho(1.0, 1.0, 1.0);
    const double at_n = level_closed_form(1.0, 1.0, 0.0, 1.0 / static_cast<double>(n_fine), n_fine);
    const double at_2n =
        level_closed_form(1.0, 1.0, 0.0, 0.5 / static_cast<double>(n_fine), 2 * n_fine);
    const double raw_gap = std::abs(at_n - target);
    const double limit_gap = std::abs(2.0 * at_2n - at_n - target);

    r.observed = worst;
    r.limit = ctx.tol.abs(1e-12);
    const bool raw_ok = raw_gap <= ctx.tol.abs(1e-4) && raw_gap <= 40.0 / static_cast<double>(n_fine);
    const bool limit_ok = limit_gap <= ctx.tol.abs(1e-8);
    r.pass = worst <= r.limit && raw_ok && limit_ok;
    r.detail = "recursion/anchor worst " + fnum(worst) + "; level limit raw gap " + fnum(raw_gap) +
               " (1/N decay), extrapolated " + fnum(limit_gap) + " <= " + fnum(ctx.tol.abs(1e-8));
    return r;
}

// ---------------------------------------------------------------------------
// 2. Partition planner vs an independent transcription of the two interval
//    inequalities on a random constants lattice.
// ---------------------------------------------------------------------------
CriterionResult c02_planner(const Ctx& ctx) {
    CriterionResult r{2, "planner-soundness"};
    const double T = 1.0;
    const long long cap = 4'000'000'000'000LL;

    auto q_of = [](double C) { return C / (2.0 * (C + 1.0)); };
    auto cap_ref = [&](double K, double C, double Cg) {
        return (K + q_of(C)) * std::exp(4.0 * (C + 1.0) * T + 4.0 * Cg * T * T);
    };
    auto con_ref = [](double C, double Cg, double R, double e) {
        return Cg * (6.0 * std::exp(2.0 * (C + 1.0) * e) * (R + C * e) + 1.0) * (e + 1.0) * e;
    };
    auto dec_ref = [&](double C, double Cg, double R, double e) {
        const double growth =
            8.0 * std::exp(2.0 * (C + 1.0) * e + 4.0 * Cg * e * e) * (R + C * e) * Cg * e;
        return std::max(growth, con_ref(C, Cg, R, e));
    };
    // Verdict rule shared with the planner contract: values within 1e-12 of
    // the boundary count as failing.
    auto passes = [&](double C, double Cg, double R, double e) {
        return 1.0 - dec_ref(C, Cg, R, e) > 1e-12;
    };

    double worst_cap_ratio = 0.0;
    double worst_transcription = 0.0;
    long long max_n = 0;
    bool ok = true;
    std::string fail;

    for (int k = 0; k < 20; ++k) {
        const double K = 0.1 + 1.9 * u01(ctx, 2, k, 0);
        const double C = 0.1 + 1.9 * u01(ctx, 2, k, 1);
        const double Cg = 0.1 + 1.9 * u01(ctx, 2, k, 2);

        const PartitionPlan plan = plan_partition(K, C, Cg, T, cap);
        const double R = cap_ref(K, C, Cg);
        worst_transcription = std::max(worst_transcription, rel_gap(R, plan.horizon_cap));

        const long long N = plan.levels;
        max_n = std::max(max_n, N);
        if (!passes(C, Cg, R, T / static_cast<double>(N))) {
            ok = false;
            fail = "point " + std::to_string(k) + ": planner N fails the reference inequalities";
        }
        if (N > 2 && passes(C, Cg, R, T / static_cast<double>(N - 1))) {
            ok = false;
            fail = "point " + std::to_string(k) + ": N-1 also passes, N not minimal";
        }
        if (N <= 20000) {
            long long first = -1;
            for (long long n = 2; n <= N; ++n) {
                if (passes(C, Cg, R, T / static_cast<double>(n))) {
                    first = n;
                    break;
                }
            }
            if (first != N) {
                ok = false;
                fail = "point " + std::to_string(k) + ": scan found N " + std::to_string(first);
            }
        }

        const long long stride = std::max<long long>(1, N / 64);
        for (long long j = 0; j <= N; j += stride) {
            worst_cap_ratio =
                std::max(worst_cap_ratio, level_closed_form(K, C, Cg, plan.delta, j) / R);
        }
        worst_cap_ratio = std::max(worst_cap_ratio, plan.k_final / R);
    }

    r.observed = worst_cap_ratio;
    r.limit = 1.0 + ctx.tol.abs(1e-9);
    r.pass = ok && worst_cap_ratio <= r.limit && worst_transcription <= ctx.tol.abs(1e-12);
    r.detail = ok ? "20 lattice points, minimal level counts up to " + std::to_string(max_n) +
                        ", worst K_j / cap " + fnum(worst_cap_ratio)
                  : fail;
    return r;
}

// ---------------------------------------------------------------------------
// 3. Backward solver against the quadrature reference on driver-free
//    problems.
// ---------------------------------------------------------------------------
CriterionResult c03_oracle_match(const Ctx& ctx) {
    CriterionResult r{3, "solver-oracle-match"};
    const int steps = 50;
    const int n_paths = 200000;
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-6, 50};
    const TimeGrid grid = TimeGrid::uniform(1.0, steps);

    const ProblemSpec sine = lookup_catalog("bounded-sine", {{"T", 1.0}});
    const PathBundle bundle_a = simulate_brownian(grid, 1, n_paths, salt(ctx, 3, 0));
    const DiscreteSolution sol_a = solve_lipschitz_bsde(sine, 0, steps, bundle_a, basis, cfg);
    const double y0_sine = sol_a.y_block(0).col(0).mean();
    const OracleResult ref_sine =
        quadrature_conditional_expectation([](double x) { return std::sin(x); }, 0.0, 0.0, 1.0);

    const ProblemSpec quad = lookup_catalog("quad-terminal", {{"T", 1.0}});
    const PathBundle bundle_b = simulate_brownian(grid, 1, n_paths, salt(ctx, 3, 1));
    const DiscreteSolution sol_b = solve_lipschitz_bsde(quad, 0, steps, bundle_b, basis, cfg);
    const double y0_quad = sol_b.y_block(0).col(0).mean();
    const OracleResult ref_quad =
        quadrature_conditional_expectation([](double x) { return x * x; }, 0.0, 0.0, 1.0);

    const double err_sine = unit_floor_rel(y0_sine, ref_sine.value);
    const double err_quad = unit_floor_rel(y0_quad, ref_quad.value);

    r.observed = err_sine;
    r.limit = ctx.tol.abs(0.01);
    r.pass = err_sine <= ctx.tol.abs(0.01) && err_quad <= ctx.tol.abs(0.02);
    r.detail = "sine terminal " + fnum(y0_sine) + " vs " + fnum(ref_sine.value) +
               "; square terminal " + fnum(y0_quad) + " vs " + fnum(ref_quad.value) + " (err " +
               fnum(err_quad) + " <= " + fnum(ctx.tol.abs(0.02)) + ")";
    return r;
}

// ---------------------------------------------------------------------------
// 4. Pathwise z-field bound certificates on driver-free and affine entries.
// ---------------------------------------------------------------------------
CriterionResult c04_z_bound(const Ctx& ctx) {
    CriterionResult r{4, "z-bound-certificate"};
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-6, 50};
    const char* names[] = {"bounded-sine", "quad-terminal", "linear-drift"};

    double worst = 0.0;
    bool all_checked = true;
    std::string parts;
    for (int i = 0; i < 3; ++i) {
        const ProblemSpec spec = lookup_catalog(names[i], {{"T", 1.0}});
        const PartitionPlan plan = plan_for_route(spec, "lipschitz");
        const int steps = 50;  // a multiple of the two levels these plans use
        const TimeGrid grid = TimeGrid::uniform(spec.T, steps);
        const PathBundle bundle =
            simulate_brownian(grid, 1, 100000, salt(ctx, 4, static_cast<std::uint64_t>(i)));
        const GlobalSolution gs = solve_global_lipschitz_g(spec, bundle, plan, basis, cfg);
        all_checked = all_checked && gs.z_certificate.checked;
        worst = std::max(worst, gs.z_certificate.worst_ratio);
        parts += std::string(i == 0 ? "" : ", ") + names[i] + " " +
                 fnum(gs.z_certificate.worst_ratio);
    }

    r.observed = worst;
    r.limit = ctx.tol.slack(1.05);
    r.pass = all_checked && worst <= r.limit;
    r.detail = "worst observed/bound ratios: " + parts;
    return r;
}

// ---------------------------------------------------------------------------
// 5. Measured Picard contraction of the coupled map on the affine coupled
//    entry over an admissible interval.
// ---------------------------------------------------------------------------
CriterionResult c05_contraction(const Ctx& ctx) {
    CriterionResult r{5, "coupled-contraction"};
    const ProblemSpec spec = lookup_catalog("coupled-linear", {{"T", 0.25}});
    const double eps = spec.T;

    // Independent transcription of the interval constant.
    const double C = spec.constants.C, Cg = spec.constants.C_g, K = spec.constants.K;
    const double ctilde =
        Cg * (6.0 * std::exp(2.0 * (C + 1.0) * eps) * (K + C * eps) + 1.0) * (eps + 1.0) * eps;

    const TimeGrid grid = TimeGrid::uniform(spec.T, 16);
    const PathBundle noise = simulate_brownian(grid, 1, 20000, salt(ctx, 5, 0));
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-4, 10};
    const PathPrefix prefix = PathPrefix::constant(grid, Eigen::VectorXd::Zero(1), 0);

    const LocalFbsdeSolution sol = solve_local_fbsde(spec, prefix, noise, basis, cfg);

    double worst_ratio = 0.0;
    for (double ratio : sol.contraction_ratios) worst_ratio = std::max(worst_ratio, ratio);

    r.observed = worst_ratio;
    r.limit = ctilde * ctx.tol.slack(1.10);
    r.pass = ctilde <= 0.5 && rel_gap(ctilde, contraction_lhs(C, Cg, K, eps)) <= 1e-12 &&
             sol.converged && sol.outer_iterations <= 5 && worst_ratio <= r.limit;
    r.detail = "interval constant " + fnum(ctilde) + " (<= 0.5), " +
               std::to_string(sol.outer_iterations) + " outer iterations, " +
               std::to_string(static_cast<int>(sol.contraction_ratios.size())) +
               " measured ratios";
    return r;
}

// ---------------------------------------------------------------------------
// 6. Decoupling-field Lipschitz envelope on a pool of admissible problems.
// ---------------------------------------------------------------------------
CriterionResult c06_decoupling(const Ctx& ctx) {
    CriterionResult r{6, "decoupling-lipschitz"};
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-6, 50};
    const int steps = 10;
    const int first_node = 5;

    double worst = 0.0;
    int checked = 0;
    for (int k = 0; k < 10; ++k) {
        ProblemSpec spec;
        switch (k % 5) {
            case 0:
                spec = lookup_catalog("bounded-sine", {{"T", 0.5 + 0.5 * u01(ctx, 6, k, 0)},
                                                       {"amp", 0.3 + 0.7 * u01(ctx, 6, k, 1)},
                                                       {"phase", u01(ctx, 6, k, 2)}});
                break;
            case 1:
                spec = lookup_catalog("linear-drift", {{"T", 0.5 + 0.5 * u01(ctx, 6, k, 0)},
                                                       {"c", 0.1 + 0.3 * u01(ctx, 6, k, 1)}});
                break;
            case 2:
                spec = lookup_catalog("zero", {{"T", 0.5 + 0.5 * u01(ctx, 6, k, 0)}});
                break;
            case 3:
                spec = lookup_catalog("coupled-linear", {{"T", 0.25},
                                                         {"c0", 0.2 + 0.2 * u01(ctx, 6, k, 0)},
                                                         {"c1", 0.1 + 0.1 * u01(ctx, 6, k, 1)}});
                break;
            default:
                spec = lookup_catalog("coupled-constant-drift",
                                      {{"T", 0.25}, {"c", 0.1 + 0.4 * u01(ctx, 6, k, 0)}});
                break;
        }
        const TimeGrid grid = TimeGrid::uniform(spec.T, steps);
        const double interval = spec.T - grid.node(first_node);
        if (!eps_ok_decoupling(spec.constants.C, spec.constants.C_g, spec.constants.K, interval)) {
            continue;  // pool entries are chosen admissible; guard regardless
        }
        const PathBundle noise =
            simulate_brownian(grid, 1, 2000, salt(ctx, 6, static_cast<std::uint64_t>(k)));
        const double quotient = decoupling_lipschitz_probe(
            spec, first_node, noise, basis, cfg, 4, salt(ctx, 6, 100 + static_cast<std::uint64_t>(k)));
        const double bound =
            rho_fb(interval, spec.constants.K, spec.constants.C, spec.constants.C_g);
        worst = std::max(worst, quotient / bound);
        ++checked;
    }

    r.observed = worst;
    r.limit = ctx.tol.slack(1.15);
    r.pass = checked == 10 && worst <= r.limit;
    r.detail = std::to_string(checked) + " problems probed at mid-horizon, worst quotient/bound " +
               fnum(worst);
    return r;
}

// ---------------------------------------------------------------------------
// 7. Exponential-transform route against the log-expectation reference,
//    comparison envelope and transform round trip.
// ---------------------------------------------------------------------------
CriterionResult c07_exponential_transform(const Ctx& ctx) {
    CriterionResult r{7, "exponential-transform"};
    const ProblemSpec spec = lookup_catalog("quad-1d");
    // The transformed value is an exponential of the state; a quadratic basis
    // dips negative on a few percent of the mass, so this route gets degree 6.
    FeatureBasis basis = quadratic_basis(1);
    basis.degree = 6;
    const SolverConfig cfg{1e-6, 50};
    const TimeGrid grid = TimeGrid::uniform(spec.T, 50);
    const PathBundle bundle = simulate_brownian(grid, 1, 100000, salt(ctx, 7, 0));

    const GlobalSolution gs = solve_diagonal_quadratic(spec, bundle, basis, cfg);
    const double y0 = gs.solution.y_block(0).col(0).mean();
    const ColeHopfReference ref = cole_hopf_reference(
        [](double x) { return std::sin(x); }, spec.diag_a(0), 0.0, 0.0, spec.T);
    const double rel = std::abs(y0 - ref.y) / std::abs(ref.y);

    // Round trip of the transform pair on deterministic samples, one- and
    // two-dimensional weights.
    double roundtrip = 0.0;
    for (int k = 0; k < 256; ++k) {
        const int d = (k % 2 == 0) ? 1 : 2;
        Eigen::VectorXd a(d), y(d), yb(d), back_y(d);
        Eigen::MatrixXd z(d, d), zb(d, d), back_z(d, d);
        for (int c = 0; c < d; ++c) {
            a(c) = (c == 0 ? 1.0 : -0.5) * (0.5 + u01(ctx, 7, k, 0));
            y(c) = 4.0 * u01(ctx, 7, k, 1 + static_cast<std::uint64_t>(c)) - 2.0;
            for (int j = 0; j < d; ++j) {
                z(c, j) = 6.0 * u01(ctx, 7, k, 10 + static_cast<std::uint64_t>(c * d + j)) - 3.0;
            }
        }
        diagonal_forward(a, y, z, yb, zb);
        diagonal_inverse(a, yb, zb, back_y, back_z);
        roundtrip = std::max(roundtrip, (back_y - y).cwiseAbs().maxCoeff());
        roundtrip = std::max(roundtrip, (back_z - z).cwiseAbs().maxCoeff());
    }

    r.observed = rel;
    r.limit = ctx.tol.abs(0.02);
    r.pass = rel <= r.limit && gs.envelope.checked && gs.envelope.mean_pass &&
             gs.clamp_fraction <= 0.05 && roundtrip <= ctx.tol.abs(1e-12);
    r.detail = "value " + fnum(y0) + " vs reference " + fnum(ref.y) + "; mean envelope " +
               (gs.envelope.mean_pass ? "holds" : "fails") + ", clamped fraction " +
               fnum(gs.clamp_fraction) + ", round trip " + fnum(roundtrip);
    return r;
}

namespace synth {

// Synthetic bounded-terminal problems sharing declared constants, used by the
// stability criterion.
ProblemSpec bounded_pair_member(double amp, double phase, double drift) {
    ProblemSpec s;
    s.name = "synthetic-bounded";
    s.m = s.n = s.d = 1;
    s.T = 1.0;
    s.terminal = [amp, phase](const PathView& path, Eigen::Ref<Eigen::VectorXd> out) {
        out[0] = amp * std::sin(path.at(path.upto, 0) + phase);
    };
    if (drift != 0.0) {
        s.f = [drift](double, const PathView&, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                      Eigen::Ref<Eigen::VectorXd> out) { out[0] = drift; };
    }
    s.constants = {.K = 1.0, .C = 1.0, .C_g = 0.0, .C_bar = 0.0, .M_ell = 2.0};
    return s;
}

}  // namespace synth

// ---------------------------------------------------------------------------
// 8. Two-solution stability estimate on random problem pairs.
// ---------------------------------------------------------------------------
CriterionResult c08_stability(const Ctx& ctx) {
    CriterionResult r{8, "stability-estimate"};
    const int steps = 20;
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-6, 50};
    const TimeGrid grid = TimeGrid::uniform(1.0, steps);
    const PathBundle bundle = simulate_brownian(grid, 1, 10000, salt(ctx, 8, 0));

    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const ProblemSpec a = synth::bounded_pair_member(
            0.3 + 0.7 * u01(ctx, 8, k, 0), u01(ctx, 8, k, 1), 0.5 * u01(ctx, 8, k, 2));
        const ProblemSpec b = synth::bounded_pair_member(
            0.3 + 0.7 * u01(ctx, 8, k, 3), u01(ctx, 8, k, 4), 0.5 * u01(ctx, 8, k, 5));
        const DiscreteSolution sol_a = solve_lipschitz_bsde(a, 0, steps, bundle, basis, cfg);
        const DiscreteSolution sol_b = solve_lipschitz_bsde(b, 0, steps, bundle, basis, cfg);
        const StabilityGapReport rep = stability_gap(a, sol_a, b, sol_b, bundle, 0);
        if (rep.rhs > 0.0) worst = std::max(worst, rep.lhs / rep.rhs);
    }

    r.observed = worst;
    r.limit = ctx.tol.slack(1.10);
    r.pass = worst <= r.limit;
    r.detail = "20 synthesized pairs at the interval start, worst lhs/rhs " + fnum(worst);
    return r;
}

// ---------------------------------------------------------------------------
// 9. Measure-change construction: density mean, residuals against the
//    regression-noise budget, and refinement of the backward defect.
// ---------------------------------------------------------------------------
CriterionResult c09_measure_change(const Ctx& ctx) {
    CriterionResult r{9, "measure-change"};
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-6, 50};

    // Affine entry: fields under the reference measure, then the drifted
    // construction on fresh noise.
    const ProblemSpec affine = lookup_catalog("linear-drift", {{"T", 1.0}});
    const int steps = 50;
    const int n_paths = 50000;
    const TimeGrid grid = TimeGrid::uniform(1.0, steps);
    const PathBundle reference = simulate_brownian(grid, 1, n_paths, salt(ctx, 9, 0));
    const PartitionPlan plan = plan_for_route(affine, "lipschitz");
    const GlobalSolution gs = solve_global_lipschitz_g(affine, reference, plan, basis, cfg);

    const PathBundle noise = simulate_brownian(grid, 1, n_paths, salt(ctx, 9, 1));
    const ViaBsdeResult via = fbsde_via_bsde(affine, gs.solution, noise);

    RowMat theta(n_paths, steps);
    {
        Eigen::VectorXd gval(1), yv(1);
        Eigen::MatrixXd zv(1, 1);
        for (int p = 0; p < n_paths; ++p) {
            for (int i = 0; i < steps; ++i) {
                yv(0) = via.triple.y(p, i);
                zv(0, 0) = via.triple.z(p, i);
                affine.eval_g(grid.node(i), via.triple.x.view(p, i), yv, zv, gval);
                theta(p, i) = gval(0);
            }
        }
    }
    const GirsanovWeights weights = stochastic_exponential(theta, noise);
    const double z_score = std::abs(weights.mean_weight - 1.0) /
                           std::max(weights.se_weight, 1e-300);

    const FbsdeResidualReport res = fbsde_residual(via.triple, affine, noise);
    double y_rms = 0.0;
    for (double v : gs.solution.y_residual_rms) y_rms = std::max(y_rms, v);
    const double control_tol =
        y_rms / std::sqrt(static_cast<double>(n_paths)) * std::sqrt(static_cast<double>(steps)) *
            10.0 +
        1e-10;
    const double worst_res = std::max({res.terminal, res.backward, res.forward});

    // Refinement study: freeze the exact decoupling fields of the
    // square-terminal entry and measure the backward defect of the induced
    // candidate on coarser grids. The defect is then exactly the
    // quadratic-variation remainder, so it must shrink strictly as the grid
    // doubles. (Fitted fields would not do here: their z noise enters the
    // defect with a grid-independent variance and buries the refinement.)
    const ProblemSpec square = lookup_catalog("quad-terminal", {{"T", 1.0}});

    double defect[3] = {0.0, 0.0, 0.0};
    const int sizes[3] = {50, 100, 200};
    for (int s = 0; s < 3; ++s) {
        const int m = sizes[s];
        const TimeGrid coarse = TimeGrid::uniform(1.0, m);
        const PathBundle w = simulate_brownian(coarse, 1, 20000,
                                               salt(ctx, 9, 10 + static_cast<std::uint64_t>(s)));
        CoupledIterate candidate;
        candidate.x = w;
        candidate.x.kind = PathKind::forward_state;
        candidate.y = RowMat::Zero(w.n_paths, coarse.node_count());
        candidate.z = RowMat::Zero(w.n_paths, m);
        for (int p = 0; p < w.n_paths; ++p) {
            for (int i = 0; i <= m; ++i) {
                const double x = w.value(p, i, 0);
                candidate.y(p, i) = square.exact_y_1d(coarse.node(i), x);
                if (i < m) {
                    candidate.z(p, i) = square.exact_z_1d(coarse.node(i), x);
                }
            }
        }
        defect[s] = fbsde_residual(candidate, square, w).backward;
    }
    const bool decreasing = defect[1] < defect[0] && defect[2] < defect[1];
    const double worst_ratio = std::max(defect[1] / defect[0], defect[2] / defect[1]);

    r.observed = z_score;
    r.limit = ctx.tol.abs(3.0);
    r.pass = z_score <= r.limit && worst_res <= 3.0 * control_tol * ctx.tol.scale && decreasing &&
             worst_ratio < ctx.tol.scale;
    r.detail = "density mean " + fnum(weights.mean_weight) + " (" + fnum(z_score) +
               " se); residuals " + fnum(worst_res) + " <= " +
               fnum(3.0 * control_tol * ctx.tol.scale) + "; backward defect " + fnum(defect[0]) +
               " / " + fnum(defect[1]) + " / " + fnum(defect[2]) + " at 50/100/200 steps";
    return r;
}

// ---------------------------------------------------------------------------
// 10. Reflection machinery: explicit formula, wedge probes, orthant
//     reduction, solution-map Lipschitz bound and the constrained occupancy
//     law.
// ---------------------------------------------------------------------------
CriterionResult c10_reflection(const Ctx& ctx) {
    CriterionResult r{10, "reflection-suite"};
    const double tiny = ctx.tol.abs(1e-12);

    // (a) one-sided problem vs the explicit running-max formula.
    double formula_gap = 0.0;
    {
        const int steps = 200;
        for (int p = 0; p < 1000; ++p) {
            Eigen::VectorXd phi(steps + 1);
            phi(0) = 0.2;
            for (int i = 0; i < steps; ++i) {
                phi(i + 1) = phi(i) + 0.1 * rng::normal(salt(ctx, 10, 0), p, i, 0);
            }
            const ReflectedPath rp = skorokhod_1d(phi, 0.0);
            double running = 0.0;
            for (int i = 0; i <= steps; ++i) {
                running = std::max(running, -phi(i));
                const double explicit_value = phi(i) + std::max(0.0, running);
                formula_gap = std::max(formula_gap, std::abs(rp.values(i, 0) - explicit_value));
            }
        }
    }

    // (b) oblique wedge probes: invariance and boundary complementarity.
    double invariance = 0.0;
    double complementarity = 0.0;
    {
        Eigen::MatrixXd normals(2, 2), dirs(2, 2);
        normals << 1.0, 0.0, 0.0, 1.0;
        dirs << 1.0, 0.3, 0.4, 1.0;
        dirs.rowwise().normalize();
        const ReflectionSpec wedge =
            make_reflection_spec(normals, Eigen::VectorXd::Zero(2), dirs);
        for (int p = 0; p < 64; ++p) {
            Eigen::MatrixXd phi(101, 2);
            phi.row(0) << 0.3, 0.3;
            for (int i = 0; i < 100; ++i) {
                for (int c = 0; c < 2; ++c) {
                    phi(i + 1, c) =
                        phi(i, c) + 0.15 * rng::normal(salt(ctx, 10, 1), p, i,
                                                       static_cast<std::uint64_t>(c));
                }
            }
            const ReflectedPath rp = skorokhod_polyhedral(phi, wedge);
            for (int i = 0; i <= 100; ++i) {
                const double gap = boundary_gap(wedge, rp.values.row(i).transpose());
                invariance = std::max(invariance, -gap);
                if (i > 0 && rp.variation(i) > rp.variation(i - 1) + 1e-15) {
                    complementarity = std::max(complementarity, std::abs(gap));
                }
            }
        }
    }

    // (c) normal reflection on the orthant reduces to per-coordinate
    //     one-sided problems.
    double orthant_gap = 0.0;
    {
        Eigen::MatrixXd normals(2, 2);
        normals << 1.0, 0.0, 0.0, 1.0;
        const ReflectionSpec orthant =
            make_reflection_spec(normals, Eigen::VectorXd::Zero(2), normals);
        for (int p = 0; p < 64; ++p) {
            Eigen::MatrixXd phi(101, 2);
            phi.row(0) << 0.5, 0.25;
            for (int i = 0; i < 100; ++i) {
                for (int c = 0; c < 2; ++c) {
                    phi(i + 1, c) =
                        phi(i, c) + 0.2 * rng::normal(salt(ctx, 10, 2), p, i,
                                                      static_cast<std::uint64_t>(c));
                }
            }
            const ReflectedPath joint = skorokhod_polyhedral(phi, orthant);
            for (int c = 0; c < 2; ++c) {
                const ReflectedPath single = skorokhod_1d(phi.col(c), 0.0);
                orthant_gap = std::max(
                    orthant_gap, (joint.values.col(c) - single.values.col(0)).cwiseAbs().maxCoeff());
            }
        }
    }

    // (d) solution-map Lipschitz probe for a unit-Lipschitz drift.
    LipschitzCertificate lip;
    {
        const TimeGrid grid = TimeGrid::uniform(1.0, 100);
        const PathBundle driver = simulate_brownian(grid, 1, 2000, salt(ctx, 10, 3));
        PathPairDriftFn b = [](double, const PathView& phi, const PathView&,
                               Eigen::Ref<Eigen::VectorXd> out) {
            out(0) = -std::sin(phi.at(phi.upto, 0));
        };
        TimeVolFn vol = [](double, Eigen::Ref<Eigen::MatrixXd> out) { out.setIdentity(); };
        const PathBundle phi = sde_lipschitz_map(b, vol, driver, Eigen::VectorXd::Zero(1));
        lip = sde_lipschitz_certificate(phi, driver, 1.0);
    }

    // (e) constrained occupancy: terminal law of the doubly reflected motion.
    const double cdf_distance = rbm_uniform_cdf_distance(0.0, 1.0, 10.0, 20000, 100000,
                                                         salt(ctx, 10, 4));

    r.observed = cdf_distance;
    r.limit = ctx.tol.abs(0.02);
    r.pass = formula_gap <= tiny && invariance <= tiny && complementarity <= tiny &&
             orthant_gap <= tiny && lip.measured <= lip.declared * ctx.tol.slack(1.0 + 1e-9) &&
             cdf_distance <= r.limit;
    r.detail = "formula gap " + fnum(formula_gap) + ", invariance " + fnum(invariance) +
               ", complementarity " + fnum(complementarity) + ", orthant gap " + fnum(orthant_gap) +
               ", lipschitz " + fnum(lip.measured) + " <= " + fnum(lip.declared) +
               ", occupancy distance " + fnum(cdf_distance);
    return r;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------------------
// 11. Byte-level determinism of a full pipeline run and substream stability
//     of the path generator.
// ---------------------------------------------------------------------------
CriterionResult c11_determinism(const Ctx& ctx, const std::string& out_dir) {
    CriterionResult r{11, "determinism"};

    RunConfig cfg;
    cfg.route = "lipschitz";
    cfg.problem = "bounded-sine";
    cfg.params = {{"T", 1.0}};
    cfg.seed = ctx.seed;
    cfg.n_paths = 2000;
    cfg.steps = 10;
    cfg.quiet = true;

    int mismatched = 0;
    std::ostringstream sink;
    for (const char* leg : {"det-a", "det-b"}) {
        cfg.out_dir = (std::filesystem::path(out_dir) / leg).string();
        execute_run(cfg, sink);
    }
    for (const char* name : {"certificate.txt", "solution.csv"}) {
        const std::string a = read_bytes((std::filesystem::path(out_dir) / "det-a" / name).string());
        const std::string b = read_bytes((std::filesystem::path(out_dir) / "det-b" / name).string());
        if (a.empty() || a != b) ++mismatched;
    }

    // Path draws are pure functions of (seed, path, step, lane), so a bundle
    // prefix never depends on how many paths run alongside it.
    const TimeGrid grid = TimeGrid::uniform(1.0, 10);
    const PathBundle small = simulate_brownian(grid, 1, 1000, salt(ctx, 11, 0));
    const PathBundle large = simulate_brownian(grid, 1, 2000, salt(ctx, 11, 0));
    const bool prefix_stable =
        (small.values.array() == large.values.topRows(1000).array()).all();

    r.observed = static_cast<double>(mismatched);
    r.limit = 0.0;
    r.pass = mismatched == 0 && prefix_stable;
    r.detail = std::string("repeated runs byte-identical: ") + (mismatched == 0 ? "yes" : "NO") +
               "; ensemble prefix independent of ensemble size: " + (prefix_stable ? "yes" : "NO");
    return r;
}

// ---------------------------------------------------------------------------
// 12. Route consistency: the localized route degenerates bitwise on
//     driver-free problems, and a zero-deviation perturbation returns its
//     base bit for bit.
// ---------------------------------------------------------------------------
CriterionResult c12_route_consistency(const Ctx& ctx) {
    CriterionResult r{12, "route-consistency"};
    const ProblemSpec spec = lookup_catalog("bounded-sine", {{"T", 1.0}});
    const FeatureBasis basis = quadratic_basis(1);
    const SolverConfig cfg{1e-6, 50};
    const TimeGrid grid = TimeGrid::uniform(1.0, 50);
    const PathBundle bundle = simulate_brownian(grid, 1, 20000, salt(ctx, 12, 0));

    const PartitionPlan plan = plan_for_route(spec, "lipschitz");
    const GlobalSolution lip = solve_global_lipschitz_g(spec, bundle, plan, basis, cfg);
    const GlobalSolution sup = solve_global_superquadratic(spec, bundle, basis, cfg);

    long long mismatches = 0;
    mismatches += (lip.solution.y.array() != sup.solution.y.array()).count();
    mismatches += (lip.solution.z.array() != sup.solution.z.array()).count();
    for (std::size_t i = 0; i < lip.solution.y_coeffs.size(); ++i) {
        if (lip.solution.y_coeffs[i].size() != sup.solution.y_coeffs[i].size()) {
            ++mismatches;
        } else {
            mismatches += (lip.solution.y_coeffs[i].array() != sup.solution.y_coeffs[i].array()).count();
        }
    }

    const ProblemSpec target = lookup_catalog("bounded-sine", {{"T", 1.0}});
    const GlobalSolution per =
        solve_perturbed(target, spec, PerturbationConstants{1.0, 1.0}, bundle, basis, cfg);
    long long per_mismatches = 0;
    per_mismatches += (per.solution.y.array() != lip.solution.y.array()).count();
    per_mismatches += (per.solution.z.array() != lip.solution.z.array()).count();
    const bool zero_dev = per.margin.deviation == 0.0 && !per.rejected;

    r.observed = static_cast<double>(mismatches + per_mismatches);
    r.limit = 0.0;
    r.pass = mismatches == 0 && per_mismatches == 0 && zero_dev;
    r.detail = "localized-route value/coefficient mismatches " + std::to_string(mismatches) +
               "; zero-deviation return mismatches " + std::to_string(per_mismatches) +
               "; measured deviation " + fnum(per.margin.deviation);
    return r;
}

std::string result_line(const CriterionResult& c) {
    std::ostringstream os;
    os << "criterion " << (c.index < 10 ? "0" : "") << c.index << " " << c.name << ": "
       << (c.pass ? "PASS" : "FAIL") << " (observed " << fnum(c.observed) << ", limit "
       << fnum(c.limit) << ") " << c.detail;
    return os.str();
}

}  // namespace

AcceptanceReport run_acceptance_suite(const AcceptanceOptions& options, std::ostream& log) {
    if (!(options.tolerance_scale > 0.0)) {
        throw PreconditionError("acceptance: tolerance scale must be positive");
    }
    Ctx ctx{options.seed, Tol{options.tolerance_scale}};
    const std::string out_dir = options.out_dir.empty() ? "acceptance-out" : options.out_dir;
    std::filesystem::create_directories(out_dir);

    AcceptanceReport report;
    std::ostringstream head;
    head << "acceptance suite\nseed: " << options.seed
         << "\ntolerance scale: " << fnum(options.tolerance_scale) << "\n";
    log << head.str();

    using Runner = std::function<CriterionResult()>;
    const std::vector<Runner> criteria = {
        [&] { return c01_constants(ctx); },
        [&] { return c02_planner(ctx); },
        [&] { return c03_oracle_match(ctx); },
        [&] { return c04_z_bound(ctx); },
        [&] { return c05_contraction(ctx); },
        [&] { return c06_decoupling(ctx); },
        [&] { return c07_exponential_transform(ctx); },
        [&] { return c08_stability(ctx); },
        [&] { return c09_measure_change(ctx); },
        [&] { return c10_reflection(ctx); },
        [&] { return c11_determinism(ctx, out_dir); },
        [&] { return c12_route_consistency(ctx); },
    };
    const char* names[] = {"constants-exactness", "planner-soundness",    "solver-oracle-match",
                           "z-bound-certificate", "coupled-contraction",  "decoupling-lipschitz",
                           "exponential-transform", "stability-estimate", "measure-change",
                           "reflection-suite",    "determinism",          "route-consistency"};

    bool all = true;
    std::ostringstream body, csv;
    csv << "index,name,pass,observed,limit\n";
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        CriterionResult c;
        try {
            c = criteria[i]();
        } catch (const std::exception& e) {
            c.index = static_cast<int>(i) + 1;
            c.name = names[i];
            c.pass = false;
            c.observed = std::numeric_limits<double>::quiet_NaN();
            c.limit = 0.0;
            c.detail = std::string("error: ") + e.what();
        }
        const std::string line = result_line(c);
        log << line << "\n";
        body << line << "\n";
        csv << c.index << "," << c.name << "," << (c.pass ? 1 : 0) << "," << fnum(c.observed)
            << "," << fnum(c.limit) << "\n";
        all = all && c.pass;
        report.results.push_back(std::move(c));
    }

    int passed = 0;
    for (const auto& c : report.results) passed += c.pass ? 1 : 0;
    std::ostringstream tail;
    tail << "summary: " << passed << "/" << report.results.size() << " pass\n";
    log << tail.str();

    report.all_pass = all;
    report.text = head.str() + body.str() + tail.str();
    report.csv = csv.str();

    {
        std::ofstream txt((std::filesystem::path(out_dir) / "report.txt").string(),
                          std::ios::binary);
        txt << report.text;
        std::ofstream table((std::filesystem::path(out_dir) / "report.csv").string(),
                            std::ios::binary);
        table << report.csv;
    }
    return report;
}

}  // namespace bsde

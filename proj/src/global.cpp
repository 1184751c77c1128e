#include "bsde/global.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

constexpr int kProbeTarget = 256;     // path subsample size for field probes
constexpr double kActiveTol = 1e-3;   // localizer activity admitted as "inactive"
constexpr double kDomainTol = 5e-2;   // tolerated pre-clamp positivity loss per node

void check_bundle(const ProblemSpec& spec, const PathBundle& bundle) {
    if (bundle.dim != spec.n)
        throw PreconditionError("path bundle dimension " + std::to_string(bundle.dim) +
                                " does not match the driving dimension " + std::to_string(spec.n));
    double horizon = bundle.grid.horizon;
    if (std::abs(horizon - spec.T) > 1e-12 * std::max(1.0, std::abs(spec.T)))
        throw PreconditionError("bundle horizon " + std::to_string(horizon) +
                                " differs from the problem horizon " + std::to_string(spec.T));
}

Eigen::MatrixXd terminal_matrix(const ProblemSpec& spec, const PathBundle& bundle, int node) {
    Eigen::MatrixXd terminal(bundle.n_paths, spec.d);
    Eigen::VectorXd xi(spec.d);
    for (int p = 0; p < bundle.n_paths; ++p) {
        spec.eval_terminal(bundle.view(p, node), xi);
        terminal.row(p) = xi.transpose();
    }
    return terminal;
}

// Total driver f + L(z) g(., L(z)) with the radial truncation applied to
// every z the structured part sees. When |z| stays inside the radius the
// untruncated matrix is passed through untouched.
TotalDriverFn make_glued_driver(const ProblemSpec& spec, const PathBundle& bundle, double radius) {
    if (!spec.has_f() && !spec.has_g()) return TotalDriverFn();
    const ProblemSpec* sp = &spec;
    const PathBundle* pb = &bundle;
    auto gbuf = std::make_shared<Eigen::VectorXd>(spec.n);
    auto zbuf = std::make_shared<Eigen::MatrixXd>(spec.d, spec.n);
    return [sp, pb, radius, gbuf, zbuf](int node, int path, double t, const Eigen::VectorXd& y,
                                        const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out) {
        PathView view = pb->view(path, node);
        if (sp->has_f())
            sp->eval_f(t, view, y, z, out);
        else
            out.setZero();
        if (!sp->has_g()) return;
        double nrm = z.norm();
        if (nrm > radius) {
            zbuf->noalias() = (radius / nrm) * z;
            sp->eval_g(t, view, y, *zbuf, *gbuf);
            out.noalias() += (*zbuf) * (*gbuf);
        } else {
            sp->eval_g(t, view, y, z, *gbuf);
            out.noalias() += z * (*gbuf);
        }
    };
}

double active_fraction(const DiscreteSolution& sol, double radius) {
    long long active = 0;
    long long total = 0;
    for (int i = sol.first_node; i < sol.last_node; ++i)
        for (int p = 0; p < sol.n_paths; ++p) {
            ++total;
            if (sol.z_at(p, i).norm() > radius) ++active;
        }
    return total > 0 ? static_cast<double>(active) / static_cast<double>(total) : 0.0;
}

// Backward gluing over the plan's levels with fitted-value chaining at the
// interior boundaries.
GlobalSolution glue_levels(const ProblemSpec& spec, const PathBundle& bundle,
                           const PartitionPlan& plan, const FeatureBasis& basis,
                           const SolverConfig& config, double radius, const char* route) {
    check_bundle(spec, bundle);
    const TimeGrid& grid = bundle.grid;
    int steps = grid.steps;
    long long levels = plan.levels;
    if (levels <= 0) throw PreconditionError("partition plan carries no levels");
    if (levels > steps || steps % levels != 0)
        throw GridError("grid with " + std::to_string(steps) +
                        " steps cannot be split into " + std::to_string(levels) +
                        " equal levels; steps must be a positive multiple of the level count");
    int block = steps / static_cast<int>(levels);

    GlobalSolution out;
    out.plan = plan;
    out.route = route;
    out.localizer_radius = radius;

    DiscreteSolution& whole = out.solution;
    whole.grid = grid;
    whole.d = spec.d;
    whole.n = spec.n;
    whole.n_paths = bundle.n_paths;
    whole.first_node = 0;
    whole.last_node = steps;
    whole.y = RowMat::Zero(bundle.n_paths, static_cast<Eigen::Index>(steps + 1) * spec.d);
    whole.z = RowMat::Zero(bundle.n_paths, static_cast<Eigen::Index>(steps) * spec.d * spec.n);
    whole.y_coeffs.resize(static_cast<std::size_t>(steps + 1));
    whole.z_coeffs.resize(static_cast<std::size_t>(steps));
    whole.basis = basis;
    whole.y_residual_rms.assign(static_cast<std::size_t>(steps + 1), 0.0);
    whole.z_residual_rms.assign(static_cast<std::size_t>(steps), 0.0);
    whole.z_abs_max.assign(static_cast<std::size_t>(steps), 0.0);
    whole.converged = true;

    Eigen::MatrixXd terminal = terminal_matrix(spec, bundle, steps);
    TotalDriverFn driver = make_glued_driver(spec, bundle, radius);

    for (long long j = 1; j <= levels; ++j) {
        int right = steps - static_cast<int>(j - 1) * block;
        int left = right - block;

        BackwardProblem bp;
        bp.features = &bundle;
        bp.noise = &bundle;
        bp.first_node = left;
        bp.last_node = right;
        bp.d = spec.d;
        bp.terminal = terminal;
        bp.driver = driver;

        DiscreteSolution level;
        try {
            level = solve_backward(bp, basis, config);
        } catch (const DivergenceError& err) {
            throw DivergenceError("level " + std::to_string(j) + " of " + std::to_string(levels) +
                                  " (nodes " + std::to_string(left) + ".." + std::to_string(right) +
                                  "): " + err.what());
        }

        // The right boundary of every level after the first belongs to the
        // level already solved; its regression produced the chained values.
        int top = (j == 1) ? right : right - 1;
        for (int i = left; i <= top; ++i) {
            whole.y_block(i) = level.y_block(i);
            whole.y_coeffs[static_cast<std::size_t>(i)] =
                level.y_coeffs[static_cast<std::size_t>(i)];
            whole.y_residual_rms[static_cast<std::size_t>(i)] =
                level.y_residual_rms[static_cast<std::size_t>(i)];
        }
        for (int i = left; i < right; ++i) {
            whole.z_block(i) = level.z_block(i);
            whole.z_coeffs[static_cast<std::size_t>(i)] =
                level.z_coeffs[static_cast<std::size_t>(i)];
            whole.z_residual_rms[static_cast<std::size_t>(i)] =
                level.z_residual_rms[static_cast<std::size_t>(i)];
            whole.z_abs_max[static_cast<std::size_t>(i)] =
                level.z_abs_max[static_cast<std::size_t>(i)];
        }

        whole.picard_iterations = std::max(whole.picard_iterations, level.picard_iterations);
        whole.converged = whole.converged && level.converged;
        whole.gaps.insert(whole.gaps.end(), level.gaps.begin(), level.gaps.end());
        whole.gap_ratios.insert(whole.gap_ratios.end(), level.gap_ratios.begin(),
                                level.gap_ratios.end());

        terminal = level.y_block(left);
        out.level_left_nodes.push_back(left);
        out.level_snapshots.push_back(level.y_coeffs[static_cast<std::size_t>(left)]);
    }

    out.localizer_active_fraction = active_fraction(whole, radius);
    out.localizer_self_consistent = out.localizer_active_fraction <= kActiveTol;
    return out;
}

ZBoundCertificate z_bound_certificate(const DiscreteSolution& sol, const PathBundle& bundle,
                                      double K, double C) {
    ZBoundCertificate cert;
    cert.checked = true;
    const TimeGrid& grid = sol.grid;
    double horizon = grid.horizon;
    int steps = sol.last_node - sol.first_node;
    cert.bound.assign(static_cast<std::size_t>(steps), 0.0);
    cert.observed.assign(static_cast<std::size_t>(steps), 0.0);
    bool derivative_route = !sol.basis.path_dependent();
    int stride = std::max(1, bundle.n_paths / kProbeTarget);

    bool ok = true;
    double worst = 0.0;
    for (int i = sol.first_node; i < sol.last_node; ++i) {
        std::size_t slot = static_cast<std::size_t>(i - sol.first_node);
        cert.bound[slot] = std::sqrt(rho(horizon - grid.node(i), K, C));
        double observed = 0.0;
        if (i == sol.first_node || !derivative_route) {
            // Degenerate or path-functional fits: take the pathwise maximum
            // straight from the projection.
            observed = sol.z_abs_max[static_cast<std::size_t>(i)];
        } else {
            Eigen::VectorXd x(bundle.dim);
            auto probe = [&](int p) {
                for (int c = 0; c < bundle.dim; ++c) x(c) = bundle.value(p, i, c);
                observed = std::max(observed, eval_z_field_derivative(sol, i, x).norm());
            };
            for (int p = 0; p < bundle.n_paths; p += stride) probe(p);
            for (int c = 0; c < bundle.dim; ++c) {
                int lo = 0, hi = 0;
                for (int p = 1; p < bundle.n_paths; ++p) {
                    if (bundle.value(p, i, c) < bundle.value(lo, i, c)) lo = p;
                    if (bundle.value(p, i, c) > bundle.value(hi, i, c)) hi = p;
                }
                probe(lo);
                probe(hi);
            }
        }
        cert.observed[slot] = observed;
        if (cert.bound[slot] > 0.0) worst = std::max(worst, observed / cert.bound[slot]);
        if (observed > cert.bound[slot] * (1.0 + cert.slack)) ok = false;
    }
    cert.worst_ratio = worst;
    cert.pass = ok;
    return cert;
}

double band_excess(double value, double lo, double hi) {
    if (value < lo) return (lo - value) / lo;
    if (value > hi) return (value - hi) / hi;
    return 0.0;
}

}  // namespace

Eigen::MatrixXd localize(const Eigen::Ref<const Eigen::MatrixXd>& z, double radius) {
    if (!(radius > 0.0)) throw PreconditionError("localizer radius must be positive");
    double nrm = z.norm();
    if (nrm <= radius) return z;
    return (radius / nrm) * z;
}

namespace {

// Constants of the exponential-transformed problem the diagonal route solves.
void diagonal_transformed_constants(const ProblemSpec& spec, double& k_t, double& c_t) {
    const double K = spec.constants.K;
    const double C = spec.constants.C;
    const double amax = spec.diag_a.cwiseAbs().maxCoeff();
    const double scale = 2.0 * amax * std::exp(2.0 * amax * C);
    k_t = K * scale * scale;
    c_t = 0.0;
    for (int c = 0; c < spec.d; ++c) c_t += std::exp(4.0 * std::abs(spec.diag_a(c)) * C);
    c_t = std::max(c_t, 1.0);
}

}  // namespace

PartitionPlan plan_for_route(const ProblemSpec& spec, const std::string& route,
                             long long level_cap) {
    const double K = spec.constants.K;
    const double C = spec.constants.C;
    if (route == "lipschitz" || route == "perturbed") {
        return plan_partition(K, C, spec.constants.C_g, spec.T, level_cap);
    }
    if (route == "superquadratic") {
        if (!spec.growth_l)
            throw PreconditionError("superquadratic route needs the |z|-growth envelope of the "
                                    "structured part");
        const double effective = superquadratic_effective_cg(spec.growth_l, K, C, spec.T);
        return plan_partition(K, C, effective, spec.T, level_cap);
    }
    if (route == "diagonal") {
        if (!spec.is_diagonal_quadratic())
            throw PreconditionError("diagonal route needs per-coordinate quadratic weights");
        double k_t = 0.0, c_t = 0.0;
        diagonal_transformed_constants(spec, k_t, c_t);
        return plan_partition(k_t, c_t, 0.0, spec.T, level_cap);
    }
    throw PreconditionError("no partition plan for route '" + route + "'");
}

GlobalSolution solve_global_lipschitz_g(const ProblemSpec& spec, const PathBundle& bundle,
                                        const PartitionPlan& plan, const FeatureBasis& basis,
                                        const SolverConfig& config) {
    double radius = std::sqrt(plan.horizon_cap);
    GlobalSolution out = glue_levels(spec, bundle, plan, basis, config, radius, "lipschitz");
    out.z_certificate =
        z_bound_certificate(out.solution, bundle, spec.constants.K, spec.constants.C);
    return out;
}

GlobalSolution solve_global_superquadratic(const ProblemSpec& spec, const PathBundle& bundle,
                                           const FeatureBasis& basis, const SolverConfig& config,
                                           long long level_cap) {
    if (!spec.growth_l)
        throw PreconditionError("superquadratic route needs the |z|-growth envelope of the "
                                "structured part");
    double K = spec.constants.K;
    double C = spec.constants.C;
    double radius = std::sqrt(rho(spec.T, K, C));
    double effective = superquadratic_effective_cg(spec.growth_l, K, C, spec.T);
    PartitionPlan plan = plan_partition(K, C, effective, spec.T, level_cap);
    GlobalSolution out = glue_levels(spec, bundle, plan, basis, config, radius, "superquadratic");
    out.z_certificate = z_bound_certificate(out.solution, bundle, K, C);
    return out;
}

GlobalSolution solve_diagonal_quadratic(const ProblemSpec& spec, const PathBundle& bundle,
                                        const FeatureBasis& basis, const SolverConfig& config,
                                        long long level_cap) {
    if (!spec.is_diagonal_quadratic())
        throw PreconditionError("diagonal route needs per-coordinate quadratic weights");
    if (spec.has_f() || spec.has_g())
        throw PreconditionError("diagonal route covers plain a^i |z^i|^2 drivers only "
                                "(no f, no structured part)");
    if (spec.d != spec.n || spec.diag_a.size() != spec.d)
        throw PreconditionError("diagonal quadratic drivers pair each y coordinate with one "
                                "z row; need matching dimensions");
    const Eigen::VectorXd& a = spec.diag_a;
    for (int c = 0; c < spec.d; ++c)
        if (a(c) == 0.0)
            throw PreconditionError("quadratic weight at coordinate " + std::to_string(c) +
                                    " is zero; the exponential transform is undefined there");

    double C = spec.constants.C;
    double cbar = spec.constants.C_bar;

    // Transformed problem: terminal e^{2 a xi}, no driver. The Lipschitz and
    // bound constants inflate through the exponential.
    double k_t = 0.0, c_t = 0.0;
    diagonal_transformed_constants(spec, k_t, c_t);

    ProblemSpec transformed;
    transformed.name = spec.name + "-transformed";
    transformed.m = spec.m;
    transformed.n = spec.n;
    transformed.d = spec.d;
    transformed.T = spec.T;
    transformed.markovian = spec.markovian;
    transformed.constants.K = k_t;
    transformed.constants.C = c_t;
    const ProblemSpec* base = &spec;
    Eigen::VectorXd avec = a;
    transformed.terminal = [base, avec](const PathView& path, Eigen::Ref<Eigen::VectorXd> out) {
        base->eval_terminal(path, out);
        for (Eigen::Index c = 0; c < out.size(); ++c) out(c) = std::exp(2.0 * avec(c) * out(c));
    };

    PartitionPlan plan = plan_partition(k_t, c_t, 0.0, spec.T, level_cap);
    double radius = std::sqrt(rho(spec.T, k_t, c_t));
    GlobalSolution out = glue_levels(transformed, bundle, plan, basis, config, radius, "diagonal");
    out.z_certificate = z_bound_certificate(out.solution, bundle, k_t, c_t);

    DiscreteSolution& sol = out.solution;
    const TimeGrid& grid = sol.grid;
    int steps = grid.steps;
    int n_paths = sol.n_paths;
    int d = spec.d;

    // Clamp band from the comparison argument: M = C + Cbar T on the original
    // scale, e^{+-2 a M} after the transform.
    double clamp_m = C + cbar * spec.T;
    Eigen::VectorXd clamp_lo(d), clamp_hi(d);
    for (int c = 0; c < d; ++c) {
        double e_minus = std::exp(-2.0 * a(c) * clamp_m);
        double e_plus = std::exp(2.0 * a(c) * clamp_m);
        clamp_lo(c) = std::min(e_minus, e_plus);
        clamp_hi(c) = std::max(e_minus, e_plus);
    }

    long long clamped = 0;
    for (int i = 0; i <= steps; ++i) {
        auto block = sol.y_block(i);
        long long nonpositive = 0;
        for (int p = 0; p < n_paths; ++p)
            for (int c = 0; c < d; ++c) {
                double v = block(p, c);
                if (v <= 0.0) ++nonpositive;
                double w = std::min(std::max(v, clamp_lo(c)), clamp_hi(c));
                if (w != v) {
                    block(p, c) = w;
                    ++clamped;
                }
            }
        double bad = static_cast<double>(nonpositive) / static_cast<double>(n_paths * d);
        if (bad > kDomainTol)
            throw TransformDomainError(
                "transformed solution loses positivity on " + std::to_string(bad * 100.0) +
                "% of paths at node " + std::to_string(i) +
                "; the logarithm inversion is invalid for this problem size");
    }
    out.clamp_fraction =
        static_cast<double>(clamped) / (static_cast<double>(n_paths) * (steps + 1) * d);

    // Comparison envelope on the transformed scale, band shrinking toward the
    // horizon. Means carry the certificate; pathwise excess is advisory.
    EnvelopeCertificate env;
    env.checked = true;
    env.mirrored = (a.minCoeff() < 0.0);
    for (int i = 0; i <= steps; ++i) {
        double width = C + cbar * (spec.T - grid.node(i));
        auto block = sol.y_block(i);
        for (int c = 0; c < d; ++c) {
            double e_minus = std::exp(-2.0 * a(c) * width);
            double e_plus = std::exp(2.0 * a(c) * width);
            double lo = std::min(e_minus, e_plus);
            double hi = std::max(e_minus, e_plus);
            env.worst_mean_excess =
                std::max(env.worst_mean_excess, band_excess(block.col(c).mean(), lo, hi));
            for (int p = 0; p < n_paths; ++p)
                env.worst_path_excess =
                    std::max(env.worst_path_excess, band_excess(block(p, c), lo, hi));
        }
    }
    env.mean_pass = env.worst_mean_excess == 0.0;
    env.path_pass = env.worst_path_excess <= env.path_slack;
    out.envelope = env;

    // Invert in place: Y = log(Ybar)/(2a), Z = Zbar/(2a Ybar), Ybar read at
    // the left node of each step.
    for (int i = 0; i < steps; ++i) {
        auto zb = sol.z_block(i);
        auto yb = sol.y_block(i);
        for (int p = 0; p < n_paths; ++p)
            for (int c = 0; c < d; ++c) {
                double denom = 2.0 * a(c) * yb(p, c);
                for (int k = 0; k < sol.n; ++k) zb(p, c * sol.n + k) /= denom;
            }
    }
    for (int i = 0; i <= steps; ++i) {
        auto yb = sol.y_block(i);
        for (int p = 0; p < n_paths; ++p)
            for (int c = 0; c < d; ++c) yb(p, c) = std::log(yb(p, c)) / (2.0 * a(c));
    }

    // Refit the value and projection fields on the original scale.
    for (int i = 0; i <= steps; ++i) {
        RowMat design = design_matrix(basis, bundle, i);
        RegressionResult fit = regress(design, sol.y_block(i));
        sol.y_coeffs[static_cast<std::size_t>(i)] = std::move(fit.coeffs);
        sol.y_residual_rms[static_cast<std::size_t>(i)] = fit.residual_rms;
        if (i < steps) {
            RegressionResult zfit = regress(design, sol.z_block(i));
            sol.z_coeffs[static_cast<std::size_t>(i)] = std::move(zfit.coeffs);
            sol.z_residual_rms[static_cast<std::size_t>(i)] = zfit.residual_rms;
            double zmax = 0.0;
            for (int p = 0; p < n_paths; ++p) zmax = std::max(zmax, sol.z_at(p, i).norm());
            sol.z_abs_max[static_cast<std::size_t>(i)] = zmax;
        }
    }
    return out;
}

GlobalSolution solve_perturbed(const ProblemSpec& target, const ProblemSpec& base,
                               const PerturbationConstants& constants, const PathBundle& bundle,
                               const FeatureBasis& basis, const SolverConfig& config,
                               long long level_cap) {
    if (target.d != base.d || target.n != base.n)
        throw PreconditionError("target and base problems must share dimensions");
    if (!(constants.c_y > 0.0) || !(constants.c_z > 0.0))
        throw PreconditionError("perturbation derivative bounds must be positive");

    PartitionPlan plan = plan_partition(base.constants.K, base.constants.C, base.constants.C_g,
                                        base.T, level_cap);
    GlobalSolution out = solve_global_lipschitz_g(base, bundle, plan, basis, config);
    out.route = "perturbed";

    DiscreteSolution& sol = out.solution;
    const TimeGrid& grid = sol.grid;
    int steps = grid.steps;
    int n_paths = sol.n_paths;
    int d = sol.d;

    BsdeDriverFn target_driver = structured_driver(target);
    BsdeDriverFn base_driver = structured_driver(base);

    // Sampled deviation: sup over paths of |dxi| + int |F - Fbar| dt along
    // the base solution.
    Eigen::MatrixXd dxi = terminal_matrix(target, bundle, steps) - sol.y_block(steps);
    double deviation = 0.0;
    {
        Eigen::VectorXd ft(d), fb(d);
        for (int p = 0; p < n_paths; ++p) {
            double acc = dxi.row(p).norm();
            for (int i = 0; i < steps; ++i) {
                PathView view = bundle.view(p, i);
                Eigen::VectorXd ybar = sol.y_at(p, i);
                Eigen::MatrixXd zbar = sol.z_at(p, i);
                target_driver(grid.node(i), view, ybar, zbar, ft);
                base_driver(grid.node(i), view, ybar, zbar, fb);
                acc += (ft - fb).norm() * grid.step;
            }
            deviation = std::max(deviation, acc);
        }
    }

    out.margin = tevzadze_margin(constants.c_y, constants.c_z, grid.horizon, deviation);
    if (!out.margin.pass) {
        out.rejected = true;
        return out;
    }

    // Difference equation for (P, Q); the base solution rides along inside
    // the driver and the increments stay truncated at the smallness radius.
    double radius = std::sqrt(out.margin.threshold);
    out.localizer_radius = radius;
    const PathBundle* pb = &bundle;
    const DiscreteSolution* base_sol = &sol;
    auto fbuf = std::make_shared<Eigen::VectorXd>(d);
    TotalDriverFn diff_driver = [target_driver, base_driver, pb, base_sol, radius, fbuf](
                                    int node, int path, double t, const Eigen::VectorXd& p,
                                    const Eigen::MatrixXd& q, Eigen::Ref<Eigen::VectorXd> out_v) {
        PathView view = pb->view(path, node);
        Eigen::VectorXd ybar = base_sol->y_at(path, node);
        Eigen::MatrixXd zbar = base_sol->z_at(path, node);
        double pn = p.norm();
        Eigen::VectorXd y_arg = (pn > radius ? ((radius / pn) * p).eval() : p) + ybar;
        double qn = q.norm();
        Eigen::MatrixXd z_arg = (qn > radius ? ((radius / qn) * q).eval() : q) + zbar;
        target_driver(t, view, y_arg, z_arg, out_v);
        base_driver(t, view, ybar, zbar, *fbuf);
        out_v -= *fbuf;
    };

    BackwardProblem bp;
    bp.features = &bundle;
    bp.noise = &bundle;
    bp.first_node = 0;
    bp.last_node = steps;
    bp.d = d;
    bp.terminal = dxi;
    bp.driver = diff_driver;
    DiscreteSolution diff = solve_backward(bp, basis, config);

    sol.y += diff.y;
    sol.z += diff.z;
    for (int i = 0; i <= steps; ++i)
        sol.y_coeffs[static_cast<std::size_t>(i)] += diff.y_coeffs[static_cast<std::size_t>(i)];
    for (int i = 0; i < steps; ++i) {
        sol.z_coeffs[static_cast<std::size_t>(i)] += diff.z_coeffs[static_cast<std::size_t>(i)];
        double zmax = 0.0;
        for (int p = 0; p < n_paths; ++p) zmax = std::max(zmax, sol.z_at(p, i).norm());
        sol.z_abs_max[static_cast<std::size_t>(i)] = zmax;
    }
    sol.picard_iterations = std::max(sol.picard_iterations, diff.picard_iterations);
    sol.converged = sol.converged && diff.converged;
    out.localizer_active_fraction = active_fraction(diff, radius);
    out.localizer_self_consistent = out.localizer_active_fraction <= kActiveTol;
    // Existence-only regime: the z-field bound is not claimed here.
    out.z_certificate = ZBoundCertificate{};
    return out;
}

void diagonal_forward(const Eigen::VectorXd& a, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::MatrixXd>& z, Eigen::Ref<Eigen::VectorXd> ybar,
                      Eigen::Ref<Eigen::MatrixXd> zbar) {
    if (y.size() != a.size() || z.rows() != a.size())
        throw PreconditionError("transform dimensions do not match the weight vector");
    for (Eigen::Index c = 0; c < a.size(); ++c) {
        double yb = std::exp(2.0 * a(c) * y(c));
        ybar(c) = yb;
        zbar.row(c) = 2.0 * a(c) * yb * z.row(c);
    }
}

void diagonal_inverse(const Eigen::VectorXd& a, const Eigen::Ref<const Eigen::VectorXd>& ybar,
                      const Eigen::Ref<const Eigen::MatrixXd>& zbar, Eigen::Ref<Eigen::VectorXd> y,
                      Eigen::Ref<Eigen::MatrixXd> z) {
    if (ybar.size() != a.size() || zbar.rows() != a.size())
        throw PreconditionError("transform dimensions do not match the weight vector");
    for (Eigen::Index c = 0; c < a.size(); ++c) {
        if (!(ybar(c) > 0.0))
            throw TransformDomainError("transformed value " + std::to_string(ybar(c)) +
                                       " at coordinate " + std::to_string(c) +
                                       " is not positive; the logarithm is undefined");
        y(c) = std::log(ybar(c)) / (2.0 * a(c));
        z.row(c) = zbar.row(c) / (2.0 * a(c) * ybar(c));
    }
}

}  // namespace bsde

#include "bsde/fbsde_local.hpp"

#include <cmath>
#include <string>

#include "bsde/errors.hpp"
#include "bsde/rng.hpp"

namespace bsde {

namespace {

PathBundle constant_continuation(const PathPrefix& prefix, const PathBundle& noise) {
    PathBundle x;
    x.grid = noise.grid;
    x.dim = prefix.dim;
    x.n_paths = noise.n_paths;
    x.seed = noise.seed;
    x.kind = PathKind::forward_state;
    x.values.resize(noise.n_paths, static_cast<Eigen::Index>(x.grid.node_count()) * x.dim);
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(x.grid.node_count()) * x.dim);
    for (int j = 0; j < x.grid.node_count(); ++j) {
        const int src = std::min(j, prefix.upto);
        for (int k = 0; k < x.dim; ++k) {
            row(static_cast<Eigen::Index>(j) * x.dim + k) = prefix.values(src, k);
        }
    }
    x.values.rowwise() = row;
    return x;
}

}  // namespace

CoupledIterate picard_map(const CoupledIterate& prev, const ProblemSpec& spec,
                          const PathPrefix& prefix, const PathBundle& noise,
                          const FeatureBasis& basis, const SolverConfig& config,
                          DiscreteSolution* backward_out) {
    if (spec.m != spec.n) {
        throw PreconditionError(
            "picard_map: structured coupling needs matching forward and noise dimensions");
    }
    if (prefix.dim != spec.m || noise.dim != spec.n) {
        throw PreconditionError("picard_map: prefix or noise dimension mismatch");
    }
    if (prefix.grid.steps != noise.grid.steps || prefix.grid.horizon != noise.grid.horizon) {
        throw PreconditionError("picard_map: prefix and noise grids differ");
    }
    const int first = prefix.upto;
    const int last = noise.grid.steps;
    const int m = spec.m;
    const int n = spec.n;
    const int d = spec.d;
    const int n_paths = noise.n_paths;
    const double delta = noise.grid.step;
    if (first >= last) {
        throw PreconditionError("picard_map: prefix already covers the horizon");
    }
    if (prev.x.n_paths != n_paths || prev.y.rows() != n_paths || prev.z.rows() != n_paths) {
        throw PreconditionError("picard_map: iterate path count mismatch");
    }

    CoupledIterate next;
    next.x.grid = noise.grid;
    next.x.dim = m;
    next.x.n_paths = n_paths;
    next.x.seed = noise.seed;
    next.x.kind = PathKind::forward_state;
    next.x.values.resize(n_paths, static_cast<Eigen::Index>(noise.grid.node_count()) * m);

    Eigen::VectorXd q(d), gout(n), xi(m), inc(m);
    Eigen::MatrixXd r(d, n), sig(m, n);
    for (int p = 0; p < n_paths; ++p) {
        for (int j = 0; j <= first; ++j) {
            for (int k = 0; k < m; ++k) {
                next.x.value(p, j, k) = prefix.values(j, k);
            }
        }
        for (int i = first; i < last; ++i) {
            const double t_i = noise.grid.nodes[static_cast<std::size_t>(i)];
            const PathView frozen = prev.x.view(p, i);
            for (int k = 0; k < m; ++k) {
                xi(k) = next.x.value(p, i, k);
            }
            if (spec.has_g()) {
                for (int rr = 0; rr < d; ++rr) {
                    q(rr) = prev.y(p, static_cast<Eigen::Index>(i) * d + rr);
                    for (int c = 0; c < n; ++c) {
                        r(rr, c) = prev.z(p, (static_cast<Eigen::Index>(i) * d + rr) * n + c);
                    }
                }
                spec.eval_g(t_i, frozen, q, r, gout);
            } else {
                gout.setZero();
            }
            if (spec.sigma_is_identity) {
                for (int k = 0; k < m; ++k) {
                    inc(k) = noise.increment(p, i, k);
                }
            } else {
                spec.eval_sigma(t_i, frozen, sig);
                for (int k = 0; k < m; ++k) {
                    double acc = 0.0;
                    for (int c = 0; c < n; ++c) {
                        acc += sig(k, c) * noise.increment(p, i, c);
                    }
                    inc(k) = acc;
                }
            }
            for (int k = 0; k < m; ++k) {
                const double v = xi(k) + gout(k) * delta + inc(k);
                if (!std::isfinite(v)) {
                    throw NumericBlowupError("picard_map: forward value not finite on path " +
                                             std::to_string(p) + " at step " + std::to_string(i));
                }
                next.x.value(p, i + 1, k) = v;
            }
        }
    }

    BackwardProblem bp;
    bp.features = &next.x;
    bp.noise = &noise;
    bp.first_node = first;
    bp.last_node = last;
    bp.d = d;
    bp.terminal.resize(n_paths, d);
    Eigen::VectorXd tv(d);
    for (int p = 0; p < n_paths; ++p) {
        spec.eval_terminal(next.x.view(p, last), tv);
        bp.terminal.row(p) = tv.transpose();
    }
    if (spec.has_f()) {
        const BsdeDriverFn f = spec.f;
        const PathBundle* xb = &next.x;
        bp.driver = [f, xb](int node, int path, double t, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out) {
            f(t, xb->view(path, node), y, z, out);
        };
    }
    DiscreteSolution sol = solve_backward(bp, basis, config);
    next.y = sol.y;
    next.z = sol.z;
    if (backward_out != nullptr) {
        *backward_out = std::move(sol);
    }
    return next;
}

double triple_gap(const CoupledIterate& a, const CoupledIterate& b, int first_node) {
    if (a.x.n_paths != b.x.n_paths || a.x.dim != b.x.dim || a.y.cols() != b.y.cols() ||
        a.z.cols() != b.z.cols()) {
        throw PreconditionError("triple_gap: iterates have different shapes");
    }
    const int n_paths = a.x.n_paths;
    const int node_count = a.x.grid.node_count();
    const int m = a.x.dim;
    const int d_cols = static_cast<int>(a.y.cols()) / node_count;
    const int steps = a.x.grid.steps;
    const int zn = steps > 0 ? static_cast<int>(a.z.cols()) / steps : 0;
    const double delta = a.x.grid.step;

    double sup_x = 0.0, sup_y = 0.0, int_z = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        double wx = 0.0, wy = 0.0;
        for (int j = first_node; j < node_count; ++j) {
            double dx2 = 0.0;
            for (int k = 0; k < m; ++k) {
                const double dv = a.x.value(p, j, k) - b.x.value(p, j, k);
                dx2 += dv * dv;
            }
            wx = std::max(wx, dx2);
            double dy2 = 0.0;
            for (int k = 0; k < d_cols; ++k) {
                const double dv = a.y(p, static_cast<Eigen::Index>(j) * d_cols + k) -
                                  b.y(p, static_cast<Eigen::Index>(j) * d_cols + k);
                dy2 += dv * dv;
            }
            wy = std::max(wy, dy2);
        }
        sup_x += wx;
        sup_y += wy;
        for (int i = first_node; i < steps; ++i) {
            double dz2 = 0.0;
            for (int k = 0; k < zn; ++k) {
                const double dv = a.z(p, static_cast<Eigen::Index>(i) * zn + k) -
                                  b.z(p, static_cast<Eigen::Index>(i) * zn + k);
                dz2 += dv * dv;
            }
            int_z += dz2 * delta;
        }
    }
    const double np = static_cast<double>(n_paths);
    return std::sqrt(sup_x / np) + std::sqrt(sup_y / np) + std::sqrt(int_z / np);
}

LocalFbsdeSolution solve_local_fbsde(const ProblemSpec& spec, const PathPrefix& prefix,
                                     const PathBundle& noise, const FeatureBasis& basis,
                                     const SolverConfig& config) {
    const double eps = noise.grid.horizon - noise.grid.nodes[static_cast<std::size_t>(prefix.upto)];
    const AssumptionConstants& ac = spec.constants;
    if (!eps_ok_contraction(ac.C, ac.C_g, ac.K, eps)) {
        throw SmallnessError("solve_local_fbsde: interval length " + std::to_string(eps) +
                             " fails the contraction admissibility check");
    }

    LocalFbsdeSolution out;
    out.basis = basis;
    out.first_node = prefix.upto;

    CoupledIterate cur;
    cur.x = constant_continuation(prefix, noise);
    cur.y = RowMat::Zero(noise.n_paths,
                         static_cast<Eigen::Index>(noise.grid.node_count()) * spec.d);
    cur.z = RowMat::Zero(noise.n_paths,
                         static_cast<Eigen::Index>(noise.grid.steps) * spec.d * spec.n);

    double prev_gap = 0.0;
    int bad = 0;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        DiscreteSolution backward;
        CoupledIterate next = picard_map(cur, spec, prefix, noise, basis, config, &backward);
        const double gap = triple_gap(cur, next, prefix.upto);
        out.contraction_log.push_back(gap);
        out.outer_iterations = iter;
        if (iter > 1 && prev_gap > 0.0) {
            const double ratio = gap / prev_gap;
            out.contraction_ratios.push_back(ratio);
            if (ratio >= 1.0) {
                if (++bad >= 3) {
                    throw ContractionFailureError(
                        "solve_local_fbsde: outer gap ratio >= 1 three times, measured " +
                        std::to_string(ratio));
                }
            } else {
                bad = 0;
            }
        }
        prev_gap = gap;
        cur = std::move(next);
        out.backward = std::move(backward);
        if (gap <= config.tol) {
            out.converged = true;
            break;
        }
    }
    out.triple = std::move(cur);

    const RowMat f_u = design_matrix(basis, out.triple.x, prefix.upto);
    const Eigen::MatrixXd y_u = out.triple.y.middleCols(
        static_cast<Eigen::Index>(prefix.upto) * spec.d, spec.d);
    out.decoupling_coeffs = regress(f_u, y_u).coeffs;
    return out;
}

double decoupling_lipschitz_probe(const ProblemSpec& spec, int first_node, const PathBundle& noise,
                                  const FeatureBasis& basis, const SolverConfig& config,
                                  int n_prefix_pairs, std::uint64_t seed) {
    if (n_prefix_pairs < 1) {
        throw PreconditionError("decoupling_lipschitz_probe: need at least one pair");
    }
    const int m = spec.m;
    double worst = 0.0;
    Eigen::RowVectorXd feat(basis.count());
    for (int j = 0; j < n_prefix_pairs; ++j) {
        Eigen::VectorXd xa(m), xb(m);
        for (int k = 0; k < m; ++k) {
            xa(k) = 0.5 * rng::normal(seed, static_cast<std::uint64_t>(j), 0,
                                      static_cast<std::uint64_t>(k));
            xb(k) = xa(k) + 0.3 * rng::normal(seed, static_cast<std::uint64_t>(j), 1,
                                              static_cast<std::uint64_t>(k));
        }
        const PathPrefix pa = PathPrefix::constant(noise.grid, xa, first_node);
        const PathPrefix pb = PathPrefix::constant(noise.grid, xb, first_node);
        const LocalFbsdeSolution sa = solve_local_fbsde(spec, pa, noise, basis, config);
        const LocalFbsdeSolution sb = solve_local_fbsde(spec, pb, noise, basis, config);

        // Fitted left-endpoint value: constant prefixes reduce the fit to the
        // intercept row, read it directly.
        const Eigen::VectorXd ka = sa.decoupling_coeffs.row(0).transpose();
        const Eigen::VectorXd kb = sb.decoupling_coeffs.row(0).transpose();
        const double dist2 = (xa - xb).squaredNorm();
        if (dist2 < 1e-20) continue;
        worst = std::max(worst, (ka - kb).squaredNorm() / dist2);
    }
    return worst;
}

AdaptednessReport adaptedness_diagnostic(const LocalFbsdeSolution& sol, const PathBundle& noise) {
    const int first = sol.first_node;
    const int last = noise.grid.steps;
    const int n_paths = noise.n_paths;
    const int d = sol.backward.d;
    const int n = sol.backward.n;

    FeatureBasis wbasis = sol.basis;
    wbasis.dim = noise.dim;

    double ss_res_x = 0.0, ss_res_w = 0.0, ss_tot = 0.0;
    for (int i = first + 1; i < last; ++i) {
        Eigen::MatrixXd targets(n_paths, d + d * n);
        targets.leftCols(d) =
            sol.triple.y.middleCols(static_cast<Eigen::Index>(i) * d, d);
        targets.rightCols(d * n) =
            sol.triple.z.middleCols(static_cast<Eigen::Index>(i) * d * n, d * n);
        const Eigen::RowVectorXd mean = targets.colwise().mean();
        const double tot = (targets.rowwise() - mean).squaredNorm();
        if (tot < 1e-18) continue;
        const RowMat fx = design_matrix(sol.basis, sol.triple.x, i);
        const RowMat fw = design_matrix(wbasis, noise, i);
        const RegressionResult rx = regress(fx, targets);
        const RegressionResult rw = regress(fw, targets);
        ss_res_x += (targets - rx.fitted).squaredNorm();
        ss_res_w += (targets - rw.fitted).squaredNorm();
        ss_tot += tot;
    }

    AdaptednessReport rep;
    if (ss_tot < 1e-18) {
        rep.x_explained = rep.w_explained = rep.explained_ratio = 1.0;
        return rep;
    }
    rep.x_explained = 1.0 - ss_res_x / ss_tot;
    rep.w_explained = 1.0 - ss_res_w / ss_tot;
    rep.explained_ratio =
        rep.w_explained > 1e-12 ? rep.x_explained / rep.w_explained : 1.0;
    return rep;
}

}  // namespace bsde

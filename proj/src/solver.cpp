#include "bsde/solver.hpp"

#include <cmath>
#include <string>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

void check_backward_problem(const BackwardProblem& bp) {
    if (bp.features == nullptr || bp.noise == nullptr) {
        throw PreconditionError("solve_backward: feature and noise bundles required");
    }
    const PathBundle& f = *bp.features;
    const PathBundle& w = *bp.noise;
    if (f.n_paths != w.n_paths || f.grid.steps != w.grid.steps ||
        f.grid.horizon != w.grid.horizon) {
        throw PreconditionError("solve_backward: feature and noise bundles do not line up");
    }
    if (bp.first_node < 0 || bp.last_node <= bp.first_node ||
        bp.last_node >= f.grid.node_count()) {
        throw PreconditionError("solve_backward: node range invalid");
    }
    if (bp.terminal.rows() != f.n_paths || bp.terminal.cols() != bp.d) {
        throw PreconditionError("solve_backward: terminal shape mismatch");
    }
}

}  // namespace

Eigen::Map<const Eigen::VectorXd> DiscreteSolution::y_at(int path, int node) const {
    return Eigen::Map<const Eigen::VectorXd>(
        y.data() + static_cast<Eigen::Index>(path) * y.cols() + static_cast<Eigen::Index>(node) * d,
        d);
}

Eigen::Map<const RowMat> DiscreteSolution::z_at(int path, int step) const {
    return Eigen::Map<const RowMat>(z.data() + static_cast<Eigen::Index>(path) * z.cols() +
                                        static_cast<Eigen::Index>(step) * d * n,
                                    d, n);
}

DiscreteSolution solve_backward(const BackwardProblem& bp, const FeatureBasis& basis,
                                const SolverConfig& config) {
    check_backward_problem(bp);
    const PathBundle& feats = *bp.features;
    const PathBundle& noise = *bp.noise;
    if (basis.dim != feats.dim) {
        throw PreconditionError("solve_backward: basis dimension does not match feature bundle");
    }
    if (config.tol <= 0.0 || config.max_iter < 1) {
        throw PreconditionError("solve_backward: need tol > 0 and max_iter >= 1");
    }

    const TimeGrid& grid = feats.grid;
    const int n_paths = feats.n_paths;
    const int d = bp.d;
    const int n = noise.dim;
    const int node_count = grid.node_count();
    const int first = bp.first_node;
    const int last = bp.last_node;
    const double delta = grid.step;

    DiscreteSolution sol;
    sol.grid = grid;
    sol.d = d;
    sol.n = n;
    sol.n_paths = n_paths;
    sol.first_node = first;
    sol.last_node = last;
    sol.basis = basis;
    sol.y = RowMat::Zero(n_paths, static_cast<Eigen::Index>(node_count) * d);
    sol.z = RowMat::Zero(n_paths, static_cast<Eigen::Index>(grid.steps) * d * n);
    sol.y_coeffs.resize(static_cast<std::size_t>(node_count));
    sol.z_coeffs.resize(static_cast<std::size_t>(grid.steps));
    sol.y_residual_rms.assign(static_cast<std::size_t>(node_count), 0.0);
    sol.z_residual_rms.assign(static_cast<std::size_t>(grid.steps), 0.0);
    sol.z_abs_max.assign(static_cast<std::size_t>(grid.steps), 0.0);

    // Pathwise terminal values are kept exact; the fitted terminal field is
    // recorded separately so field evaluation covers the whole range.
    sol.y_block(last) = bp.terminal;
    {
        const RowMat f_last = design_matrix(basis, feats, last);
        RegressionResult r = regress(f_last, bp.terminal);
        sol.y_coeffs[static_cast<std::size_t>(last)] = r.coeffs;
        sol.y_residual_rms[static_cast<std::size_t>(last)] = r.residual_rms;
    }

    RowMat y_prev = RowMat::Zero(n_paths, sol.y.cols());
    RowMat z_prev = RowMat::Zero(n_paths, sol.z.cols());
    const Eigen::RowVectorXd flat_init = bp.terminal.colwise().mean();
    for (int i = first; i <= last; ++i) {
        y_prev.middleCols(static_cast<Eigen::Index>(i) * d, d).rowwise() = flat_init;
    }

    Eigen::MatrixXd dw(n_paths, n);
    Eigen::MatrixXd t_z(n_paths, d * n);
    Eigen::MatrixXd t_y(n_paths, d);
    Eigen::VectorXd y_arg(d), drv(d);
    Eigen::MatrixXd z_arg(d, n);

    double prev_gap = 0.0;
    int bad_ratios = 0;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        for (int i = last - 1; i >= first; --i) {
            const RowMat f_i = design_matrix(basis, feats, i);
            const double t_i = grid.nodes[static_cast<std::size_t>(i)];

            for (int p = 0; p < n_paths; ++p) {
                for (int k = 0; k < n; ++k) {
                    dw(p, k) = noise.increment(p, i, k);
                }
            }
            const auto y_next = sol.y_block(i + 1);
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < n; ++c) {
                    t_z.col(r * n + c) = y_next.col(r).cwiseProduct(dw.col(c)) / delta;
                }
            }
            RegressionResult rz = regress(f_i, t_z);
            sol.z_block(i) = rz.fitted;
            sol.z_coeffs[static_cast<std::size_t>(i)] = std::move(rz.coeffs);
            sol.z_residual_rms[static_cast<std::size_t>(i)] = rz.residual_rms;
            sol.z_abs_max[static_cast<std::size_t>(i)] = rz.fitted.rowwise().norm().maxCoeff();

            t_y = y_next;
            if (bp.driver) {
                for (int p = 0; p < n_paths; ++p) {
                    for (int r = 0; r < d; ++r) {
                        y_arg(r) = y_prev(p, static_cast<Eigen::Index>(i) * d + r);
                        for (int c = 0; c < n; ++c) {
                            z_arg(r, c) = sol.z(p, (static_cast<Eigen::Index>(i) * d + r) * n + c);
                        }
                    }
                    bp.driver(i, p, t_i, y_arg, z_arg, drv);
                    t_y.row(p) += delta * drv.transpose();
                }
            }
            RegressionResult ry = regress(f_i, t_y);
            sol.y_block(i) = ry.fitted;
            sol.y_coeffs[static_cast<std::size_t>(i)] = std::move(ry.coeffs);
            sol.y_residual_rms[static_cast<std::size_t>(i)] = ry.residual_rms;
        }

        double gap_y = 0.0;
        for (int i = first; i <= last; ++i) {
            const double m2 =
                (sol.y_block(i) - y_prev.middleCols(static_cast<Eigen::Index>(i) * d, d))
                    .squaredNorm() /
                static_cast<double>(n_paths);
            gap_y = std::max(gap_y, std::sqrt(m2));
        }
        double gap_z2 = 0.0;
        for (int i = first; i < last; ++i) {
            gap_z2 += (sol.z_block(i) -
                       z_prev.middleCols(static_cast<Eigen::Index>(i) * d * n, d * n))
                          .squaredNorm() /
                      static_cast<double>(n_paths) * delta;
        }
        const double gap = gap_y + std::sqrt(gap_z2);
        sol.gaps.push_back(gap);
        sol.picard_iterations = iter;

        if (iter > 1 && prev_gap > 0.0) {
            const double ratio = gap / prev_gap;
            sol.gap_ratios.push_back(ratio);
            if (ratio >= 1.0) {
                if (++bad_ratios >= 3) {
                    throw DivergenceError(
                        "solve_backward: Picard gap ratio >= 1 for 3 consecutive sweeps, last " +
                        std::to_string(ratio));
                }
            } else {
                bad_ratios = 0;
            }
        }
        prev_gap = gap;

        if (gap <= config.tol) {
            sol.converged = true;
            break;
        }
        // A driver-free recursion does not read the previous sweep, so the
        // first sweep is already the fixed point.
        if (!bp.driver) {
            sol.converged = true;
            break;
        }
        y_prev = sol.y;
        z_prev = sol.z;
    }
    return sol;
}

DiscreteSolution solve_lipschitz_bsde(const ProblemSpec& spec, int first_node, int last_node,
                                      const PathBundle& bundle, const FeatureBasis& basis,
                                      const SolverConfig& config) {
    if (bundle.dim != spec.n) {
        throw PreconditionError("solve_lipschitz_bsde: bundle dimension must match the noise");
    }
    BackwardProblem bp;
    bp.features = &bundle;
    bp.noise = &bundle;
    bp.first_node = first_node;
    bp.last_node = last_node;
    bp.d = spec.d;
    bp.terminal.resize(bundle.n_paths, spec.d);
    Eigen::VectorXd tv(spec.d);
    for (int p = 0; p < bundle.n_paths; ++p) {
        spec.eval_terminal(bundle.view(p, last_node), tv);
        bp.terminal.row(p) = tv.transpose();
    }
    if (spec.has_f() || spec.has_g()) {
        BsdeDriverFn total = structured_driver(spec);
        const PathBundle* pb = &bundle;
        bp.driver = [total, pb](int node, int path, double t, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out) {
            total(t, pb->view(path, node), y, z, out);
        };
    }
    return solve_backward(bp, basis, config);
}

Eigen::VectorXd eval_y_field(const DiscreteSolution& sol, int node,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (node < 0 || node >= static_cast<int>(sol.y_coeffs.size()) ||
        sol.y_coeffs[static_cast<std::size_t>(node)].size() == 0) {
        throw PreconditionError("eval_y_field: no fitted field at this node");
    }
    Eigen::RowVectorXd feat(sol.basis.count());
    sol.basis.eval_state(x, feat);
    return (feat * sol.y_coeffs[static_cast<std::size_t>(node)]).transpose();
}

Eigen::MatrixXd eval_z_field(const DiscreteSolution& sol, int step,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (step < 0 || step >= static_cast<int>(sol.z_coeffs.size()) ||
        sol.z_coeffs[static_cast<std::size_t>(step)].size() == 0) {
        throw PreconditionError("eval_z_field: no fitted field at this step");
    }
    Eigen::RowVectorXd feat(sol.basis.count());
    sol.basis.eval_state(x, feat);
    Eigen::RowVectorXd flat = feat * sol.z_coeffs[static_cast<std::size_t>(step)];
    Eigen::MatrixXd out(sol.d, sol.n);
    for (int r = 0; r < sol.d; ++r)
        for (int c = 0; c < sol.n; ++c) out(r, c) = flat(r * sol.n + c);
    return out;
}

Eigen::MatrixXd eval_z_field_derivative(const DiscreteSolution& sol, int node,
                                        const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (node < 0 || node >= static_cast<int>(sol.y_coeffs.size()) ||
        sol.y_coeffs[static_cast<std::size_t>(node)].size() == 0) {
        throw PreconditionError("eval_z_field_derivative: no fitted field at this node");
    }
    if (sol.basis.path_dependent()) {
        throw PreconditionError("eval_z_field_derivative: state-only bases required");
    }
    const Eigen::MatrixXd& coeffs = sol.y_coeffs[static_cast<std::size_t>(node)];
    Eigen::MatrixXd out(sol.d, sol.basis.dim);
    Eigen::RowVectorXd dfeat = Eigen::RowVectorXd::Zero(sol.basis.count());
    for (int c = 0; c < sol.basis.dim; ++c) {
        dfeat.setZero();
        double p = 1.0;  // x_c^{e-1}
        for (int e = 1; e <= sol.basis.degree; ++e) {
            dfeat(sol.basis.monomial_index(c, e)) = static_cast<double>(e) * p;
            p *= x(c);
        }
        out.col(c) = (dfeat * coeffs).transpose();
    }
    return out;
}

StabilityGapReport stability_gap(const ProblemSpec& spec_a, const DiscreteSolution& sol_a,
                                 const ProblemSpec& spec_b, const DiscreteSolution& sol_b,
                                 const PathBundle& bundle, int from_node) {
    if (sol_a.d != sol_b.d || sol_a.n != sol_b.n || sol_a.n_paths != sol_b.n_paths ||
        sol_a.grid.steps != sol_b.grid.steps || sol_a.grid.horizon != sol_b.grid.horizon) {
        throw PreconditionError("stability_gap: solutions live on different discretizations");
    }
    const int last = std::min(sol_a.last_node, sol_b.last_node);
    const int first = std::max({from_node, sol_a.first_node, sol_b.first_node});
    if (first >= last) {
        throw PreconditionError("stability_gap: empty comparison range");
    }
    const int n_paths = sol_a.n_paths;
    const int d = sol_a.d;
    const double delta = sol_a.grid.step;

    StabilityGapReport rep;
    double sup_acc = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        double worst = 0.0;
        for (int i = first; i <= last; ++i) {
            worst = std::max(worst, (sol_a.y_at(p, i) - sol_b.y_at(p, i)).squaredNorm());
        }
        sup_acc += worst;
    }
    rep.y_part = sup_acc / static_cast<double>(n_paths);

    for (int i = first; i < last; ++i) {
        rep.z_part += (sol_a.z_block(i) - sol_b.z_block(i)).squaredNorm() /
                      static_cast<double>(n_paths) * delta;
    }

    rep.terminal_part = (sol_a.y_block(last) - sol_b.y_block(last)).squaredNorm() /
                        static_cast<double>(n_paths);

    BsdeDriverFn fa = (spec_a.has_f() || spec_a.has_g()) ? structured_driver(spec_a) : BsdeDriverFn();
    BsdeDriverFn fb = (spec_b.has_f() || spec_b.has_g()) ? structured_driver(spec_b) : BsdeDriverFn();
    if (fa || fb) {
        Eigen::VectorXd y_buf(d), out_a(d), out_b(d);
        Eigen::MatrixXd z_buf(d, sol_a.n);
        for (int i = first; i < last; ++i) {
            const double t_i = sol_a.grid.nodes[static_cast<std::size_t>(i)];
            double acc = 0.0;
            for (int p = 0; p < n_paths; ++p) {
                y_buf = sol_b.y_at(p, i);
                z_buf = sol_b.z_at(p, i);
                out_a.setZero();
                out_b.setZero();
                const PathView view = bundle.view(p, i);
                if (fa) fa(t_i, view, y_buf, z_buf, out_a);
                if (fb) fb(t_i, view, y_buf, z_buf, out_b);
                acc += (out_a - out_b).squaredNorm();
            }
            rep.driver_part += acc / static_cast<double>(n_paths) * delta;
        }
    }

    const double c_shared = std::max(spec_a.constants.C, spec_b.constants.C);
    rep.b = 2.0 * (c_shared + 1.0);
    const double span = sol_a.grid.nodes[static_cast<std::size_t>(last)] -
                        sol_a.grid.nodes[static_cast<std::size_t>(first)];
    rep.lhs = rep.y_part + rep.z_part;
    rep.rhs = 6.0 * std::exp(rep.b * span) * (rep.terminal_part + rep.driver_part);
    return rep;
}

AprioriReport apriori_bound_check(const ProblemSpec& spec, const DiscreteSolution& sol,
                                  const PathBundle& bundle) {
    const double c = spec.constants.C;
    const double span = sol.grid.nodes[static_cast<std::size_t>(sol.last_node)];
    const double a = 4.0 * c + 0.5;

    AprioriReport rep;
    rep.bound = std::exp(a * span) * (c + span / 2.0);

    const double delta = sol.grid.step;
    Eigen::VectorXd tail = Eigen::VectorXd::Zero(sol.n_paths);
    rep.worst_value = 0.0;
    rep.worst_node = sol.last_node;
    for (int i = sol.last_node; i >= sol.first_node; --i) {
        Eigen::VectorXd cond = Eigen::VectorXd::Zero(sol.n_paths);
        if (i < sol.last_node) {
            tail += sol.z_block(i).rowwise().squaredNorm() * delta;
            const RowMat f_i = design_matrix(sol.basis, bundle, i);
            cond = regress(f_i, tail).fitted.col(0);
        }
        for (int p = 0; p < sol.n_paths; ++p) {
            const double v = sol.y_at(p, i).squaredNorm() + 0.5 * cond(p);
            if (v > rep.worst_value) {
                rep.worst_value = v;
                rep.worst_node = i;
            }
        }
    }
    rep.pass = rep.worst_value <= rep.bound * (1.0 + rep.slack);
    return rep;
}

}  // namespace bsde

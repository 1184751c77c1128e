#include "bsde/audit.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

#include "bsde/errors.hpp"
#include "bsde/rng.hpp"

namespace bsde {

namespace {

constexpr int kAuditSteps = 25;
constexpr double kSlack = 1.01;

struct Max {
    double v = 0.0;
    void update(double x) { v = std::max(v, x); }
};

// One probe's worth of sampled inputs, derived only from (seed, probe index).
struct Probe {
    RowMat x_a, x_b;  // (steps + 1) x m paths on the audit grid
    Eigen::VectorXd y_a, y_b;
    Eigen::MatrixXd z_a, z_b;
    int t_idx = 0;
    bool bump_pair = false;
};

Probe make_probe(const ProblemSpec& spec, const TimeGrid& grid, std::uint64_t seed, int j) {
    Probe pr;
    const int m = spec.m;
    const double sq = std::sqrt(grid.step);
    const auto path_lane = [&](std::uint64_t which, int i, int k) {
        return rng::normal(seed, (static_cast<std::uint64_t>(j) << 2) | which, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(k));
    };
    pr.x_a.setZero(grid.node_count(), m);
    pr.x_b.setZero(grid.node_count(), m);
    for (int i = 0; i < grid.steps; ++i) {
        for (int k = 0; k < m; ++k) {
            pr.x_a(i + 1, k) = pr.x_a(i, k) + sq * path_lane(0, i, k);
        }
    }
    pr.bump_pair = (j % 4 == 3);
    if (pr.bump_pair) {
        pr.x_b = pr.x_a;
        const int k0 = j % m;
        pr.x_b(grid.steps, k0) += 1.0 + std::fabs(path_lane(1, 0, 0));
    } else {
        for (int i = 0; i < grid.steps; ++i) {
            for (int k = 0; k < m; ++k) {
                pr.x_b(i + 1, k) = pr.x_b(i, k) + sq * path_lane(1, i, k);
            }
        }
    }
    const int d = spec.d, n = spec.n;
    pr.y_a.resize(d);
    pr.y_b.resize(d);
    pr.z_a.resize(d, n);
    pr.z_b.resize(d, n);
    int lane = 0;
    const auto arg = [&](std::uint64_t which) {
        return 1.5 * rng::normal(seed, (static_cast<std::uint64_t>(j) << 2) | 2, which, static_cast<std::uint64_t>(lane));
    };
    for (int k = 0; k < d; ++k, ++lane) {
        pr.y_a[k] = arg(0);
        pr.y_b[k] = arg(1);
    }
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < n; ++c, ++lane) {
            pr.z_a(r, c) = arg(2);
            pr.z_b(r, c) = arg(3);
        }
    }
    pr.t_idx = static_cast<int>(rng::counter_hash(seed, (static_cast<std::uint64_t>(j) << 2) | 3, 0, 0) %
                                static_cast<std::uint64_t>(grid.steps));
    return pr;
}

double sup_node_dist_sq(const RowMat& a, const RowMat& b, int upto) {
    double s = 0.0;
    for (int i = 0; i <= upto; ++i) {
        s = std::max(s, (a.row(i) - b.row(i)).squaredNorm());
    }
    return s;
}

}  // namespace

std::string AuditReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.pass ? "pass " : "FAIL ") << c.name << " observed=" << c.observed
           << " declared=" << c.declared << "\n";
    }
    return os.str();
}

AuditReport audit_assumptions(const ProblemSpec& spec, int probe_budget, std::uint64_t seed) {
    if (probe_budget < 1) {
        throw PreconditionError("audit_assumptions: probe_budget must be positive");
    }
    const TimeGrid grid = TimeGrid::uniform(spec.T, kAuditSteps);
    const auto& cst = spec.constants;

    Max term_bound, term_lip, f_bound, f_lip, g_bound, g_lip, g_growth, sig_lip, sig_ell, diag_sup;

    Eigen::VectorXd xi_a(spec.d), xi_b(spec.d), buf_a(spec.d), buf_b(spec.d);
    Eigen::VectorXd gbuf_a(spec.n), gbuf_b(spec.n);
    Eigen::VectorXd zero_y = Eigen::VectorXd::Zero(spec.d);
    Eigen::MatrixXd zero_z = Eigen::MatrixXd::Zero(spec.d, spec.n);
    Eigen::MatrixXd sig_a(spec.m, spec.n), sig_b(spec.m, spec.n);

    for (int j = 0; j < probe_budget; ++j) {
        const Probe pr = make_probe(spec, grid, seed, j);
        const PathView va{&grid, pr.x_a.data(), spec.m, grid.steps};
        const PathView vb{&grid, pr.x_b.data(), spec.m, grid.steps};

        spec.eval_terminal(va, xi_a);
        spec.eval_terminal(vb, xi_b);
        term_bound.update(xi_a.squaredNorm());
        term_bound.update(xi_b.squaredNorm());
        const double dx_full = sup_node_dist_sq(pr.x_a, pr.x_b, grid.steps);
        if (dx_full > 1e-20) {
            term_lip.update((xi_a - xi_b).squaredNorm() / dx_full);
        }

        const double t = grid.node(pr.t_idx);
        const PathView pa{&grid, pr.x_a.data(), spec.m, pr.t_idx};
        const PathView pb{&grid, pr.x_b.data(), spec.m, pr.t_idx};
        const double dx_pre = sup_node_dist_sq(pr.x_a, pr.x_b, pr.t_idx);
        const double arg_dist = dx_pre + (pr.y_a - pr.y_b).squaredNorm() + (pr.z_a - pr.z_b).squaredNorm();

        if (spec.has_f()) {
            spec.eval_f(t, pa, zero_y, zero_z, buf_a);
            f_bound.update(buf_a.squaredNorm());
            if (arg_dist > 1e-20) {
                spec.eval_f(t, pa, pr.y_a, pr.z_a, buf_a);
                spec.eval_f(t, pb, pr.y_b, pr.z_b, buf_b);
                f_lip.update((buf_a - buf_b).squaredNorm() / arg_dist);
            }
            if (spec.is_diagonal_quadratic()) {
                spec.eval_f(t, pa, pr.y_a, pr.z_a, buf_a);
                diag_sup.update(buf_a.cwiseAbs().maxCoeff());
            }
        }
        if (spec.has_g()) {
            spec.eval_g(t, pa, zero_y, zero_z, gbuf_a);
            g_bound.update(gbuf_a.squaredNorm());
            if (arg_dist > 1e-20) {
                spec.eval_g(t, pa, pr.y_a, pr.z_a, gbuf_a);
                spec.eval_g(t, pb, pr.y_b, pr.z_b, gbuf_b);
                const double num = (gbuf_a - gbuf_b).squaredNorm();
                if (spec.growth_l) {
                    const double env = spec.growth_l(pr.z_a.norm() + pr.z_b.norm());
                    if (env > 0.0) {
                        g_growth.update(num / (env * arg_dist));
                    }
                } else {
                    g_lip.update(num / arg_dist);
                }
            }
        }
        if (spec.sigma) {
            spec.eval_sigma(t, pa, sig_a);
            spec.eval_sigma(t, pb, sig_b);
            if (dx_pre > 1e-20) {
                sig_lip.update((sig_a - sig_b).norm() / std::sqrt(dx_pre));
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sig_a * sig_a.transpose());
            const double lo = es.eigenvalues().minCoeff();
            const double hi = es.eigenvalues().maxCoeff();
            if (lo <= 0.0) {
                sig_ell.update(std::numeric_limits<double>::infinity());
            } else {
                sig_ell.update(std::max(hi, 1.0 / lo));
            }
        }
    }

    AuditReport rep;
    const auto add = [&](const std::string& name, double observed, double declared) {
        const bool ok = observed <= declared * kSlack;
        rep.checks.push_back({name, observed, declared, ok});
        rep.pass = rep.pass && ok;
    };
    add("terminal_bound_sq", term_bound.v, cst.C);
    add("terminal_lipschitz_sq", term_lip.v, cst.K);
    if (spec.has_f()) {
        add("f_zero_bound_sq", f_bound.v, cst.C);
        add("f_lipschitz_sq", f_lip.v, cst.C);
    }
    if (spec.has_g()) {
        add("g_zero_bound_sq", g_bound.v, cst.C);
        if (spec.growth_l) {
            add("g_growth_ratio", g_growth.v, 1.0);
        } else {
            add("g_lipschitz_sq", g_lip.v, cst.C_g);
        }
    }
    if (spec.sigma) {
        add("sigma_lipschitz", sig_lip.v, cst.C);
        add("sigma_ellipticity", sig_ell.v, cst.M_ell);
    }
    if (spec.is_diagonal_quadratic()) {
        if (spec.has_f()) {
            add("diag_f_sup", diag_sup.v, cst.C_bar);
        }
        const double min_a = spec.diag_a.cwiseAbs().minCoeff();
        const bool ok = min_a > 0.0;
        rep.checks.push_back({"diag_a_nonzero", min_a, 0.0, ok});
        rep.pass = rep.pass && ok;
    }
    return rep;
}

}  // namespace bsde

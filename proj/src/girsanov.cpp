#include "bsde/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

constexpr double kDriftSlack = 1.05;  // sampling slack on the declared drift bound

Eigen::Map<const Eigen::VectorXd> row_vec(const RowMat& m, int path, int node, int d) {
    return Eigen::Map<const Eigen::VectorXd>(m.row(path).data() + node * d, d);
}

Eigen::Map<const RowMat> row_mat(const RowMat& m, int path, int step, int d, int n) {
    return Eigen::Map<const RowMat>(m.row(path).data() + step * d * n, d, n);
}

}  // namespace

GirsanovWeights stochastic_exponential(const Eigen::Ref<const RowMat>& theta,
                                       const PathBundle& bundle) {
    const TimeGrid& grid = bundle.grid;
    int steps = grid.steps;
    int dim = bundle.dim;
    int n_paths = bundle.n_paths;
    if (theta.rows() != n_paths || theta.cols() != static_cast<Eigen::Index>(steps) * dim)
        throw PreconditionError("integrand shape does not match the bundle (need n_paths x "
                                "steps*dim, step-major)");

    GirsanovWeights out;
    out.log_increments = RowMat::Zero(n_paths, steps);
    out.log_weight = Eigen::VectorXd::Zero(n_paths);
    out.weight = Eigen::VectorXd::Zero(n_paths);
    double delta = grid.step;

    for (int p = 0; p < n_paths; ++p) {
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            double dot = 0.0;
            double sq = 0.0;
            for (int c = 0; c < dim; ++c) {
                double th = theta(p, static_cast<Eigen::Index>(i) * dim + c);
                if (!std::isfinite(th))
                    throw NumericBlowupError("stochastic exponential integrand is not finite at "
                                             "path " +
                                             std::to_string(p) + ", step " + std::to_string(i));
                dot += th * bundle.increment(p, i, c);
                sq += th * th;
            }
            double inc = -dot - 0.5 * sq * delta;
            out.log_increments(p, i) = inc;
            acc += inc;
        }
        out.log_weight(p) = acc;
        out.weight(p) = std::exp(acc);
    }

    double bound = 0.0;
    for (int p = 0; p < n_paths; ++p)
        for (int i = 0; i < steps; ++i) {
            double sq = 0.0;
            for (int c = 0; c < dim; ++c) {
                double th = theta(p, static_cast<Eigen::Index>(i) * dim + c);
                sq += th * th;
            }
            bound = std::max(bound, sq);
        }
    out.integrand_bound = std::sqrt(bound);

    out.mean_weight = out.weight.mean();
    double var = (out.weight.array() - out.mean_weight).square().sum() /
                 std::max(1, n_paths - 1);
    out.se_weight = std::sqrt(var / n_paths);
    return out;
}

double bmo_norm_estimate(const Eigen::Ref<const RowMat>& theta, const PathBundle& bundle,
                         const FeatureBasis& basis) {
    const TimeGrid& grid = bundle.grid;
    int steps = grid.steps;
    int dim = bundle.dim;
    int n_paths = bundle.n_paths;
    if (theta.rows() != n_paths || theta.cols() != static_cast<Eigen::Index>(steps) * dim)
        throw PreconditionError("integrand shape does not match the bundle (need n_paths x "
                                "steps*dim, step-major)");

    // Suffix sums int_t^T |theta|^2 ds per path, then a conditional-mean
    // fit per node; the estimate at each node is the largest fitted value.
    Eigen::MatrixXd tail = Eigen::MatrixXd::Zero(n_paths, 1);
    double worst = 0.0;
    for (int i = steps - 1; i >= 0; --i) {
        for (int p = 0; p < n_paths; ++p) {
            double sq = 0.0;
            for (int c = 0; c < dim; ++c) {
                double th = theta(p, static_cast<Eigen::Index>(i) * dim + c);
                sq += th * th;
            }
            tail(p, 0) += sq * grid.step;
        }
        RowMat design = design_matrix(basis, bundle, i);
        RegressionResult fit = regress(design, tail);
        double node_max = std::max(0.0, fit.fitted.col(0).maxCoeff());
        worst = std::max(worst, node_max);
    }
    return std::sqrt(worst);
}

ViaBsdeResult fbsde_via_bsde(const ProblemSpec& spec, const DiscreteSolution& fields,
                             const PathBundle& noise) {
    if (!spec.markovian)
        throw PreconditionError("frozen-field forward construction is restricted to Markovian "
                                "specs; path-dependent coefficients may admit only weak "
                                "solutions");
    if (fields.basis.path_dependent())
        throw PreconditionError("frozen fields must be fitted on state-only features");
    if (!spec.sigma_is_identity)
        throw PreconditionError("unit forward volatility required for this construction");
    if (spec.m != spec.n || noise.dim != spec.n)
        throw PreconditionError("forward, driving and noise dimensions must all agree");
    if (fields.d != spec.d || fields.n != spec.n)
        throw PreconditionError("frozen fields disagree with the spec dimensions");
    const TimeGrid& grid = noise.grid;
    if (fields.grid.steps != grid.steps ||
        std::abs(fields.grid.horizon - grid.horizon) > 1e-12 * std::max(1.0, grid.horizon))
        throw PreconditionError("frozen fields and fresh noise live on different grids");
    if (fields.first_node != 0 || fields.last_node != grid.steps)
        throw PreconditionError("frozen fields must cover the whole horizon");

    int steps = grid.steps;
    int n_paths = noise.n_paths;
    int m = spec.m;
    int d = spec.d;
    int n = spec.n;

    ViaBsdeResult out;
    CoupledIterate& tri = out.triple;
    tri.x.grid = grid;
    tri.x.dim = m;
    tri.x.n_paths = n_paths;
    tri.x.seed = noise.seed;
    tri.x.kind = PathKind::forward_state;
    tri.x.values = RowMat::Zero(n_paths, static_cast<Eigen::Index>(steps + 1) * m);
    tri.y = RowMat::Zero(n_paths, static_cast<Eigen::Index>(steps + 1) * d);
    tri.z = RowMat::Zero(n_paths, static_cast<Eigen::Index>(steps) * d * n);

    RowMat theta = RowMat::Zero(n_paths, static_cast<Eigen::Index>(steps) * n);
    Eigen::VectorXd state(m), q(d), drift(n);
    Eigen::MatrixXd r(d, n);
    double worst_drift_sq = 0.0;

    for (int p = 0; p < n_paths; ++p) {
        for (int i = 0; i < steps; ++i) {
            for (int c = 0; c < m; ++c) state(c) = tri.x.value(p, i, c);
            q = eval_y_field(fields, i, state);
            r = eval_z_field(fields, i, state);
            for (int c = 0; c < d; ++c) tri.y(p, static_cast<Eigen::Index>(i) * d + c) = q(c);
            for (int rr = 0; rr < d; ++rr)
                for (int c = 0; c < n; ++c)
                    tri.z(p, static_cast<Eigen::Index>(i) * d * n + rr * n + c) = r(rr, c);
            if (spec.has_g())
                spec.eval_g(grid.node(i), tri.x.view(p, i), q, r, drift);
            else
                drift.setZero();
            double sq = drift.squaredNorm();
            if (!std::isfinite(sq))
                throw NumericBlowupError("forward drift is not finite at path " +
                                         std::to_string(p) + ", step " + std::to_string(i));
            worst_drift_sq = std::max(worst_drift_sq, sq);
            for (int c = 0; c < n; ++c) {
                theta(p, static_cast<Eigen::Index>(i) * n + c) = drift(c);
                tri.x.value(p, i + 1, c) =
                    tri.x.value(p, i, c) + drift(c) * grid.step + noise.increment(p, i, c);
            }
        }
        for (int c = 0; c < m; ++c) state(c) = tri.x.value(p, steps, c);
        q = eval_y_field(fields, steps, state);
        for (int c = 0; c < d; ++c) tri.y(p, static_cast<Eigen::Index>(steps) * d + c) = q(c);
    }

    out.drift_bound = std::sqrt(worst_drift_sq);
    double declared = spec.constants.C;
    if (worst_drift_sq > declared * kDriftSlack)
        throw PreconditionError("drift probe found |g| = " + std::to_string(out.drift_bound) +
                                " against the declared bound sqrt(C) = " +
                                std::to_string(std::sqrt(declared)) +
                                "; the bounded-drift hypothesis fails");
    out.bmo_norm = bmo_norm_estimate(theta, tri.x, fields.basis);
    if (!std::isfinite(out.bmo_norm))
        throw PreconditionError("drift integrand has no finite BMO estimate");
    return out;
}

FbsdeResidualReport fbsde_residual(const CoupledIterate& candidate, const ProblemSpec& spec,
                                   const PathBundle& noise) {
    const TimeGrid& grid = candidate.x.grid;
    int steps = grid.steps;
    int n_paths = candidate.x.n_paths;
    int d = spec.d;
    int n = spec.n;
    int m = candidate.x.dim;
    if (noise.grid.steps != steps || noise.n_paths != n_paths || noise.dim != n)
        throw PreconditionError("candidate and noise bundles disagree");
    if (m != n)
        throw PreconditionError("forward residual assumes unit volatility (matching dimensions)");
    if (candidate.y.cols() != static_cast<Eigen::Index>(steps + 1) * d ||
        candidate.z.cols() != static_cast<Eigen::Index>(steps) * d * n)
        throw PreconditionError("candidate value shapes disagree with the spec dimensions");

    FbsdeResidualReport rep;
    double delta = grid.step;

    {
        Eigen::VectorXd xi(d);
        double acc = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            spec.eval_terminal(candidate.x.full_view(p), xi);
            acc += (row_vec(candidate.y, p, steps, d) - xi).squaredNorm();
        }
        rep.terminal = std::sqrt(acc / n_paths);
    }

    {
        Eigen::MatrixXd acc_f = Eigen::MatrixXd::Zero(n_paths, d);
        Eigen::MatrixXd acc_z = Eigen::MatrixXd::Zero(n_paths, d);
        Eigen::VectorXd fval(d), dw(n);
        double worst = 0.0;
        for (int i = steps - 1; i >= 0; --i) {
            double t = grid.node(i);
            double sq = 0.0;
            for (int p = 0; p < n_paths; ++p) {
                auto q = row_vec(candidate.y, p, i, d);
                auto r = row_mat(candidate.z, p, i, d, n);
                if (spec.has_f()) {
                    spec.eval_f(t, candidate.x.view(p, i), q, r, fval);
                    acc_f.row(p) += fval.transpose() * delta;
                }
                for (int c = 0; c < n; ++c) dw(c) = noise.increment(p, i, c);
                acc_z.row(p) += (r * dw).transpose();
                sq += (q - row_vec(candidate.y, p, steps, d) - acc_f.row(p).transpose() +
                       acc_z.row(p).transpose())
                          .squaredNorm();
            }
            worst = std::max(worst, std::sqrt(sq / n_paths));
        }
        rep.backward = worst;
    }

    {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_paths, m);
        Eigen::VectorXd gval(n);
        double worst = 0.0;
        for (int i = 1; i <= steps; ++i) {
            double t = grid.node(i - 1);
            double sq = 0.0;
            for (int p = 0; p < n_paths; ++p) {
                auto q = row_vec(candidate.y, p, i - 1, d);
                auto r = row_mat(candidate.z, p, i - 1, d, n);
                if (spec.has_g()) {
                    spec.eval_g(t, candidate.x.view(p, i - 1), q, r, gval);
                    acc.row(p) += gval.transpose() * delta;
                }
                for (int c = 0; c < n; ++c) acc(p, c) += noise.increment(p, i - 1, c);
                sq += (row_vec(candidate.x.values, p, i, m) -
                       row_vec(candidate.x.values, p, 0, m) - acc.row(p).transpose())
                          .squaredNorm();
            }
            worst = std::max(worst, std::sqrt(sq / n_paths));
        }
        rep.forward = worst;
    }
    return rep;
}

}  // namespace bsde

#include "bsde/regression.hpp"

#include <cmath>
#include <string>

#include "bsde/errors.hpp"

namespace bsde {

int FeatureBasis::count() const {
    int c = 1 + dim * degree;
    if (running_max) c += dim;
    if (running_integral) c += dim;
    return c;
}

int FeatureBasis::monomial_index(int coord, int power) const {
    if (coord < 0 || coord >= dim || power < 1 || power > degree) {
        throw PreconditionError("FeatureBasis::monomial_index: coordinate or power out of range");
    }
    return 1 + coord * degree + (power - 1);
}

void FeatureBasis::eval(const PathView& path, int node, Eigen::Ref<Eigen::RowVectorXd> out) const {
    if (path.dim != dim) {
        throw PreconditionError("FeatureBasis::eval: path dimension mismatch");
    }
    out(0) = 1.0;
    int idx = 1;
    for (int k = 0; k < dim; ++k) {
        const double v = path.at(node, k);
        double p = v;
        for (int e = 1; e <= degree; ++e) {
            out(idx++) = p;
            p *= v;
        }
    }
    if (running_max) {
        for (int k = 0; k < dim; ++k) {
            double m = path.at(0, k);
            for (int j = 1; j <= node; ++j) {
                m = std::max(m, path.at(j, k));
            }
            out(idx++) = m;
        }
    }
    if (running_integral) {
        for (int k = 0; k < dim; ++k) {
            out(idx++) = path.integral(k);
        }
    }
}

void FeatureBasis::eval_state(const Eigen::Ref<const Eigen::VectorXd>& x,
                              Eigen::Ref<Eigen::RowVectorXd> out) const {
    if (path_dependent()) {
        throw PreconditionError(
            "FeatureBasis::eval_state: basis has path functionals; a bare state is not enough");
    }
    if (x.size() != dim) {
        throw PreconditionError("FeatureBasis::eval_state: state dimension mismatch");
    }
    out(0) = 1.0;
    int idx = 1;
    for (int k = 0; k < dim; ++k) {
        double p = x(k);
        for (int e = 1; e <= degree; ++e) {
            out(idx++) = p;
            p *= x(k);
        }
    }
}

RowMat design_matrix(const FeatureBasis& basis, const PathBundle& bundle, int node) {
    if (node < 0 || node >= bundle.grid.node_count()) {
        throw PreconditionError("design_matrix: node out of range");
    }
    RowMat f(bundle.n_paths, basis.count());
    for (int p = 0; p < bundle.n_paths; ++p) {
        basis.eval(bundle.view(p, node), node, f.row(p));
    }
    return f;
}

RegressionResult regress(const Eigen::Ref<const RowMat>& features,
                         const Eigen::Ref<const Eigen::MatrixXd>& targets) {
    const Eigen::Index n = features.rows();
    const Eigen::Index p = features.cols();
    if (targets.rows() != n) {
        throw PreconditionError("regress: feature and target row counts differ");
    }
    if (n == 0 || p == 0) {
        throw PreconditionError("regress: empty design");
    }
    if (10 * p > n) {
        throw BasisError("regress: " + std::to_string(p) + " features need at least " +
                         std::to_string(10 * p) + " samples, got " + std::to_string(n));
    }

    // Constant-column scan. The first constant column is kept as the
    // intercept; later ones fold into it and are dropped.
    RegressionResult out;
    bool have_intercept = false;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double lo = features.col(j).minCoeff();
        const double hi = features.col(j).maxCoeff();
        const bool constant = hi - lo <= 1e-12 * std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)));
        if (constant) {
            if (!have_intercept && std::fabs(hi) > 1e-300) {
                have_intercept = true;
                out.kept.push_back(static_cast<int>(j));
            }
        } else {
            out.kept.push_back(static_cast<int>(j));
        }
    }
    if (out.kept.empty()) {
        throw BasisError("regress: all feature columns vanish");
    }

    const Eigen::Index pk = static_cast<Eigen::Index>(out.kept.size());
    Eigen::MatrixXd fk(n, pk);
    for (Eigen::Index j = 0; j < pk; ++j) {
        fk.col(j) = features.col(out.kept[static_cast<std::size_t>(j)]);
    }

    const Eigen::MatrixXd gram = fk.transpose() * fk;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rank() < pk) {
        throw BasisError("regress: rank-deficient design, rank " + std::to_string(lu.rank()) +
                         " of " + std::to_string(pk) + " kept columns");
    }
    const Eigen::MatrixXd coeffs_k = lu.solve(fk.transpose() * targets);

    out.coeffs = Eigen::MatrixXd::Zero(p, targets.cols());
    for (Eigen::Index j = 0; j < pk; ++j) {
        out.coeffs.row(out.kept[static_cast<std::size_t>(j)]) = coeffs_k.row(j);
    }
    out.fitted = fk * coeffs_k;
    out.residual_rms = std::sqrt((targets - out.fitted).squaredNorm() /
                                 static_cast<double>(n * targets.cols()));
    return out;
}

}  // namespace bsde

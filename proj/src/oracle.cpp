#include "bsde/oracle.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

constexpr double kSelfTol = 1e-8;
constexpr double kSqrtPi = 1.7724538509055160273;

double expectation_at(const GaussHermiteRule& rule, const std::function<double(double)>& h,
                      double center, double sd) {
    // E[h(center + sd U)] = (1/sqrt(pi)) sum w_i h(center + sd sqrt(2) x_i)
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights(i) * h(center + sd * std::sqrt(2.0) * rule.nodes(i));
    return acc / kSqrtPi;
}

}  // namespace

GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) throw PreconditionError("quadrature order must be positive");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success)
        throw OracleError("quadrature eigenvalue decomposition failed");
    GaussHermiteRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        double first = eig.eigenvectors()(0, i);
        rule.weights(i) = kSqrtPi * first * first;
    }
    return rule;
}

OracleResult quadrature_conditional_expectation(const std::function<double(double)>& h, double t,
                                                double x, double T, int order) {
    if (!(T >= t)) throw PreconditionError("horizon precedes the evaluation time");
    if (order < 64) order = 64;
    double sd = std::sqrt(T - t);

    OracleResult out;
    out.method = "gauss-hermite";
    if (sd == 0.0) {
        out.value = h(x);
        out.order = order;
        out.self_gap = 0.0;
        return out;
    }
    double coarse = expectation_at(gauss_hermite(order), h, x, sd);
    double fine = expectation_at(gauss_hermite(2 * order), h, x, sd);
    double gap = std::abs(fine - coarse);
    if (gap >= kSelfTol * std::max(1.0, std::abs(fine)))
        throw OracleError("quadrature did not self-converge: order " + std::to_string(order) +
                          " vs " + std::to_string(2 * order) + " differ by " +
                          std::to_string(gap));
    out.value = fine;
    out.order = 2 * order;
    out.self_gap = gap;
    return out;
}

ColeHopfReference cole_hopf_reference(const std::function<double(double)>& xi, double a, double t,
                                      double x, double T) {
    if (a == 0.0) throw PreconditionError("quadratic weight a must be nonzero");
    auto value_at = [&](double state) {
        auto transformed = [&](double w) { return std::exp(2.0 * a * xi(w)); };
        OracleResult e = quadrature_conditional_expectation(transformed, t, state, T);
        if (!(e.value > 0.0))
            throw OracleError("transformed expectation is not positive; logarithm undefined");
        return std::log(e.value) / (2.0 * a);
    };

    ColeHopfReference ref;
    ref.y = value_at(x);
    ref.order = 128;

    double h = 1e-5;
    double coarse = (value_at(x + h) - value_at(x - h)) / (2.0 * h);
    double fine = (value_at(x + 0.5 * h) - value_at(x - 0.5 * h)) / h;
    ref.fd_gap = std::abs(fine - coarse);
    if (ref.fd_gap > 1e-5 * std::max(1.0, std::abs(fine)))
        throw OracleError("difference quotients did not stabilize (spread " +
                          std::to_string(ref.fd_gap) + ")");
    // Richardson step: centered differences have O(h^2) error.
    ref.z = (4.0 * fine - coarse) / 3.0;
    return ref;
}

}  // namespace bsde

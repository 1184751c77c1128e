#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>

#include "bsde/paths.hpp"

namespace bsde {

// Terminal functional xi(full path) -> R^d.
using TerminalFn = std::function<void(const PathView& path, Eigen::Ref<Eigen::VectorXd> out)>;
// Driver part evaluated on the path prefix: (t, path, y, z) -> R^d, z is d x n.
using BsdeDriverFn = std::function<void(double t, const PathView& path, const Eigen::VectorXd& y,
                                        const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out)>;
// Structured part g: (t, path, y, z) -> R^n. It is both the second driver
// factor (driver = f + z g) and the forward drift of the coupled system.
using StructuredFn = std::function<void(double t, const PathView& path, const Eigen::VectorXd& y,
                                        const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out)>;
// Forward volatility sigma(t, path) -> R^{m x n}.
using SigmaFn = std::function<void(double t, const PathView& path, Eigen::Ref<Eigen::MatrixXd> out)>;

// Declared assumption constants. Squared conventions follow the estimates
// they feed: K bounds the squared terminal Lipschitz quotient, C the squared
// f-quotients and squared bounds, C_g the squared g-quotient. The sigma
// Lipschitz bound reuses C unsquared.
struct AssumptionConstants {
    double K = 0.0;
    double C = 1.0;
    double C_g = 0.0;
    double C_bar = 0.0;  // sup |f| for diagonally quadratic drivers
    double M_ell = 2.0;  // ellipticity band for sigma sigma^T
};

struct ProblemSpec {
    std::string name;
    std::map<std::string, double> params;

    int m = 1;  // forward dimension
    int n = 1;  // driving dimension
    int d = 1;  // backward dimension
    double T = 1.0;

    TerminalFn terminal;
    BsdeDriverFn f;   // null means f == 0
    StructuredFn g;   // null means g == 0
    SigmaFn sigma;    // null means identity
    bool sigma_is_identity = true;
    bool markovian = true;  // coefficients read only the current node

    AssumptionConstants constants;
    std::function<double(double)> growth_l;  // |z|-growth envelope for superquadratic g
    Eigen::VectorXd diag_a;                  // per-coordinate quadratic weights (diagonal entries)

    // Closed-form fields when the entry has them (one-dimensional entries only).
    std::function<double(double t, double x)> exact_y_1d;
    std::function<double(double t, double x)> exact_z_1d;

    bool has_f() const { return static_cast<bool>(f); }
    bool has_g() const { return static_cast<bool>(g); }
    bool is_diagonal_quadratic() const { return diag_a.size() > 0; }

    void eval_terminal(const PathView& path, Eigen::Ref<Eigen::VectorXd> out) const;
    void eval_f(double t, const PathView& path, const Eigen::VectorXd& y, const Eigen::MatrixXd& z,
                Eigen::Ref<Eigen::VectorXd> out) const;
    void eval_g(double t, const PathView& path, const Eigen::VectorXd& y, const Eigen::MatrixXd& z,
                Eigen::Ref<Eigen::VectorXd> out) const;
    void eval_sigma(double t, const PathView& path, Eigen::Ref<Eigen::MatrixXd> out) const;
};

// Total driver F = f + z g as one callable.
BsdeDriverFn structured_driver(const ProblemSpec& spec);

}  // namespace bsde

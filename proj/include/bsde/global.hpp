#pragma once

#include <string>
#include <vector>

#include "bsde/planner.hpp"
#include "bsde/solver.hpp"

namespace bsde {

// Radial truncation z -> radius * z / max(radius, |z|_F). Exact identity
// (bitwise) whenever |z| <= radius; nonexpansive and idempotent.
Eigen::MatrixXd localize(const Eigen::Ref<const Eigen::MatrixXd>& z, double radius);

// Per-time comparison of the fitted z field against sqrt(rho(T - t)).
// Observed values come from the spatial derivative of the fitted value
// field at probe states (visited states plus per-coordinate extremes); the
// degenerate first node uses the pathwise fit, which is a cross-path mean.
struct ZBoundCertificate {
    bool checked = false;
    bool pass = false;
    double slack = 0.05;
    std::vector<double> bound;     // per step: sqrt(rho(T - t_i))
    std::vector<double> observed;  // per step: max |Z|_F over probes
    double worst_ratio = 0.0;
};

// Transformed-scale band e^{-2a(C + Cbar(T-t))} <= Ybar <= e^{2a(C + Cbar(T-t))}.
// Means carry no slack; pathwise values get 2% for sampling noise.
struct EnvelopeCertificate {
    bool checked = false;
    bool mean_pass = false;
    bool path_pass = false;
    bool mirrored = false;  // some a_i < 0: band endpoints mirrored, flagged in reports
    double worst_mean_excess = 0.0;  // relative band overshoot of the worst mean
    double worst_path_excess = 0.0;
    double path_slack = 0.02;
};

struct GlobalSolution {
    DiscreteSolution solution;
    PartitionPlan plan;
    std::string route;
    double localizer_radius = 0.0;
    double localizer_active_fraction = 0.0;
    bool localizer_self_consistent = true;
    std::vector<int> level_left_nodes;             // per level, backward from the horizon
    std::vector<Eigen::MatrixXd> level_snapshots;  // value-field coefficients at each left node
    ZBoundCertificate z_certificate;
    EnvelopeCertificate envelope;
    TevzadzeMargin margin;  // perturbation route only
    bool rejected = false;  // perturbation smallness failed; solution holds the base
    double clamp_fraction = 0.0;  // diagonal route: fitted values clipped to the clamp band
};

// The partition plan a route will run with, computed from the spec alone
// (the superquadratic route plans on the effective structured constant, the
// diagonal route on its transformed constants). Callers align the grid step
// count with the level count before simulating; the perturbed route plans on
// its base problem, so pass the base spec with route "lipschitz".
PartitionPlan plan_for_route(const ProblemSpec& spec, const std::string& route,
                             long long level_cap = 1'000'000);

// Backward gluing over the plan's levels: on each level solve the localized
// BSDE with total driver f + L(z) g(., L(z)) at radius sqrt(R), chaining the
// previous level's fitted values as terminal data. The grid step count must
// be a positive multiple of the level count.
GlobalSolution solve_global_lipschitz_g(const ProblemSpec& spec, const PathBundle& bundle,
                                        const PartitionPlan& plan, const FeatureBasis& basis,
                                        const SolverConfig& config);

// Superquadratic reduction: radius sqrt(rho(T)), effective structured
// Lipschitz bound l(2 sqrt(rho(T))), then the gluing above. Self-consistency
// requires the localizer inactive on at least 99.9% of (path, time) samples;
// a violation is reported on the returned solution, not thrown.
GlobalSolution solve_global_superquadratic(const ProblemSpec& spec, const PathBundle& bundle,
                                           const FeatureBasis& basis, const SolverConfig& config,
                                           long long level_cap = 1'000'000);

// Diagonally quadratic drivers G^i = a^i |z^i|^2 via the exponential
// transform: solve for Ybar^i = e^{2 a^i Y^i} with terminal e^{2 a^i xi^i},
// clip fitted values to the clamp band [e^{-2aM}, e^{2aM}] with
// M = C + Cbar T, certify the comparison envelope, and invert. Restricted to
// plain quadratic drivers (f == 0, g == 0); widespread loss of positivity
// before clamping raises TransformDomainError.
GlobalSolution solve_diagonal_quadratic(const ProblemSpec& spec, const PathBundle& bundle,
                                        const FeatureBasis& basis, const SolverConfig& config,
                                        long long level_cap = 1'000'000);

struct PerturbationConstants {
    double c_y = 1.0;  // y-derivative bound of the target driver
    double c_z = 1.0;  // slope of the z-derivative bound
};

// Perturbation route: solve the base (xi_bar, f + zg), measure the sampled
// deviation |xi - xi_bar| + int |F - f - zg| dt along the base solution, and
// either reject (margin fails; rejected flag set, base returned) or solve the
// difference equation
//   P_t = dxi + int F(s, P + Ybar, Q + Zbar) - Fbar(s, Ybar, Zbar) ds - int Q dW
// with arguments localized at sqrt(threshold), returning (Ybar + P, Zbar + Q).
GlobalSolution solve_perturbed(const ProblemSpec& target, const ProblemSpec& base,
                               const PerturbationConstants& constants, const PathBundle& bundle,
                               const FeatureBasis& basis, const SolverConfig& config,
                               long long level_cap = 1'000'000);

// Exponential transform of one (y, z) sample, z laid out d x n:
//   ybar^i = e^{2 a_i y_i},  zbar^i = 2 a_i ybar^i z^i.
void diagonal_forward(const Eigen::VectorXd& a, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::MatrixXd>& z, Eigen::Ref<Eigen::VectorXd> ybar,
                      Eigen::Ref<Eigen::MatrixXd> zbar);
// Inverse transform; ybar must be strictly positive (TransformDomainError).
void diagonal_inverse(const Eigen::VectorXd& a, const Eigen::Ref<const Eigen::VectorXd>& ybar,
                      const Eigen::Ref<const Eigen::MatrixXd>& zbar, Eigen::Ref<Eigen::VectorXd> y,
                      Eigen::Ref<Eigen::MatrixXd> z);

}  // namespace bsde

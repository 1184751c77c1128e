#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "bsde/paths.hpp"

namespace bsde {

// Polyhedral domain G = cap_i {x : <n_i, x> >= c_i} with oblique reflection
// directions v_i. Rows of `normals` and `directions` are unit vectors with
// <v_i, n_i> > 0. Condition flags record the constructive probes:
//   cond_i   - positive weights a with a_i <n_i,v_i> > sum_{j != i} a_j |<n_i,v_j>|
//              exist (exact M-matrix check; immediate when v == n),
//   cond_ii  - the projection lands on the boundary along admissible
//              directions on random probes,
//   cond_iii - at probed boundary points some inward normal makes a positive
//              angle with every admissible reflection direction.
struct ReflectionSpec {
    Eigen::MatrixXd normals;     // N x m
    Eigen::VectorXd offsets;     // N
    Eigen::MatrixXd directions;  // N x m
    Eigen::VectorXd interior;    // a strictly interior point (empty domain rejected)
    bool cond_i = false;
    bool cond_ii = false;
    bool cond_iii = false;

    int count() const { return static_cast<int>(normals.rows()); }
    int dim() const { return static_cast<int>(normals.cols()); }
    bool valid() const { return cond_i && cond_ii && cond_iii; }
};

// Validates shapes, normalizes rows, locates an interior point and runs the
// three condition probes. Throws PreconditionError on malformed input or an
// empty interior; an all-flags-false spec is returned rather than thrown when
// only the probes fail.
ReflectionSpec make_reflection_spec(const Eigen::MatrixXd& normals, const Eigen::VectorXd& offsets,
                                    const Eigen::MatrixXd& directions);

bool domain_contains(const ReflectionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                     double tol = 1e-12);
// Distance to the closest constraint plane (negative outside).
double boundary_gap(const ReflectionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

// One corrective move: fix the most violated constraint by sliding along its
// reflection direction onto the plane. Identity inside G.
Eigen::VectorXd project_once(const ReflectionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& y);
// Repeated corrective moves until inside G; exceeding the cap raises
// ProjectionError.
Eigen::VectorXd project_to_domain(const ReflectionSpec& spec,
                                  const Eigen::Ref<const Eigen::VectorXd>& y, int cap = 100);

// Discrete solution of the Skorokhod problem for one path: constrained
// values, cumulative regulator and its total variation.
struct ReflectedPath {
    Eigen::MatrixXd values;     // node_count x m, all rows in G
    Eigen::MatrixXd regulator;  // node_count x m, cumulative Psi, first row zero
    Eigen::VectorXd variation;  // node_count, cumulative |Psi|
};

// One-dimensional barrier problem on [a, b]; pass b = +infinity for the
// one-sided case, where the construction matches the explicit formula
// Gamma(phi)_t = phi_t + max(0, max_{s<=t} (a - phi_s)).
ReflectedPath skorokhod_1d(const Eigen::Ref<const Eigen::VectorXd>& phi, double a,
                           double b = std::numeric_limits<double>::infinity());

// Polyhedral Skorokhod problem: per step, add the path increment and project
// back into G, accumulating regulator increments along the applied
// directions.
ReflectedPath skorokhod_polyhedral(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                   const ReflectionSpec& spec, int cap = 100);

// Drift reading the partial solution and the partial driver; volatility is a
// deterministic matrix function of time.
using PathPairDriftFn = std::function<void(double t, const PathView& phi, const PathView& m,
                                           Eigen::Ref<Eigen::VectorXd> out)>;
using TimeVolFn = std::function<void(double t, Eigen::Ref<Eigen::MatrixXd> out)>;

// Euler solution of dPhi = b_f(t, Phi, M) dt + sigma_f(t) dM driven by the
// bundle M. The solution map is Lipschitz with constant C_f (1+T) e^{C_f T}.
PathBundle sde_lipschitz_map(const PathPairDriftFn& b_f, const TimeVolFn& sigma_f,
                             const PathBundle& driver, const Eigen::VectorXd& x0);

struct ReflectedEnsemble {
    PathBundle phi;      // constrained forward states
    RowMat regulator;    // n_paths x (node_count * m), cumulative
    RowMat variation;    // n_paths x node_count, cumulative |Psi|
};

// Reflected SDE: Euler increment then projection, per step. With no
// constraints this reduces to sde_lipschitz_map exactly.
ReflectedEnsemble reflected_sde(const PathPairDriftFn& b_f, const TimeVolFn& sigma_f,
                                const ReflectionSpec& spec, const PathBundle& driver,
                                const Eigen::VectorXd& x0, int cap = 100);

// Empirical Lipschitz certificate for a solution map: paths are compared in
// consecutive pairs (2k, 2k+1) and the worst sup-norm quotient is held
// against the declared constant C_f (1+T) e^{C_f T}.
struct LipschitzCertificate {
    double declared = 0.0;
    double measured = 0.0;
    bool pass = false;
    int pairs = 0;
};
LipschitzCertificate sde_lipschitz_certificate(const PathBundle& phi, const PathBundle& driver,
                                               double c_f);

// Terminal-law check for reflected Brownian motion on [a, b]: sup distance
// of the empirical terminal CDF from the uniform stationary law, streamed
// path by path so long fine grids never materialize.
double rbm_uniform_cdf_distance(double a, double b, double horizon, int steps, int n_paths,
                                std::uint64_t seed);

}  // namespace bsde

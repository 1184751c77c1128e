#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace bsde {

// Strict comparison with a fail-safe guard band: a verdict within 1e-12 of
// its boundary counts as false.
bool strictly_below(double lhs, double rhs);

// Left-hand sides of the two interval-admissibility inequalities. Constants
// follow the declared-squared conventions of AssumptionConstants.
double contraction_lhs(double C, double C_g, double K, double eps);
double decoupling_lhs(double C, double C_g, double K, double eps);

// Admissibility verdicts: true when the inequality holds strictly (guarded).
bool eps_ok_contraction(double C, double C_g, double K, double eps);
bool eps_ok_decoupling(double C, double C_g, double K, double eps);

// Pathwise z-field bound for the structured-driver pipeline: |Z_t|^2 <= rho(T - t).
double rho(double x, double K, double C);

// Local decoupling-field Lipschitz bound: |k(u,.)|_Lip^2 <= rho_fb(T - u).
double rho_fb(double x, double K, double C, double C_g);

// Uniform cap dominating every level constant K_j^N on [0, T].
double horizon_cap(double K, double C, double C_g, double T);

// Level constants: K_0 = K, K_j = (K_{j-1} + C delta) e^{2(C+1)delta + 4 C_g delta^2}.
double level_recursion(double K, double C, double C_g, double delta, long long j);
double level_closed_form(double K, double C, double C_g, double delta, long long j);

struct PartitionPlan {
    long long levels = 0;      // N
    double delta = 0.0;        // T / N
    double horizon_cap = 0.0;  // R
    double k_final = 0.0;      // K_N^N
    double contraction_lhs_at_delta = 0.0;
    double decoupling_lhs_at_delta = 0.0;
    double effective_cg = 0.0;  // the C_g the verdicts were run with

    // Level table K_j. Stored exhaustively for small N; decimated with the
    // given stride otherwise (first and last entries always present).
    std::vector<double> level_table;
    long long level_stride = 1;
    bool decimated = false;

    double K = 0.0, C = 0.0, C_g = 0.0, T = 0.0;  // inputs echoed

    double level(long long j) const;  // closed form, any j in [0, N]
};

// Minimal N >= 2 whose delta = T/N passes both inequalities with the level
// cap R in place of K. Throws PlannerOverflowError naming the binding
// inequality when no N <= cap is admissible.
PartitionPlan plan_partition(double K, double C, double C_g, double T, long long cap = 1'000'000);

// Superquadratic reduction: the localized structured part acts like a
// Lipschitz one with constant l(2 sqrt(rho(T))). Computed once, no iteration.
double superquadratic_effective_cg(const std::function<double(double)>& growth_l, double K, double C,
                                   double T);

struct TevzadzeMargin {
    double beta = 0.0;
    double threshold = 0.0;
    double deviation = 0.0;
    bool pass = false;
};

// Smallness verdict for the perturbation route. Requires c_y, c_z > 0.
TevzadzeMargin tevzadze_margin(double c_y, double c_z, double T, double deviation);

}  // namespace bsde

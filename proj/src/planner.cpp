#include "bsde/planner.hpp"

#include <cmath>
#include <string>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

constexpr double kGuard = 1e-12;
constexpr long long kMaxStoredLevels = 4096;

void require_constants(double C, double C_g, double K) {
    if (!(C >= 0.0) || !(C_g >= 0.0) || !(K >= 0.0) || !std::isfinite(C) || !std::isfinite(C_g) ||
        !std::isfinite(K)) {
        throw DegenerateConstantsError("planner: constants must be finite and nonnegative");
    }
}

// The inequality sides accept K = +inf: planning substitutes the a-priori
// bound for K, and that bound overflows for large drivers. NaN and negative
// values are still refused.
void require_inequality_inputs(double C, double C_g, double K) {
    if (!(C >= 0.0) || !(C_g >= 0.0) || !(K >= 0.0) || !std::isfinite(C) || !std::isfinite(C_g)) {
        throw DegenerateConstantsError("planner: constants must be finite and nonnegative");
    }
}

}  // namespace

bool strictly_below(double lhs, double rhs) {
    if (!std::isfinite(lhs)) {
        return false;
    }
    return rhs - lhs > kGuard * std::max(1.0, std::fabs(rhs));
}

double contraction_lhs(double C, double C_g, double K, double eps) {
    require_inequality_inputs(C, C_g, K);
    if (!(eps > 0.0)) {
        throw PreconditionError("contraction_lhs: eps must be positive");
    }
    if (C_g == 0.0) {
        // Exact: every term carries a C_g factor. Short-circuiting keeps the
        // verdict clean when the exponential overflows for large C or a cap
        // substituted for K is infinite (0 * inf would poison it).
        return 0.0;
    }
    return C_g * (6.0 * std::exp(2.0 * (C + 1.0) * eps) * (K + C * eps) + 1.0) * (eps + 1.0) * eps;
}

double decoupling_lhs(double C, double C_g, double K, double eps) {
    require_inequality_inputs(C, C_g, K);
    if (!(eps > 0.0)) {
        throw PreconditionError("decoupling_lhs: eps must be positive");
    }
    if (C_g == 0.0) {
        return 0.0;  // both branches carry a C_g factor; see contraction_lhs
    }
    const double growth =
        8.0 * std::exp(2.0 * (C + 1.0) * eps + 4.0 * C_g * eps * eps) * (K + C * eps) * C_g * eps;
    return std::max(growth, contraction_lhs(C, C_g, K, eps));
}

bool eps_ok_contraction(double C, double C_g, double K, double eps) {
    return strictly_below(contraction_lhs(C, C_g, K, eps), 1.0);
}

bool eps_ok_decoupling(double C, double C_g, double K, double eps) {
    return strictly_below(decoupling_lhs(C, C_g, K, eps), 1.0);
}

double rho(double x, double K, double C) {
    require_constants(C, 0.0, K);
    if (x < 0.0) {
        throw PreconditionError("rho: argument must be nonnegative");
    }
    const double q = C / (2.0 * (C + 1.0));
    return (K + q) * std::exp(2.0 * (C + 1.0) * x) - q;
}

double rho_fb(double x, double K, double C, double C_g) {
    require_constants(C, C_g, K);
    if (x < 0.0) {
        throw PreconditionError("rho_fb: argument must be nonnegative");
    }
    return (K + C * x) * std::exp(2.0 * (C + 1.0) * x + 4.0 * C_g * x * x);
}

double horizon_cap(double K, double C, double C_g, double T) {
    require_constants(C, C_g, K);
    const double q = C / (2.0 * (C + 1.0));
    return (K + q) * std::exp(4.0 * (C + 1.0) * T + 4.0 * C_g * T * T);
}

double level_recursion(double K, double C, double C_g, double delta, long long j) {
    if (!(delta > 0.0) || j < 0) {
        throw PreconditionError("level_recursion: need delta > 0 and j >= 0");
    }
    const double growth = std::exp(2.0 * (C + 1.0) * delta + 4.0 * C_g * delta * delta);
    double k = K;
    for (long long i = 0; i < j; ++i) {
        k = (k + C * delta) * growth;
    }
    return k;
}

double level_closed_form(double K, double C, double C_g, double delta, long long j) {
    if (!(delta > 0.0) || j < 0) {
        throw PreconditionError("level_closed_form: need delta > 0 and j >= 0");
    }
    const double beta = 2.0 * (C + 1.0) * delta + 4.0 * C_g * delta * delta;
    // A = C delta e^beta / (e^beta - 1), written via expm1 for small beta.
    const double a = C * delta / (-std::expm1(-beta));
    return std::exp(beta * static_cast<double>(j)) * (K + a) - a;
}

double PartitionPlan::level(long long j) const {
    if (j < 0 || j > levels) {
        throw PreconditionError("PartitionPlan::level: index outside [0, N]");
    }
    return level_closed_form(K, C, C_g, delta, j);
}

PartitionPlan plan_partition(double K, double C, double C_g, double T, long long cap) {
    require_constants(C, C_g, K);
    if (!(T > 0.0)) {
        throw PreconditionError("plan_partition: horizon must be positive");
    }
    if (cap < 2) {
        throw PreconditionError("plan_partition: cap must be at least 2");
    }
    const double r = horizon_cap(K, C, C_g, T);
    const auto admissible = [&](long long n) {
        return eps_ok_decoupling(C, C_g, r, T / static_cast<double>(n));
    };

    if (!admissible(cap)) {
        const double eps = T / static_cast<double>(cap);
        const double growth =
            8.0 * std::exp(2.0 * (C + 1.0) * eps + 4.0 * C_g * eps * eps) * (K + C * eps) * C_g * eps;
        const double contr = contraction_lhs(C, C_g, r, eps);
        const char* binding = growth >= contr ? "decoupling-growth" : "contraction";
        throw PlannerOverflowError("plan_partition: no admissible level count up to cap " +
                                   std::to_string(cap) + " (binding inequality: " + binding + ")");
    }

    long long n;
    if (admissible(2)) {
        n = 2;
    } else {
        // The verdict is monotone in N (both left-hand sides increase in eps),
        // so bisect between a failing lo and a passing hi.
        long long lo = 2, hi = cap;
        while (hi - lo > 1) {
            const long long mid = lo + (hi - lo) / 2;
            if (admissible(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        n = hi;
    }

    PartitionPlan plan;
    plan.levels = n;
    plan.delta = T / static_cast<double>(n);
    plan.horizon_cap = r;
    plan.K = K;
    plan.C = C;
    plan.C_g = C_g;
    plan.T = T;
    plan.effective_cg = C_g;
    plan.contraction_lhs_at_delta = contraction_lhs(C, C_g, r, plan.delta);
    plan.decoupling_lhs_at_delta = decoupling_lhs(C, C_g, r, plan.delta);

    if (n <= kMaxStoredLevels) {
        plan.level_table.resize(static_cast<std::size_t>(n) + 1);
        const double growth =
            std::exp(2.0 * (C + 1.0) * plan.delta + 4.0 * C_g * plan.delta * plan.delta);
        double k = K;
        plan.level_table[0] = k;
        for (long long j = 1; j <= n; ++j) {
            k = (k + C * plan.delta) * growth;
            plan.level_table[static_cast<std::size_t>(j)] = k;
        }
        plan.k_final = k;
    } else {
        plan.decimated = true;
        plan.level_stride = (n + kMaxStoredLevels - 1) / kMaxStoredLevels;
        for (long long j = 0; j < n; j += plan.level_stride) {
            plan.level_table.push_back(level_closed_form(K, C, C_g, plan.delta, j));
        }
        plan.level_table.push_back(level_closed_form(K, C, C_g, plan.delta, n));
        plan.k_final = plan.level_table.back();
    }

    if (plan.k_final > r * (1.0 + 1e-9)) {
        throw SolverError("plan_partition: level constants escaped the horizon cap");
    }
    return plan;
}

double superquadratic_effective_cg(const std::function<double(double)>& growth_l, double K, double C,
                                   double T) {
    if (!growth_l) {
        throw PreconditionError("superquadratic_effective_cg: growth envelope required");
    }
    const double cg = growth_l(2.0 * std::sqrt(rho(T, K, C)));
    if (!(cg >= 0.0) || !std::isfinite(cg)) {
        throw DegenerateConstantsError("superquadratic_effective_cg: envelope value invalid");
    }
    return cg;
}

TevzadzeMargin tevzadze_margin(double c_y, double c_z, double T, double deviation) {
    if (!(c_y > 0.0) || !(c_z > 0.0) || !(T > 0.0)) {
        throw DegenerateConstantsError("tevzadze_margin: need c_y, c_z, T > 0");
    }
    if (!(deviation >= 0.0)) {
        throw PreconditionError("tevzadze_margin: deviation must be nonnegative");
    }
    TevzadzeMargin m;
    m.beta = std::max(c_y * c_y * T, c_z * c_z);
    if (!(m.beta > 0.0)) {
        throw DegenerateConstantsError("tevzadze_margin: degenerate beta");
    }
    m.threshold = std::min(1.0 / (256.0 * m.beta), c_z * c_z);
    m.deviation = deviation;
    m.pass = strictly_below(deviation, m.threshold);
    return m;
}

}  // namespace bsde

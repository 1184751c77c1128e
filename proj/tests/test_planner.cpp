#include <doctest.h>

#include <cmath>
#include <limits>

#include "bsde/errors.hpp"
#include "bsde/planner.hpp"

using namespace bsde;

TEST_CASE("strict comparison guards its boundary") {
    CHECK(strictly_below(0.5, 1.0));
    CHECK_FALSE(strictly_below(1.0, 1.0));
    CHECK_FALSE(strictly_below(1.0 - 5e-13, 1.0));
    CHECK(strictly_below(1.0 - 1e-9, 1.0));
    CHECK_FALSE(strictly_below(std::numeric_limits<double>::infinity(), 1.0));
    CHECK_FALSE(strictly_below(std::numeric_limits<double>::quiet_NaN(), 1.0));
}

TEST_CASE("bound functions hit their anchors") {
    CHECK(rho(0.0, 0.7, 1.3) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(rho_fb(0.0, 0.7, 1.3, 0.4) == doctest::Approx(0.7).epsilon(1e-14));
    // rho(1, 1, 1) = 1.25 e^4 - 0.25, high-precision quadrature-free value.
    CHECK(rho(1.0, 1.0, 1.0) == doctest::Approx(67.997687541430299).epsilon(1e-13));
    CHECK(horizon_cap(1.0, 1.0, 1.0, 1.0) == doctest::Approx(203443.48927375490).epsilon(1e-13));
}

TEST_CASE("level recursion agrees with the closed form") {
    const double ks[] = {0.1, 1.0, 2.0};
    for (double K : ks) {
        for (double delta : {0.01, 0.17}) {
            for (long long j : {0LL, 1LL, 7LL, 40LL}) {
                const double a = level_recursion(K, 1.0, 0.25, delta, j);
                const double b = level_closed_form(K, 1.0, 0.25, delta, j);
                CHECK(a == doctest::Approx(b).epsilon(1e-12));
            }
        }
    }
    // Independent high-precision sample of the closed form.
    CHECK(level_closed_form(1.0, 1.0, 0.25, 0.17, 7) ==
          doctest::Approx(190.43309891326564).epsilon(1e-13));
}

TEST_CASE("structured-part-free constants plan at the minimum") {
    const PartitionPlan plan = plan_partition(1.0, 1.0, 0.0, 1.0);
    CHECK(plan.levels == 2);
    CHECK(plan.contraction_lhs_at_delta == 0.0);
    CHECK(plan.decoupling_lhs_at_delta == 0.0);
}

TEST_CASE("inequality sides vanish exactly without a structured part") {
    // The cap substituted for K can overflow for large C; a zero structured
    // constant must keep the verdict clean rather than poisoning it with inf*0.
    const double r = horizon_cap(144.0, 1300.0, 0.0, 1.0);
    CHECK(std::isinf(r));
    CHECK(decoupling_lhs(1300.0, 0.0, r, 0.5) == 0.0);
    CHECK(contraction_lhs(1300.0, 0.0, r, 0.5) == 0.0);
    CHECK(plan_partition(144.0, 1300.0, 0.0, 1.0).levels == 2);
}

TEST_CASE("planner finds the minimal admissible level count") {
    // Independently derived count for unit constants: 1627552 levels, with
    // the inequality value 0.99999995 at N and 1.0000006 at N - 1.
    const PartitionPlan plan = plan_partition(1.0, 1.0, 1.0, 1.0, 4'000'000);
    CHECK(plan.levels == 1627552);
    CHECK(plan.delta == doctest::Approx(1.0 / 1627552.0).epsilon(1e-15));
    CHECK(plan.k_final <= plan.horizon_cap * (1.0 + 1e-9));
    CHECK(plan.decimated);
    CHECK(plan.level_table.size() >= 2);
    CHECK(plan.level_table.front() == 1.0);
    CHECK(plan.level_table.back() == plan.k_final);
}

TEST_CASE("planner overflow names the binding inequality") {
    CHECK_THROWS_WITH_AS(plan_partition(1.0, 1.0, 1.0, 1.0, 1000),
                         doctest::Contains("binding inequality"), PlannerOverflowError);
}

TEST_CASE("degenerate constants are refused") {
    CHECK_THROWS_AS(plan_partition(-1.0, 1.0, 0.0, 1.0), DegenerateConstantsError);
    CHECK_THROWS_AS(rho(1.0, 1.0, -2.0), DegenerateConstantsError);
    CHECK_THROWS_AS(contraction_lhs(1.0, 1.0, 1.0, 0.0), PreconditionError);
}

TEST_CASE("superquadratic reduction evaluates the envelope at the z cap") {
    const double value = superquadratic_effective_cg([](double r) { return r * r; }, 0.01, 1.0, 0.25);
    CHECK(value == doctest::Approx(4.0 * rho(0.25, 0.01, 1.0)).epsilon(1e-12));
    CHECK(superquadratic_effective_cg([](double) { return 0.0; }, 1.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("smallness threshold for unit derivative bounds") {
    const TevzadzeMargin m = tevzadze_margin(1.0, 1.0, 1.0, 0.0);
    CHECK(m.beta == 1.0);
    CHECK(m.threshold == 1.0 / 256.0);
    CHECK(m.pass);
    CHECK_FALSE(tevzadze_margin(1.0, 1.0, 1.0, 1.0 / 256.0).pass);
    CHECK_THROWS_AS(tevzadze_margin(0.0, 1.0, 1.0, 0.0), DegenerateConstantsError);
}

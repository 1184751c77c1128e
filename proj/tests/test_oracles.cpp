#include <doctest.h>

#include <cmath>

#include "bsde/oracle.hpp"

using namespace bsde;

namespace {
constexpr double kPi = 3.141592653589793238462643383280;
}

TEST_CASE("hermite rule integrates its weight") {
    const GaussHermiteRule rule = gauss_hermite(16);
    CHECK(rule.nodes.size() == 16);
    CHECK(rule.weights.sum() == doctest::Approx(std::sqrt(kPi)).epsilon(1e-13));
    // Nodes come out symmetric about zero.
    CHECK(rule.nodes.sum() == doctest::Approx(0.0).epsilon(1e-12));
    // Second moment of the weight: integral x^2 e^{-x^2} = sqrt(pi)/2.
    double second = 0.0;
    for (int i = 0; i < 16; ++i) second += rule.weights(i) * rule.nodes(i) * rule.nodes(i);
    CHECK(second == doctest::Approx(std::sqrt(kPi) / 2.0).epsilon(1e-12));
}

TEST_CASE("conditional expectations against high-precision values") {
    const OracleResult zero = quadrature_conditional_expectation(
        [](double x) { return std::sin(x); }, 0.0, 0.0, 1.0);
    CHECK(std::abs(zero.value) <= 1e-12);
    CHECK(zero.self_gap <= 1e-8);
    CHECK_FALSE(zero.method.empty());

    const OracleResult square = quadrature_conditional_expectation(
        [](double x) { return x * x; }, 0.0, 0.0, 1.0);
    CHECK(square.value == doctest::Approx(1.0).epsilon(1e-10));

    // E[sin(0.7 + W_1)] = sin(0.7) e^{-1/2} = 0.39073777883882370
    const OracleResult shifted = quadrature_conditional_expectation(
        [](double x) { return std::sin(x); }, 0.0, 0.7, 1.0);
    CHECK(shifted.value == doctest::Approx(0.39073777883882370).epsilon(1e-9));

    // E[e^{2 sin(W_1)}] = 2.0931412707566492
    const OracleResult exp_sine = quadrature_conditional_expectation(
        [](double x) { return std::exp(2.0 * std::sin(x)); }, 0.0, 0.0, 1.0);
    CHECK(exp_sine.value == doctest::Approx(2.0931412707566492).epsilon(1e-8));
}

TEST_CASE("exponential change of variable reference") {
    // y = log E[e^{2 sin(W_1)}] / 2 = 0.36933296898209934,
    // z = d/dx of that field at zero = 0.45753253010603095.
    const ColeHopfReference ref =
        cole_hopf_reference([](double x) { return std::sin(x); }, 1.0, 0.0, 0.0, 1.0);
    CHECK(ref.y == doctest::Approx(0.36933296898209934).epsilon(1e-8));
    CHECK(ref.z == doctest::Approx(0.45753253010603095).epsilon(1e-6));
    CHECK(ref.fd_gap <= 1e-5);
    CHECK(ref.order > 0);
}

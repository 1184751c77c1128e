#include <doctest.h>

#include <cmath>

#include "bsde/errors.hpp"
#include "bsde/reflection.hpp"
#include "bsde/rng.hpp"

using namespace bsde;

namespace {

Eigen::VectorXd random_walk(int steps, double start, double sd, std::uint64_t seed, int path) {
    Eigen::VectorXd phi(steps + 1);
    phi(0) = start;
    for (int i = 0; i < steps; ++i) {
        phi(i + 1) = phi(i) + sd * rng::normal(seed, path, i, 0);
    }
    return phi;
}

}  // namespace

TEST_CASE("one-sided problem matches the explicit running-max formula") {
    for (int p = 0; p < 50; ++p) {
        const Eigen::VectorXd phi = random_walk(100, 0.2, 0.15, 61, p);
        const ReflectedPath rp = skorokhod_1d(phi, 0.0);
        double running = 0.0;
        for (int i = 0; i <= 100; ++i) {
            running = std::max(running, -phi(i));
            const double formula = phi(i) + std::max(0.0, running);
            CHECK(std::abs(rp.values(i, 0) - formula) <= 1e-12);
            CHECK(rp.values(i, 0) >= -1e-15);
        }
        CHECK(rp.variation(100) >= 0.0);
        CHECK(rp.regulator(0, 0) == 0.0);
    }
}

TEST_CASE("two-sided problem confines the path") {
    const Eigen::VectorXd phi = random_walk(400, 0.5, 0.3, 67, 0);
    const ReflectedPath rp = skorokhod_1d(phi, 0.0, 1.0);
    for (int i = 0; i <= 400; ++i) {
        CHECK(rp.values(i, 0) >= -1e-12);
        CHECK(rp.values(i, 0) <= 1.0 + 1e-12);
    }
}

TEST_CASE("normal reflection on the orthant splits per coordinate") {
    Eigen::MatrixXd normals(2, 2);
    normals << 1.0, 0.0, 0.0, 1.0;
    const ReflectionSpec spec =
        make_reflection_spec(normals, Eigen::VectorXd::Zero(2), normals);
    CHECK(spec.valid());
    CHECK(domain_contains(spec, spec.interior));

    Eigen::MatrixXd phi(101, 2);
    phi(0, 0) = 0.5;
    phi(0, 1) = 0.25;
    for (int i = 0; i < 100; ++i) {
        for (int c = 0; c < 2; ++c) {
            phi(i + 1, c) = phi(i, c) + 0.2 * rng::normal(71, 0, i, static_cast<std::uint64_t>(c));
        }
    }
    const ReflectedPath joint = skorokhod_polyhedral(phi, spec);
    for (int c = 0; c < 2; ++c) {
        const ReflectedPath single = skorokhod_1d(phi.col(c), 0.0);
        CHECK((joint.values.col(c) - single.values.col(0)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("projection repairs the worst violated constraint along its direction") {
    Eigen::MatrixXd normals(2, 2), dirs(2, 2);
    normals << 1.0, 0.0, 0.0, 1.0;
    dirs << 1.0, 0.3, 0.4, 1.0;
    const ReflectionSpec spec = make_reflection_spec(normals, Eigen::VectorXd::Zero(2), dirs);
    CHECK(spec.valid());

    Eigen::VectorXd inside(2);
    inside << 0.3, 0.4;
    CHECK((project_to_domain(spec, inside) - inside).norm() == 0.0);

    Eigen::VectorXd outside(2);
    outside << -0.4, 0.2;
    const Eigen::VectorXd fixed = project_to_domain(spec, outside);
    CHECK(boundary_gap(spec, fixed) >= -1e-12);
}

TEST_CASE("malformed reflection specs are refused") {
    Eigen::MatrixXd normals(2, 2);
    normals << 1.0, 0.0, -1.0, 0.0;
    // Half-planes x >= 0 and x <= -1 have empty intersection.
    Eigen::VectorXd offsets(2);
    offsets << 0.0, 1.0;
    CHECK_THROWS_AS(make_reflection_spec(normals, offsets, normals), PreconditionError);
}

TEST_CASE("solution map certificate on a unit-Lipschitz drift") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 50);
    const PathBundle driver = simulate_brownian(grid, 1, 1000, 73);
    PathPairDriftFn b = [](double, const PathView& phi, const PathView&,
                           Eigen::Ref<Eigen::VectorXd> out) {
        out(0) = -std::sin(phi.at(phi.upto, 0));
    };
    TimeVolFn vol = [](double, Eigen::Ref<Eigen::MatrixXd> out) { out.setIdentity(); };
    const PathBundle phi = sde_lipschitz_map(b, vol, driver, Eigen::VectorXd::Zero(1));
    const LipschitzCertificate cert = sde_lipschitz_certificate(phi, driver, 1.0);
    CHECK(cert.declared == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
    CHECK(cert.measured <= cert.declared);
    CHECK(cert.pass);
    CHECK(cert.pairs == 500);
}

TEST_CASE("constrained motion settles toward the uniform law") {
    const double distance = rbm_uniform_cdf_distance(0.0, 1.0, 4.0, 2000, 20000, 79);
    CHECK(distance <= 0.05);
}

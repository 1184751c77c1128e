#include <doctest.h>

#include <cmath>

#include "bsde/audit.hpp"
#include "bsde/catalog.hpp"
#include "bsde/errors.hpp"
#include "bsde/paths.hpp"

using namespace bsde;

namespace {

PathBundle single_path(double last_value) {
    PathBundle bundle;
    bundle.grid = TimeGrid::uniform(1.0, 2);
    bundle.dim = 1;
    bundle.n_paths = 1;
    bundle.values = RowMat::Zero(1, 3);
    bundle.values(0, 2) = last_value;
    return bundle;
}

}  // namespace

TEST_CASE("every catalog name resolves") {
    for (const auto& name : catalog_names()) {
        const ProblemSpec spec = lookup_catalog(name);
        CHECK(spec.name == name);
        CHECK(spec.T > 0.0);
        CHECK(static_cast<bool>(spec.terminal));
    }
}

TEST_CASE("unknown entries and parameters are refused") {
    CHECK_THROWS_WITH_AS(lookup_catalog("no-such-entry"), doctest::Contains("available:"),
                         CatalogError);
    CHECK_THROWS_WITH_AS(lookup_catalog("bounded-sine", {{"wavelength", 2.0}}),
                         doctest::Contains("wavelength"), CatalogError);
    CHECK_THROWS_AS(lookup_catalog("zero", {{"T", -1.0}}), CatalogError);
}

TEST_CASE("terminal functionals read the last node") {
    const ProblemSpec spec = lookup_catalog("bounded-sine", {{"amp", 0.5}, {"phase", 0.25}});
    const PathBundle bundle = single_path(0.4);
    Eigen::VectorXd out(1);
    spec.eval_terminal(bundle.full_view(0), out);
    CHECK(out(0) == doctest::Approx(0.5 * std::sin(0.65)).epsilon(1e-15));
}

TEST_CASE("closed forms attached to affine entries") {
    const ProblemSpec spec = lookup_catalog("linear-drift", {{"c", 0.4}});
    CHECK(spec.exact_y_1d(0.0, 0.0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(spec.exact_z_1d(0.3, 1.7) == 1.0);
    const ProblemSpec quad = lookup_catalog("quad-terminal");
    CHECK(quad.exact_y_1d(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("total driver composes f and the structured part") {
    const ProblemSpec spec = lookup_catalog("coupled-linear", {{"c0", 0.3}, {"c1", 0.2}});
    BsdeDriverFn driver = structured_driver(spec);
    const PathBundle bundle = single_path(0.0);
    Eigen::VectorXd y(1), out(1);
    Eigen::MatrixXd z(1, 1);
    y << 2.0;
    z << 0.5;
    driver(0.0, bundle.view(0, 0), y, z, out);
    CHECK(out(0) == doctest::Approx(0.5 * (0.3 + 0.2 * 2.0)).epsilon(1e-15));

    // Entries without any driver still produce a callable that writes zero.
    BsdeDriverFn empty = structured_driver(lookup_catalog("bounded-sine"));
    empty(0.0, bundle.view(0, 0), y, z, out);
    CHECK(out(0) == 0.0);
}

TEST_CASE("declared constants survive their sampling audit") {
    for (const char* name : {"bounded-sine", "quad-terminal", "coupled-linear", "linear-drift"}) {
        const AuditReport report = audit_assumptions(lookup_catalog(name), 200, 11);
        INFO(name, ": ", report.summary());
        CHECK(report.pass);
        CHECK_FALSE(report.checks.empty());
    }
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bsde/config.hpp"
#include "bsde/errors.hpp"
#include "bsde/run.hpp"

using namespace bsde;

namespace {

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunConfig small_run(const std::string& out_dir) {
    RunConfig cfg;
    cfg.route = "lipschitz";
    cfg.problem = "bounded-sine";
    cfg.params = {{"T", 1.0}};
    cfg.seed = 3;
    cfg.n_paths = 400;
    cfg.steps = 10;
    cfg.quiet = true;
    cfg.out_dir = out_dir;
    return cfg;
}

}  // namespace

TEST_CASE("well-formed configs parse with defaults filled") {
    const RunConfig cfg = parse_config(
        R"({"route":"lipschitz","problem":"bounded-sine","seed":7,"n_paths":500,"steps":10})");
    CHECK(cfg.route == "lipschitz");
    CHECK(cfg.seed == 7);
    CHECK(cfg.n_paths == 500);
    CHECK(cfg.degree == 2);
    CHECK(cfg.tol == 1e-6);
    CHECK(cfg.out_dir == "out");
}

TEST_CASE("config rejections name the offending part") {
    CHECK_THROWS_WITH_AS(parse_config("{"), doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"route":"lipschitz","problem":"bounded-sine","seed":1,"valuez":3})"),
        doctest::Contains("valuez"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"route":"lipschitz","problem":"bounded-sine"})"),
                         doctest::Contains("seed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"route":"lipschitz","problem":"bounded-sine","seed":-1})"),
                         doctest::Contains("seed"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"route":"warp","problem":"bounded-sine","seed":1})"),
        doctest::Contains("route"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"route":"lipschitz","problem":"no-such","seed":1})"),
                    ConfigError);
}

TEST_CASE("route and problem compatibility is enforced") {
    CHECK_THROWS_AS(parse_config(R"({"route":"diagonal","problem":"bounded-sine","seed":1})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"route":"superquadratic","problem":"linear-drift","seed":1})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"route":"fbsde-local","problem":"zero","seed":1})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"route":"perturbed","problem":"bounded-sine","seed":1})"),
        ConfigError);
    // The same fields pass with a compatible pairing.
    CHECK_NOTHROW(parse_config(R"({"route":"diagonal","problem":"quad-1d","seed":1})"));
    CHECK_NOTHROW(parse_config(
        R"({"route":"perturbed","problem":"bounded-sine","base_problem":"bounded-sine","seed":1})"));
}

TEST_CASE("the acceptance route has its own entry point") {
    RunConfig cfg;
    cfg.route = "acceptance";
    cfg.seed = 1;
    std::ostringstream sink;
    CHECK_THROWS_AS(execute_run(cfg, sink), ConfigError);
}

TEST_CASE("a full run writes its artifacts deterministically") {
    std::ostringstream sink;
    const int rc_a = execute_run(small_run("run-det/a"), sink);
    const int rc_b = execute_run(small_run("run-det/b"), sink);
    CHECK(rc_a == 0);
    CHECK(rc_b == 0);

    const std::string cert_a = read_bytes("run-det/a/certificate.txt");
    const std::string cert_b = read_bytes("run-det/b/certificate.txt");
    CHECK(cert_a == cert_b);
    CHECK(cert_a.find("route: lipschitz") != std::string::npos);
    CHECK(cert_a.find("seed: 3") != std::string::npos);
    CHECK(read_bytes("run-det/a/solution.csv") == read_bytes("run-det/b/solution.csv"));
}

TEST_CASE("perturbation rejection surfaces through the exit code") {
    RunConfig cfg;
    cfg.route = "perturbed";
    cfg.problem = "quad-terminal";
    cfg.base_problem = "bounded-sine";
    cfg.seed = 5;
    cfg.n_paths = 400;
    cfg.steps = 10;
    cfg.quiet = true;
    cfg.out_dir = "run-rejected";
    std::ostringstream sink;
    CHECK(execute_run(cfg, sink) == 4);
    const std::string cert = read_bytes("run-rejected/certificate.txt");
    CHECK(cert.find("smallness") != std::string::npos);
}

TEST_CASE("coupled routes run end to end") {
    RunConfig cfg;
    cfg.route = "fbsde-local";
    cfg.problem = "coupled-linear";
    cfg.params = {{"T", 0.25}};
    cfg.seed = 9;
    cfg.n_paths = 1500;
    cfg.steps = 8;
    cfg.tol = 1e-4;
    cfg.quiet = true;
    cfg.out_dir = "run-coupled";
    std::ostringstream sink;
    CHECK(execute_run(cfg, sink) == 0);
    CHECK(std::filesystem::exists("run-coupled/certificate.txt"));

    RunConfig via;
    via.route = "fbsde-via-bsde";
    via.problem = "linear-drift";
    via.params = {{"T", 1.0}};
    via.seed = 9;
    via.n_paths = 1500;
    via.steps = 10;
    via.quiet = true;
    via.out_dir = "run-via";
    CHECK(execute_run(via, sink) == 0);
    CHECK(std::filesystem::exists("run-via/certificate.txt"));
}

TEST_CASE("reflected route runs on its default domain") {
    RunConfig cfg;
    cfg.route = "reflected-sde";
    cfg.problem = "reflected-drift";
    cfg.params = {{"T", 1.0}, {"theta", 1.0}};
    cfg.seed = 9;
    cfg.n_paths = 400;
    cfg.steps = 50;
    cfg.quiet = true;
    cfg.out_dir = "run-reflected";
    std::ostringstream sink;
    CHECK(execute_run(cfg, sink) == 0);
    CHECK(std::filesystem::exists("run-reflected/certificate.txt"));
    CHECK(std::filesystem::exists("run-reflected/reflected.csv"));
}

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace bsde {

// Polyhedral domain description for the reflected route. Zero constraint
// rows mean "use the route default".
struct DomainConfig {
    Eigen::MatrixXd normals;
    Eigen::VectorXd offsets;
    Eigen::MatrixXd directions;  // empty: reflect along the normals
};

// One validated run request. Parsing is strict: unknown keys, wrong types,
// missing required keys and route/problem mismatches are all ConfigError.
struct RunConfig {
    std::string route;    // lipschitz | superquadratic | diagonal | perturbed |
                          // fbsde-local | fbsde-via-bsde | reflected-sde | acceptance
    std::string problem;  // catalog entry; optional for the acceptance route
    std::map<std::string, double> params;

    std::uint64_t seed = 0;  // mandatory in the file; there is no entropy default
    int n_paths = 100000;
    int steps = 50;
    double tol = 1e-6;
    int max_iter = 50;

    int degree = 2;  // regression basis
    bool running_max = false;
    bool running_integral = false;

    long long level_cap = 1'000'000;
    std::string out_dir = "out";
    bool quiet = false;
    bool csv_solution = true;
    bool csv_weights = false;

    double tolerance_scale = 1.0;  // acceptance route: scales every criterion tolerance

    std::string base_problem;  // perturbed route: reference equation
    std::map<std::string, double> base_params;
    double c_y = 1.0;  // perturbed route: target-driver derivative bounds
    double c_z = 1.0;

    DomainConfig domain;  // reflected route
    Eigen::VectorXd x0;   // forward start; empty picks the route default
};

// Parse and validate a JSON document. Throws ConfigError with the offending
// line and column on malformed JSON, and with the offending key otherwise.
RunConfig parse_config(const std::string& text);

// Read the file and parse it. Unreadable files raise ConfigError.
RunConfig load_config(const std::string& path);

// Re-run the cross-field checks (ranges, route/problem compatibility).
// parse_config calls this; callers that override fields afterwards should
// call it again.
void validate_config(const RunConfig& config);

}  // namespace bsde

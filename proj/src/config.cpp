#include "bsde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "bsde/catalog.hpp"
#include "bsde/errors.hpp"

namespace bsde {

namespace {

using nlohmann::json;

// nlohmann reports a byte offset; turn it into line/column against the text.
std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

double want_number(const json& j, const std::string& key) {
    if (!j.is_number()) {
        throw ConfigError("config key '" + key + "' must be a number");
    }
    return j.get<double>();
}

long long want_integer(const json& j, const std::string& key) {
    if (!j.is_number_integer()) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
    return j.get<long long>();
}

bool want_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) {
        throw ConfigError("config key '" + key + "' must be a boolean");
    }
    return j.get<bool>();
}

std::string want_string(const json& j, const std::string& key) {
    if (!j.is_string()) {
        throw ConfigError("config key '" + key + "' must be a string");
    }
    return j.get<std::string>();
}

std::map<std::string, double> want_number_map(const json& j, const std::string& key) {
    if (!j.is_object()) {
        throw ConfigError("config key '" + key + "' must be an object of numbers");
    }
    std::map<std::string, double> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        out[it.key()] = want_number(it.value(), key + "." + it.key());
    }
    return out;
}

Eigen::MatrixXd want_matrix(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError("config key '" + key + "' must be a non-empty array of number arrays");
    }
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    Eigen::MatrixXd out;
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.empty()) {
            throw ConfigError("config key '" + key + "' must hold non-empty rows");
        }
        if (r == 0) {
            cols = row.size();
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            throw ConfigError("config key '" + key + "' has ragged rows");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                want_number(row[c], key);
        }
    }
    return out;
}

Eigen::VectorXd want_vector(const json& j, const std::string& key) {
    if (!j.is_array()) {
        throw ConfigError("config key '" + key + "' must be an array of numbers");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = want_number(j[i], key);
    }
    return out;
}

DomainConfig parse_domain(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config key 'domain' must be an object");
    }
    static const std::set<std::string> allowed = {"normals", "offsets", "directions"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown config key 'domain." + it.key() + "'");
        }
    }
    if (!j.contains("normals") || !j.contains("offsets")) {
        throw ConfigError("config key 'domain' needs both 'normals' and 'offsets'");
    }
    DomainConfig d;
    d.normals = want_matrix(j.at("normals"), "domain.normals");
    d.offsets = want_vector(j.at("offsets"), "domain.offsets");
    if (j.contains("directions")) {
        d.directions = want_matrix(j.at("directions"), "domain.directions");
    }
    if (d.offsets.size() != d.normals.rows()) {
        throw ConfigError("config key 'domain.offsets' must have one entry per normal row");
    }
    if (d.directions.size() > 0 && (d.directions.rows() != d.normals.rows() ||
                                    d.directions.cols() != d.normals.cols())) {
        throw ConfigError("config key 'domain.directions' must match the shape of 'domain.normals'");
    }
    return d;
}

const std::set<std::string>& known_routes() {
    static const std::set<std::string> routes = {
        "lipschitz",   "superquadratic", "diagonal",      "perturbed",
        "fbsde-local", "fbsde-via-bsde", "reflected-sde", "acceptance"};
    return routes;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }

    static const std::set<std::string> allowed = {
        "route",      "problem",       "params",       "seed",        "n_paths",
        "steps",      "tol",           "max_iter",     "degree",      "running_max",
        "running_integral", "level_cap", "out",        "quiet",       "csv_solution",
        "csv_weights", "tolerance_scale", "base_problem", "base_params", "c_y",
        "c_z",        "domain",        "x0"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown config key '" + it.key() + "'");
        }
    }

    RunConfig cfg;
    if (!doc.contains("route")) {
        throw ConfigError("config key 'route' is required");
    }
    cfg.route = want_string(doc.at("route"), "route");

    if (!doc.contains("seed")) {
        throw ConfigError("config key 'seed' is required (runs never draw entropy)");
    }
    const long long seed = want_integer(doc.at("seed"), "seed");
    if (seed < 0) {
        throw ConfigError("config key 'seed' must be non-negative");
    }
    cfg.seed = static_cast<std::uint64_t>(seed);

    if (doc.contains("problem")) cfg.problem = want_string(doc.at("problem"), "problem");
    if (doc.contains("params")) cfg.params = want_number_map(doc.at("params"), "params");
    if (doc.contains("n_paths"))
        cfg.n_paths = static_cast<int>(want_integer(doc.at("n_paths"), "n_paths"));
    if (doc.contains("steps")) cfg.steps = static_cast<int>(want_integer(doc.at("steps"), "steps"));
    if (doc.contains("tol")) cfg.tol = want_number(doc.at("tol"), "tol");
    if (doc.contains("max_iter"))
        cfg.max_iter = static_cast<int>(want_integer(doc.at("max_iter"), "max_iter"));
    if (doc.contains("degree"))
        cfg.degree = static_cast<int>(want_integer(doc.at("degree"), "degree"));
    if (doc.contains("running_max")) cfg.running_max = want_bool(doc.at("running_max"), "running_max");
    if (doc.contains("running_integral"))
        cfg.running_integral = want_bool(doc.at("running_integral"), "running_integral");
    if (doc.contains("level_cap")) cfg.level_cap = want_integer(doc.at("level_cap"), "level_cap");
    if (doc.contains("out")) cfg.out_dir = want_string(doc.at("out"), "out");
    if (doc.contains("quiet")) cfg.quiet = want_bool(doc.at("quiet"), "quiet");
    if (doc.contains("csv_solution"))
        cfg.csv_solution = want_bool(doc.at("csv_solution"), "csv_solution");
    if (doc.contains("csv_weights")) cfg.csv_weights = want_bool(doc.at("csv_weights"), "csv_weights");
    if (doc.contains("tolerance_scale"))
        cfg.tolerance_scale = want_number(doc.at("tolerance_scale"), "tolerance_scale");
    if (doc.contains("base_problem"))
        cfg.base_problem = want_string(doc.at("base_problem"), "base_problem");
    if (doc.contains("base_params"))
        cfg.base_params = want_number_map(doc.at("base_params"), "base_params");
    if (doc.contains("c_y")) cfg.c_y = want_number(doc.at("c_y"), "c_y");
    if (doc.contains("c_z")) cfg.c_z = want_number(doc.at("c_z"), "c_z");
    if (doc.contains("domain")) cfg.domain = parse_domain(doc.at("domain"));
    if (doc.contains("x0")) cfg.x0 = want_vector(doc.at("x0"), "x0");

    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void validate_config(const RunConfig& config) {
    if (!known_routes().count(config.route)) {
        std::string known;
        for (const auto& r : known_routes()) {
            known += (known.empty() ? "" : ", ") + r;
        }
        throw ConfigError("unknown route '" + config.route + "' (available: " + known + ")");
    }
    if (config.n_paths < 2) throw ConfigError("config key 'n_paths' must be at least 2");
    if (config.steps < 1) throw ConfigError("config key 'steps' must be at least 1");
    if (!(config.tol > 0.0)) throw ConfigError("config key 'tol' must be positive");
    if (config.max_iter < 1) throw ConfigError("config key 'max_iter' must be at least 1");
    if (config.degree < 1) throw ConfigError("config key 'degree' must be at least 1");
    if (config.level_cap < 2) throw ConfigError("config key 'level_cap' must be at least 2");
    if (!(config.tolerance_scale > 0.0))
        throw ConfigError("config key 'tolerance_scale' must be positive");
    if (config.out_dir.empty()) throw ConfigError("config key 'out' must not be empty");

    if (config.route == "acceptance") {
        return;  // the suite picks its own problems
    }
    if (config.problem.empty()) {
        throw ConfigError("config key 'problem' is required for route '" + config.route + "'");
    }

    // Instantiating the entry validates the name and the parameter list and
    // exposes the structure flags the route checks need.
    ProblemSpec spec;
    try {
        spec = lookup_catalog(config.problem, config.params);
    } catch (const CatalogError& e) {
        throw ConfigError(std::string("config problem rejected: ") + e.what());
    }

    if (config.route == "superquadratic" && !spec.growth_l) {
        throw ConfigError("route 'superquadratic' needs a problem with a declared z-growth "
                          "envelope; '" + config.problem + "' has none");
    }
    if (config.route == "diagonal" && !spec.is_diagonal_quadratic()) {
        throw ConfigError("route 'diagonal' needs a problem with per-coordinate quadratic "
                          "weights; '" + config.problem + "' has none");
    }
    if (config.route == "perturbed") {
        if (config.base_problem.empty()) {
            throw ConfigError("route 'perturbed' needs 'base_problem'");
        }
        try {
            lookup_catalog(config.base_problem, config.base_params);
        } catch (const CatalogError& e) {
            throw ConfigError(std::string("config base problem rejected: ") + e.what());
        }
        if (!(config.c_y > 0.0) || !(config.c_z > 0.0)) {
            throw ConfigError("route 'perturbed' needs positive 'c_y' and 'c_z'");
        }
    }
    if ((config.route == "fbsde-local" || config.route == "fbsde-via-bsde") && !spec.has_g()) {
        throw ConfigError("route '" + config.route + "' needs a problem with a structured "
                          "coupling part; '" + config.problem + "' has none");
    }
    if (config.route == "fbsde-via-bsde" && (!spec.markovian || !spec.sigma_is_identity)) {
        throw ConfigError("route 'fbsde-via-bsde' needs state-dependent coefficients and unit "
                          "volatility; '" + config.problem + "' declares otherwise");
    }
    if (config.route == "reflected-sde") {
        if (config.domain.normals.rows() > 0 && config.domain.normals.cols() != spec.m) {
            throw ConfigError("config key 'domain.normals' must have one column per forward "
                              "coordinate");
        }
    }
    if (config.x0.size() > 0 && config.x0.size() != spec.m) {
        throw ConfigError("config key 'x0' must have one entry per forward coordinate");
    }
}

}  // namespace bsde

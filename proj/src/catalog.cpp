#include "bsde/catalog.hpp"

#include <cmath>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

double take(std::map<std::string, double>& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) {
        return fallback;
    }
    const double v = it->second;
    p.erase(it);
    return v;
}

void expect_consumed(const std::map<std::string, double>& p, const std::string& entry) {
    if (!p.empty()) {
        throw CatalogError("catalog entry '" + entry + "' does not take parameter '" + p.begin()->first +
                           "'");
    }
}

double take_horizon(std::map<std::string, double>& p) {
    const double T = take(p, "T", 1.0);
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw CatalogError("catalog: horizon T must be finite and positive");
    }
    return T;
}

ProblemSpec scalar_skeleton(const std::string& name, double T) {
    ProblemSpec s;
    s.name = name;
    s.m = s.n = s.d = 1;
    s.T = T;
    return s;
}

TerminalFn last_node_terminal(std::function<double(double)> h) {
    return [h = std::move(h)](const PathView& path, Eigen::Ref<Eigen::VectorXd> out) {
        out[0] = h(path.at(path.upto, 0));
    };
}

}  // namespace

ProblemSpec lookup_catalog(const std::string& name, const std::map<std::string, double>& params) {
    std::map<std::string, double> p = params;

    if (name == "zero") {
        const double T = take_horizon(p);
        expect_consumed(p, name);
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([](double) { return 0.0; });
        s.constants = {.K = 0.0, .C = 1.0, .C_g = 0.0, .C_bar = 0.0, .M_ell = 2.0};
        s.growth_l = [](double) { return 0.0; };
        s.exact_y_1d = [](double, double) { return 0.0; };
        s.exact_z_1d = [](double, double) { return 0.0; };
        s.params["T"] = T;
        return s;
    }

    if (name == "linear-drift" || name == "coupled-constant-drift") {
        const double T = take_horizon(p);
        const double c = take(p, "c", 0.3);
        expect_consumed(p, name);
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([](double x) { return x; });
        s.g = [c](double, const PathView&, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                  Eigen::Ref<Eigen::VectorXd> out) { out[0] = c; };
        // C covers the sampled terminal bound |x_T|^2 out to ~6 sigma at T = 1
        // and |g|^2 = c^2; the constant drift keeps C_g = 0.
        s.constants = {.K = 1.0, .C = std::max(36.0 * std::max(T, 1.0), c * c), .C_g = 0.0,
                       .C_bar = 0.0, .M_ell = 2.0};
        s.exact_y_1d = [c, T](double t, double x) { return x + c * (T - t); };
        s.exact_z_1d = [](double, double) { return 1.0; };
        s.params = {{"T", T}, {"c", c}};
        return s;
    }

    if (name == "bounded-sine") {
        const double T = take_horizon(p);
        const double amp = take(p, "amp", 1.0);
        const double phase = take(p, "phase", 0.0);
        expect_consumed(p, name);
        if (!(std::fabs(amp) > 0.0)) {
            throw CatalogError("bounded-sine: amp must be nonzero");
        }
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([amp, phase](double x) { return amp * std::sin(x + phase); });
        const double a2 = amp * amp;
        s.constants = {.K = a2, .C = std::max(std::fabs(amp), a2), .C_g = 0.0, .C_bar = 0.0,
                       .M_ell = 2.0};
        s.growth_l = [](double) { return 0.0; };
        s.params = {{"T", T}, {"amp", amp}, {"phase", phase}};
        return s;
    }

    if (name == "quad-terminal") {
        const double T = take_horizon(p);
        expect_consumed(p, name);
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([](double x) { return x * x; });
        // Sampled-path constants: |2 x_T| stays below 12 and x_T^4 below 1300
        // out to ~6 sigma at T = 1.
        s.constants = {.K = 144.0 * std::max(T, 1.0), .C = 1300.0 * std::max(T * T, 1.0), .C_g = 0.0,
                       .C_bar = 0.0, .M_ell = 2.0};
        s.growth_l = [](double) { return 0.0; };
        s.exact_y_1d = [T](double t, double x) { return x * x + (T - t); };
        s.exact_z_1d = [](double, double x) { return 2.0 * x; };
        s.params["T"] = T;
        return s;
    }

    if (name == "quad-terminal-drift") {
        const double T = take_horizon(p);
        const double c = take(p, "c", 0.5);
        expect_consumed(p, name);
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([](double x) { return x * x; });
        s.g = [c](double, const PathView&, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                  Eigen::Ref<Eigen::VectorXd> out) { out[0] = c; };
        s.constants = {.K = 144.0 * std::max(T, 1.0),
                       .C = std::max(1300.0 * std::max(T * T, 1.0), c * c), .C_g = 0.0, .C_bar = 0.0,
                       .M_ell = 2.0};
        s.exact_y_1d = [c, T](double t, double x) {
            const double u = x + c * (T - t);
            return u * u + (T - t);
        };
        s.exact_z_1d = [c, T](double t, double x) { return 2.0 * (x + c * (T - t)); };
        s.params = {{"T", T}, {"c", c}};
        return s;
    }

    if (name == "quad-1d") {
        const double T = take_horizon(p);
        const double a = take(p, "a", 1.0);
        const double amp = take(p, "amp", 1.0);
        expect_consumed(p, name);
        if (a == 0.0) {
            throw CatalogError("quad-1d: quadratic weight a must be nonzero");
        }
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([amp](double x) { return amp * std::sin(x); });
        s.diag_a = Eigen::VectorXd::Constant(1, a);
        s.constants = {.K = amp * amp, .C = std::max(std::fabs(amp), amp * amp), .C_g = 0.0,
                       .C_bar = 0.0, .M_ell = 2.0};
        s.params = {{"T", T}, {"a", a}, {"amp", amp}};
        return s;
    }

    if (name == "diag-quad") {
        const double T = take_horizon(p);
        const double a1 = take(p, "a1", 1.0);
        const double a2 = take(p, "a2", -0.5);
        const double amp1 = take(p, "amp1", 1.0);
        const double amp2 = take(p, "amp2", 0.5);
        expect_consumed(p, name);
        if (a1 == 0.0 || a2 == 0.0) {
            throw CatalogError("diag-quad: quadratic weights must be nonzero");
        }
        ProblemSpec s;
        s.name = name;
        s.m = s.n = s.d = 2;
        s.T = T;
        s.terminal = [amp1, amp2](const PathView& path, Eigen::Ref<Eigen::VectorXd> out) {
            out[0] = amp1 * std::sin(path.at(path.upto, 0));
            out[1] = amp2 * std::cos(path.at(path.upto, 1));
        };
        s.diag_a = Eigen::Vector2d(a1, a2);
        const double k = std::max(amp1 * amp1, amp2 * amp2);
        const double c = std::max({std::fabs(amp1), amp1 * amp1, std::fabs(amp2), amp2 * amp2});
        s.constants = {.K = k, .C = c, .C_g = 0.0, .C_bar = 0.0, .M_ell = 2.0};
        s.params = {{"T", T}, {"a1", a1}, {"a2", a2}, {"amp1", amp1}, {"amp2", amp2}};
        return s;
    }

    if (name == "coupled-linear") {
        const double T = take_horizon(p);
        const double c0 = take(p, "c0", 0.3);
        const double c1 = take(p, "c1", 0.2);
        expect_consumed(p, name);
        if (std::fabs(c0) > 1.0) {
            throw CatalogError("coupled-linear: |c0| must not exceed 1 (declared C covers |g(0)|^2)");
        }
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([](double x) { return std::sin(x); });
        s.g = [c0, c1](double, const PathView&, const Eigen::VectorXd& y, const Eigen::MatrixXd&,
                       Eigen::Ref<Eigen::VectorXd> out) { out[0] = c0 + c1 * y[0]; };
        s.constants = {.K = 1.0, .C = 1.0, .C_g = c1 * c1, .C_bar = 0.0, .M_ell = 2.0};
        s.params = {{"T", T}, {"c0", c0}, {"c1", c1}};
        return s;
    }

    if (name == "superquad") {
        // Short default horizon keeps the z-field radius comfortably above
        // the true gradient so the truncation stays dormant.
        const double T = take(p, "T", 0.25);
        if (!(T > 0.0) || !std::isfinite(T)) {
            throw CatalogError("catalog: horizon T must be finite and positive");
        }
        const double amp = take(p, "amp", 0.1);
        expect_consumed(p, name);
        if (!(std::fabs(amp) > 0.0)) {
            throw CatalogError("superquad: amp must be nonzero");
        }
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([amp](double x) { return amp * std::sin(x); });
        s.g = [](double, const PathView&, const Eigen::VectorXd&, const Eigen::MatrixXd& z,
                 Eigen::Ref<Eigen::VectorXd> out) { out[0] = z(0, 0) * std::fabs(z(0, 0)); };
        // |z|z| - z'|z'|| <= (|z| + |z'|) |z - z'|, squared on both sides.
        s.growth_l = [](double r) { return r * r; };
        s.constants = {.K = amp * amp, .C = std::max(std::fabs(amp), amp * amp), .C_g = 0.0,
                       .C_bar = 0.0, .M_ell = 2.0};
        s.params = {{"T", T}, {"amp", amp}};
        return s;
    }

    if (name == "reflected-drift") {
        const double T = take_horizon(p);
        const double c = take(p, "c", 0.0);
        const double theta = take(p, "theta", 1.0);
        expect_consumed(p, name);
        ProblemSpec s = scalar_skeleton(name, T);
        s.terminal = last_node_terminal([](double x) { return std::sin(x); });
        s.constants = {.K = 1.0, .C = 1.0, .C_g = 0.0, .C_bar = 0.0, .M_ell = 2.0};
        s.params = {{"T", T}, {"c", c}, {"theta", theta}};
        return s;
    }

    std::string known;
    for (const auto& n : catalog_names()) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw CatalogError("unknown catalog entry '" + name + "' (available: " + known + ")");
}

std::vector<std::string> catalog_names() {
    return {"zero",          "linear-drift",        "coupled-constant-drift", "bounded-sine",
            "quad-terminal", "quad-terminal-drift", "quad-1d",                "diag-quad",
            "coupled-linear", "superquad",          "reflected-drift"};
}

}  // namespace bsde

#include "bsde/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bsde/errors.hpp"
#include "bsde/rng.hpp"

namespace bsde {

namespace {

constexpr std::uint64_t kProbeSeed = 0x51DE;
constexpr int kConditionProbes = 64;

double offset_scale(const ReflectionSpec& spec) {
    double s = 1.0;
    if (spec.offsets.size() > 0) s = std::max(s, spec.offsets.cwiseAbs().maxCoeff());
    return s;
}

// Relaxation sweep toward a strictly interior point; fails only for empty or
// degenerate interiors.
Eigen::VectorXd find_interior(const Eigen::MatrixXd& normals, const Eigen::VectorXd& offsets) {
    int m = static_cast<int>(normals.cols());
    int count = static_cast<int>(normals.rows());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    double scale = std::max(1.0, count > 0 ? offsets.cwiseAbs().maxCoeff() : 0.0);
    double margin = 1e-3 * scale;
    for (int it = 0; it < 20000; ++it) {
        bool ok = true;
        for (int i = 0; i < count; ++i) {
            double slack = normals.row(i).dot(x) - offsets(i);
            if (slack < margin) {
                x += (margin * 1.5 - slack) * normals.row(i).transpose();
                ok = false;
            }
        }
        if (ok) return x;
    }
    throw PreconditionError("no interior point found; the constraint set looks empty or flat");
}

// Is disp a nonnegative combination of the given direction rows? Small
// active sets only, checked by exhausting support subsets.
bool in_direction_cone(const Eigen::VectorXd& disp, const Eigen::MatrixXd& dirs, double tol) {
    int k = static_cast<int>(dirs.rows());
    if (disp.norm() <= tol) return true;
    if (k == 0) return false;
    if (k > 8) k = 8;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
        std::vector<int> idx;
        for (int i = 0; i < k; ++i)
            if (mask & (1u << i)) idx.push_back(i);
        Eigen::MatrixXd d(disp.size(), idx.size());
        for (std::size_t c = 0; c < idx.size(); ++c) d.col(c) = dirs.row(idx[c]).transpose();
        Eigen::VectorXd alpha = d.colPivHouseholderQr().solve(disp);
        if ((alpha.array() < -1e-10 * (1.0 + alpha.cwiseAbs().maxCoeff())).any()) continue;
        if ((d * alpha - disp).norm() <= tol) return true;
    }
    return false;
}

std::vector<int> active_constraints(const ReflectionSpec& spec, const Eigen::VectorXd& x,
                                    double tol) {
    std::vector<int> act;
    for (int i = 0; i < spec.count(); ++i)
        if (std::abs(spec.normals.row(i).dot(x) - spec.offsets(i)) <= tol) act.push_back(i);
    return act;
}

bool probe_projection(const ReflectionSpec& spec) {
    double scale = offset_scale(spec) + spec.interior.norm();
    double tol = 1e-7 * scale;
    int m = spec.dim();
    for (int probe = 0; probe < kConditionProbes; ++probe) {
        Eigen::VectorXd u(m);
        for (int c = 0; c < m; ++c)
            u(c) = rng::normal(kProbeSeed, static_cast<std::uint64_t>(probe), 0,
                               static_cast<std::uint64_t>(c));
        double r =
            (0.5 + 3.0 * rng::uniform01(kProbeSeed, static_cast<std::uint64_t>(probe), 1, 0)) *
            scale;
        if (u.norm() < 1e-12) continue;
        Eigen::VectorXd y = spec.interior + r * u / u.norm();
        bool inside = domain_contains(spec, y);
        Eigen::VectorXd py;
        try {
            py = project_to_domain(spec, y);
        } catch (const ProjectionError&) {
            return false;
        }
        if (inside) {
            if ((py - y).norm() != 0.0) return false;
            continue;
        }
        if (!domain_contains(spec, py, 1e-9)) return false;
        if (boundary_gap(spec, py) > tol) return false;  // must land on the boundary
        // The operator composes single-constraint slides, so the total
        // displacement may carry directions of constraints repaired on the way
        // that are strictly feasible at the landing point. Admit those along
        // with the landing active set.
        std::vector<char> admit(static_cast<std::size_t>(spec.count()), 0);
        for (int j : active_constraints(spec, py, tol)) admit[static_cast<std::size_t>(j)] = 1;
        for (int i = 0; i < spec.count(); ++i)
            if (spec.normals.row(i).dot(y) - spec.offsets(i) < -tol)
                admit[static_cast<std::size_t>(i)] = 1;
        std::vector<int> sel;
        for (int i = 0; i < spec.count(); ++i)
            if (admit[static_cast<std::size_t>(i)]) sel.push_back(i);
        Eigen::MatrixXd dirs(sel.size(), m);
        for (std::size_t k = 0; k < sel.size(); ++k) dirs.row(k) = spec.directions.row(sel[k]);
        if (!in_direction_cone(py - y, dirs, tol * (1.0 + (py - y).norm()))) return false;
    }
    return true;
}

bool normal_candidate_works(const ReflectionSpec& spec, const std::vector<int>& act,
                            const Eigen::VectorXd& n) {
    if (n.norm() < 1e-12) return false;
    for (int j : act)
        if (spec.directions.row(j).dot(n) <= 0.0) return false;
    return true;
}

bool probe_boundary_normals(const ReflectionSpec& spec) {
    double scale = offset_scale(spec) + spec.interior.norm();
    double tol = 1e-7 * scale;
    int m = spec.dim();
    int count = spec.count();
    std::vector<Eigen::VectorXd> points;

    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd b =
            spec.interior +
            (spec.offsets(i) - spec.normals.row(i).dot(spec.interior)) * spec.normals.row(i).transpose();
        if (domain_contains(spec, b, 1e-9)) points.push_back(b);
    }
    for (int i = 0; i < count; ++i)
        for (int j = i + 1; j < count; ++j) {
            Eigen::MatrixXd a(2, m);
            a.row(0) = spec.normals.row(i);
            a.row(1) = spec.normals.row(j);
            Eigen::Matrix2d gram = a * a.transpose();
            if (std::abs(gram.determinant()) < 1e-12) continue;
            Eigen::Vector2d c(spec.offsets(i), spec.offsets(j));
            Eigen::VectorXd x = a.transpose() * gram.inverse() * c;
            if (domain_contains(spec, x, 1e-9)) points.push_back(x);
        }

    for (const Eigen::VectorXd& x : points) {
        std::vector<int> act = active_constraints(spec, x, tol);
        if (act.empty()) continue;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
        for (int j : act) sum += spec.normals.row(j).transpose();
        bool found = normal_candidate_works(spec, act, sum);
        for (std::size_t k = 0; !found && k < act.size(); ++k)
            found = normal_candidate_works(spec, act, spec.normals.row(act[k]).transpose());
        for (int attempt = 0; !found && attempt < 16; ++attempt) {
            Eigen::VectorXd n = Eigen::VectorXd::Zero(m);
            for (std::size_t k = 0; k < act.size(); ++k) {
                double w = rng::uniform01(kProbeSeed, 7000 + attempt,
                                          static_cast<std::uint64_t>(k), 0);
                n += w * spec.normals.row(act[k]).transpose();
            }
            found = normal_candidate_works(spec, act, n);
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

ReflectionSpec make_reflection_spec(const Eigen::MatrixXd& normals, const Eigen::VectorXd& offsets,
                                    const Eigen::MatrixXd& directions) {
    if (normals.rows() != offsets.size() || normals.rows() != directions.rows() ||
        normals.cols() != directions.cols())
        throw PreconditionError("reflection spec shapes disagree (need one normal, offset and "
                                "direction per half-space)");
    if (normals.cols() < 1) throw PreconditionError("reflection spec needs a state dimension");

    ReflectionSpec spec;
    spec.normals = normals;
    spec.offsets = offsets;
    spec.directions = directions;
    for (int i = 0; i < spec.count(); ++i) {
        double nn = spec.normals.row(i).norm();
        double nv = spec.directions.row(i).norm();
        if (nn < 1e-12 || nv < 1e-12)
            throw PreconditionError("zero normal or direction at half-space " + std::to_string(i));
        spec.normals.row(i) /= nn;
        spec.directions.row(i) /= nv;
        if (spec.normals.row(i).dot(spec.directions.row(i)) <= 0.0)
            throw PreconditionError("direction " + std::to_string(i) +
                                    " does not point inward (<v, n> <= 0)");
    }

    spec.interior = find_interior(spec.normals, spec.offsets);

    if (spec.count() == 0) {
        spec.cond_i = spec.cond_ii = spec.cond_iii = true;
        return spec;
    }

    // Exact sufficient check: positive weights a with B a > 0, where B has
    // the inward products on the diagonal and -|cross products| off it.
    if ((spec.normals - spec.directions).cwiseAbs().maxCoeff() <= 1e-12) {
        spec.cond_i = true;
    } else {
        int count = spec.count();
        Eigen::MatrixXd b(count, count);
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < count; ++j) {
                double dot = spec.normals.row(i).dot(spec.directions.row(j));
                b(i, j) = (i == j) ? dot : -std::abs(dot);
            }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
        if (lu.isInvertible()) {
            Eigen::VectorXd a = lu.solve(Eigen::VectorXd::Ones(count));
            spec.cond_i = (a.array() > 0.0).all();
        }
    }

    spec.cond_ii = probe_projection(spec);
    spec.cond_iii = probe_boundary_normals(spec);
    return spec;
}

bool domain_contains(const ReflectionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                     double tol) {
    for (int i = 0; i < spec.count(); ++i) {
        double slack = spec.normals.row(i).dot(x) - spec.offsets(i);
        if (slack < -tol * std::max(1.0, std::abs(spec.offsets(i)))) return false;
    }
    return true;
}

double boundary_gap(const ReflectionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.count(); ++i)
        gap = std::min(gap, spec.normals.row(i).dot(x) - spec.offsets(i));
    return gap;
}

Eigen::VectorXd project_once(const ReflectionSpec& spec,
                             const Eigen::Ref<const Eigen::VectorXd>& y) {
    int worst = -1;
    double violation = 0.0;
    for (int i = 0; i < spec.count(); ++i) {
        double v = spec.offsets(i) - spec.normals.row(i).dot(y);
        if (v > violation) {
            violation = v;
            worst = i;
        }
    }
    if (worst < 0) return y;
    double alpha = violation / spec.normals.row(worst).dot(spec.directions.row(worst));
    return y + alpha * spec.directions.row(worst).transpose();
}

Eigen::VectorXd project_to_domain(const ReflectionSpec& spec,
                                  const Eigen::Ref<const Eigen::VectorXd>& y, int cap) {
    Eigen::VectorXd cur = y;
    double tol = 1e-13 * (offset_scale(spec) + cur.norm());
    for (int it = 0; it < cap; ++it) {
        if (boundary_gap(spec, cur) >= -tol) return cur;
        cur = project_once(spec, cur);
    }
    throw ProjectionError("projection did not settle within " + std::to_string(cap) +
                          " corrective moves");
}

ReflectedPath skorokhod_1d(const Eigen::Ref<const Eigen::VectorXd>& phi, double a, double b) {
    if (!(a < b)) throw PreconditionError("barrier interval is empty");
    int count = static_cast<int>(phi.size());
    if (count < 1) throw PreconditionError("empty path");
    if (phi(0) < a || phi(0) > b)
        throw PreconditionError("path starts outside the barrier interval");

    ReflectedPath out;
    out.values.resize(count, 1);
    out.regulator = Eigen::MatrixXd::Zero(count, 1);
    out.variation = Eigen::VectorXd::Zero(count);
    double x = phi(0);
    out.values(0, 0) = x;
    for (int i = 1; i < count; ++i) {
        double y = x + (phi(i) - phi(i - 1));
        x = std::min(std::max(y, a), b);
        out.values(i, 0) = x;
        out.regulator(i, 0) = out.regulator(i - 1, 0) + (x - y);
        out.variation(i) = out.variation(i - 1) + std::abs(x - y);
    }
    return out;
}

ReflectedPath skorokhod_polyhedral(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                   const ReflectionSpec& spec, int cap) {
    int count = static_cast<int>(phi.rows());
    int m = spec.dim();
    if (phi.cols() != m) throw PreconditionError("path dimension disagrees with the domain");
    if (count < 1) throw PreconditionError("empty path");
    Eigen::VectorXd x = phi.row(0).transpose();
    if (!domain_contains(spec, x))
        throw PreconditionError("path starts outside the domain");

    ReflectedPath out;
    out.values.resize(count, m);
    out.regulator = Eigen::MatrixXd::Zero(count, m);
    out.variation = Eigen::VectorXd::Zero(count);
    out.values.row(0) = x.transpose();
    double scale = offset_scale(spec);

    for (int i = 1; i < count; ++i) {
        Eigen::VectorXd cur = x + (phi.row(i) - phi.row(i - 1)).transpose();
        Eigen::VectorXd entered = cur;
        double tol = 1e-13 * (scale + cur.norm());
        double var_inc = 0.0;
        bool settled = false;
        for (int it = 0; it < cap; ++it) {
            if (boundary_gap(spec, cur) >= -tol) {
                settled = true;
                break;
            }
            int worst = -1;
            double violation = 0.0;
            for (int k = 0; k < spec.count(); ++k) {
                double v = spec.offsets(k) - spec.normals.row(k).dot(cur);
                if (v > violation) {
                    violation = v;
                    worst = k;
                }
            }
            double alpha = violation / spec.normals.row(worst).dot(spec.directions.row(worst));
            cur += alpha * spec.directions.row(worst).transpose();
            var_inc += std::abs(alpha);
        }
        if (!settled)
            throw ProjectionError("projection did not settle within " + std::to_string(cap) +
                                  " corrective moves at step " + std::to_string(i));
        x = cur;
        out.values.row(i) = x.transpose();
        out.regulator.row(i) = out.regulator.row(i - 1) + (cur - entered).transpose();
        out.variation(i) = out.variation(i - 1) + var_inc;
    }
    return out;
}

ReflectedEnsemble reflected_sde(const PathPairDriftFn& b_f, const TimeVolFn& sigma_f,
                                const ReflectionSpec& spec, const PathBundle& driver,
                                const Eigen::VectorXd& x0, int cap) {
    const TimeGrid& grid = driver.grid;
    int steps = grid.steps;
    int n_paths = driver.n_paths;
    int m = static_cast<int>(x0.size());
    if (spec.count() > 0 && spec.dim() != m)
        throw PreconditionError("initial state dimension disagrees with the domain");
    if (!domain_contains(spec, x0))
        throw PreconditionError("initial state outside the domain");

    ReflectedEnsemble out;
    out.phi.grid = grid;
    out.phi.dim = m;
    out.phi.n_paths = n_paths;
    out.phi.seed = driver.seed;
    out.phi.kind = PathKind::forward_state;
    out.phi.values = RowMat::Zero(n_paths, static_cast<Eigen::Index>(steps + 1) * m);
    out.regulator = RowMat::Zero(n_paths, static_cast<Eigen::Index>(steps + 1) * m);
    out.variation = RowMat::Zero(n_paths, steps + 1);

    Eigen::MatrixXd sig(m, driver.dim);
    Eigen::VectorXd bvec(m), dm(driver.dim);
    double scale = offset_scale(spec);

    for (int p = 0; p < n_paths; ++p)
        for (int c = 0; c < m; ++c) out.phi.value(p, 0, c) = x0(c);

    for (int i = 0; i < steps; ++i) {
        double t = grid.node(i);
        sigma_f(t, sig);
        for (int p = 0; p < n_paths; ++p) {
            b_f(t, out.phi.view(p, i), driver.view(p, i), bvec);
            for (int c = 0; c < driver.dim; ++c) dm(c) = driver.increment(p, i, c);
            Eigen::VectorXd cur(m);
            for (int c = 0; c < m; ++c)
                cur(c) = out.phi.value(p, i, c) + bvec(c) * grid.step + sig.row(c).dot(dm);
            if (!cur.allFinite())
                throw NumericBlowupError("forward state is not finite at path " +
                                         std::to_string(p) + ", step " + std::to_string(i + 1));
            Eigen::VectorXd entered = cur;
            double var_inc = 0.0;
            if (spec.count() > 0) {
                double tol = 1e-13 * (scale + cur.norm());
                bool settled = false;
                for (int it = 0; it < cap; ++it) {
                    if (boundary_gap(spec, cur) >= -tol) {
                        settled = true;
                        break;
                    }
                    int worst = -1;
                    double violation = 0.0;
                    for (int k = 0; k < spec.count(); ++k) {
                        double v = spec.offsets(k) - spec.normals.row(k).dot(cur);
                        if (v > violation) {
                            violation = v;
                            worst = k;
                        }
                    }
                    double alpha =
                        violation / spec.normals.row(worst).dot(spec.directions.row(worst));
                    cur += alpha * spec.directions.row(worst).transpose();
                    var_inc += std::abs(alpha);
                }
                if (!settled)
                    throw ProjectionError("projection did not settle within " +
                                          std::to_string(cap) + " corrective moves at path " +
                                          std::to_string(p) + ", step " + std::to_string(i + 1));
            }
            for (int c = 0; c < m; ++c) {
                out.phi.value(p, i + 1, c) = cur(c);
                out.regulator(p, static_cast<Eigen::Index>(i + 1) * m + c) =
                    out.regulator(p, static_cast<Eigen::Index>(i) * m + c) + (cur(c) - entered(c));
            }
            out.variation(p, i + 1) = out.variation(p, i) + var_inc;
        }
    }
    return out;
}

PathBundle sde_lipschitz_map(const PathPairDriftFn& b_f, const TimeVolFn& sigma_f,
                             const PathBundle& driver, const Eigen::VectorXd& x0) {
    ReflectionSpec free_space;
    free_space.normals.resize(0, x0.size());
    free_space.offsets.resize(0);
    free_space.directions.resize(0, x0.size());
    free_space.interior = x0;
    free_space.cond_i = free_space.cond_ii = free_space.cond_iii = true;
    return reflected_sde(b_f, sigma_f, free_space, driver, x0).phi;
}

LipschitzCertificate sde_lipschitz_certificate(const PathBundle& phi, const PathBundle& driver,
                                               double c_f) {
    if (phi.n_paths != driver.n_paths || phi.grid.steps != driver.grid.steps)
        throw PreconditionError("solution and driver bundles disagree");
    double horizon = driver.grid.horizon;
    LipschitzCertificate cert;
    cert.declared = c_f * (1.0 + horizon) * std::exp(c_f * horizon);
    int pairs = phi.n_paths / 2;
    cert.pairs = pairs;
    int nodes = phi.grid.node_count();
    for (int k = 0; k < pairs; ++k) {
        int pa = 2 * k, pb = 2 * k + 1;
        double dphi = 0.0, dm = 0.0;
        for (int i = 0; i < nodes; ++i) {
            double sp = 0.0, sm = 0.0;
            for (int c = 0; c < phi.dim; ++c) {
                double dd = phi.value(pa, i, c) - phi.value(pb, i, c);
                sp += dd * dd;
            }
            for (int c = 0; c < driver.dim; ++c) {
                double dd = driver.value(pa, i, c) - driver.value(pb, i, c);
                sm += dd * dd;
            }
            dphi = std::max(dphi, sp);
            dm = std::max(dm, sm);
        }
        if (dm < 1e-28) continue;
        cert.measured = std::max(cert.measured, std::sqrt(dphi / dm));
    }
    cert.pass = cert.measured <= cert.declared * (1.0 + 1e-9);
    return cert;
}

double rbm_uniform_cdf_distance(double a, double b, double horizon, int steps, int n_paths,
                                std::uint64_t seed) {
    if (!(a < b)) throw PreconditionError("barrier interval is empty");
    if (steps < 1 || n_paths < 1) throw PreconditionError("need at least one step and one path");
    double delta = horizon / steps;
    double sd = std::sqrt(delta);
    std::vector<double> terminal(static_cast<std::size_t>(n_paths));
    for (int p = 0; p < n_paths; ++p) {
        double x = 0.5 * (a + b);
        for (int i = 0; i < steps; ++i) {
            x += sd * rng::normal(seed, static_cast<std::uint64_t>(p),
                                  static_cast<std::uint64_t>(i), 0);
            x = std::min(std::max(x, a), b);
        }
        terminal[static_cast<std::size_t>(p)] = x;
    }
    std::sort(terminal.begin(), terminal.end());
    double worst = 0.0;
    for (int k = 0; k < n_paths; ++k) {
        double u = (terminal[static_cast<std::size_t>(k)] - a) / (b - a);
        worst = std::max(worst, std::abs(static_cast<double>(k) / n_paths - u));
        worst = std::max(worst, std::abs(static_cast<double>(k + 1) / n_paths - u));
    }
    return worst;
}

}  // namespace bsde

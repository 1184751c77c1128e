#include "bsde/problem.hpp"

namespace bsde {

void ProblemSpec::eval_terminal(const PathView& path, Eigen::Ref<Eigen::VectorXd> out) const {
    terminal(path, out);
}

void ProblemSpec::eval_f(double t, const PathView& path, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out) const {
    if (f) {
        f(t, path, y, z, out);
    } else {
        out.setZero();
    }
}

void ProblemSpec::eval_g(double t, const PathView& path, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& z, Eigen::Ref<Eigen::VectorXd> out) const {
    if (g) {
        g(t, path, y, z, out);
    } else {
        out.setZero();
    }
}

void ProblemSpec::eval_sigma(double t, const PathView& path, Eigen::Ref<Eigen::MatrixXd> out) const {
    if (sigma) {
        sigma(t, path, out);
    } else {
        out.setIdentity();
    }
}

BsdeDriverFn structured_driver(const ProblemSpec& spec) {
    // Capture the coefficient callables by value so the driver owns its deps.
    return [f = spec.f, g = spec.g, gbuf = Eigen::VectorXd(spec.n)](
               double t, const PathView& path, const Eigen::VectorXd& y, const Eigen::MatrixXd& z,
               Eigen::Ref<Eigen::VectorXd> out) mutable {
        if (f) {
            f(t, path, y, z, out);
        } else {
            out.setZero();
        }
        if (g) {
            g(t, path, y, z, gbuf);
            out.noalias() += z * gbuf;
        }
    };
}

}  // namespace bsde

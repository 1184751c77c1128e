#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace bsde {

// Quadrature rule for the weight e^{-x^2} on the real line, built from the
// symmetric tridiagonal recurrence matrix.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
GaussHermiteRule gauss_hermite(int order);

// A reference value together with how it was obtained. References are only
// accepted once doubling the quadrature order moves them by less than 1e-8
// (relative above 1).
struct OracleResult {
    double value = 0.0;
    std::string method;
    int order = 0;
    double self_gap = 0.0;
};

// E[h(x + sqrt(T - t) U)] for a standard normal U.
OracleResult quadrature_conditional_expectation(const std::function<double(double)>& h, double t,
                                                double x, double T, int order = 64);

// Reference pair for the scalar quadratic driver a |z|^2 via the exponential
// change of variable: Y(t,x) = log E[e^{2 a xi(W_T)} | W_t = x] / (2a), and
// Z as the spatial derivative of Y by Richardson-extrapolated centered
// differences (step 1e-5).
struct ColeHopfReference {
    double y = 0.0;
    double z = 0.0;
    double fd_gap = 0.0;  // |coarse - fine| difference quotient spread
    int order = 0;
};
ColeHopfReference cole_hopf_reference(const std::function<double(double)>& xi, double a, double t,
                                      double x, double T);

}  // namespace bsde

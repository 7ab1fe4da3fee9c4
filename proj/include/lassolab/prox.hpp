#pragma once

#include "lassolab/model.hpp"

namespace lassolab {

/// Entrywise sgn(v_i)|v_i|^{p-1}, with 0 mapped to 0 (also for p = 1).
Vector sgn_power(const Vector& v, double p);

/// ||v||_p for p >= 1; p = +inf gives the max norm.
double lp_norm(const Vector& v, double p);

/// p / (p - 1); returns +inf for p = 1.
double conjugate_exponent(double p);

Vector soft_threshold(const Vector& v, double tau);

struct ProxResult {
    Vector z;
    double tau = 0.0;
    double fixed_point_residual = 0.0;
};

/// Proximal map of z -> (mu/r)||z||_1^r.
///
/// The minimizer of (1/2)||z - v||^2 + (mu/r)||z||_1^r is soft_threshold(v, tau)
/// where tau is the unique root of tau = mu * ||soft_threshold(v, tau)||_1^{r-1}.
/// The left side increases and the right side does not, so the root is
/// bracketed in [0, mu ||v||_1^{r-1}] and found by bisection.
ProxResult prox_l1_power(const Vector& v, double mu, double r);

struct FidelityGradient {
    Vector g;
    /// Set when the residual vanishes and q < p: the fidelity has a kink there
    /// and g is the zero element of its subdifferential.
    bool nonsmooth = false;
};

/// (Sub)gradient of w -> (1/q)||y - Mw||_p^q with M = A B:
///   g = -||res||_p^{q-p} M^T sgn_power(res, p),   res = y - M w.
FidelityGradient fidelity_subgradient(const ProblemParams& params, const ProblemInstance& inst, const Vector& w);

/// Same formula on an explicit residual; used by the solver's inner loop.
FidelityGradient fidelity_subgradient_from_residual(const ProblemParams& params, const Matrix& M,
                                                    const Vector& res);

}  // namespace lassolab

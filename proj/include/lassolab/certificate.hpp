#pragma once

#include "lassolab/model.hpp"

#include <string>

namespace lassolab {

/// How the stationarity conditions were checked.
enum class CertificateVariant {
    /// p > 1 with a nonvanishing residual: equality on the support and
    /// |c_l| <= nu off the support, c = B^T A^T sgn_power(y - Az, p).
    Characterization,
    /// p = 1: residual entries that vanish carry a free multiplier in [-1, 1].
    /// This extends the p > 1 characterization; it is our construction.
    FreeMultiplier,
    /// q = 1 < p with a vanishing residual: the fidelity subdifferential is the
    /// dual-norm unit ball.
    DualBall,
    /// y = 0 and z = 0: objective is zero, the global minimum.
    Trivial,
};

const char* to_string(CertificateVariant v);

struct Certificate {
    double nu_lambda = 0.0;
    IndexSet S_lambda;
    double eq_violation = 0.0;
    double ineq_violation = 0.0;
    /// Only for DualBall: max(||g||_{p'} - 1, 0) for the selected multiplier.
    double dual_violation = 0.0;
    /// Violations are compared against tol * scale. Normally max(1, nu); for
    /// q < p and ||res||_p < 1 it is max(||res||_p^{p-q}, nu).
    double scale = 0.0;
    bool passed = false;
    CertificateVariant variant = CertificateVariant::Characterization;
    /// Empty when passed; otherwise a short reason code.
    std::string reason;

    /// max(eq, ineq) / scale combined with the dual violation.
    [[nodiscard]] double kkt_residual() const;
};

struct CertificateOptions {
    double tol = 1e-6;
    double eta = kDefaultEta;
    /// Residual entries with |res_i| <= zero_residual * max(1, ||y||_inf) count as zero.
    double zero_residual = 1e-9;
};

/// lambda ||y - Az||_p^{p-q} ||B^{-1} z||_1^{r-1} with 0^0 = 1; +inf when a
/// zero factor carries a negative exponent.
double nu_lambda(const ProblemParams& params, const ProblemInstance& inst, const Vector& z);

Certificate check_stationarity(const ProblemParams& params, const ProblemInstance& inst, const Vector& z,
                               const CertificateOptions& opts = {});

/// Same check with the candidate given in B^{-1} coordinates (w = B^{-1} z).
Certificate check_stationarity_coefficients(const ProblemParams& params, const ProblemInstance& inst,
                                            const Vector& w, const CertificateOptions& opts = {});

/// ||B^T A^T sgn_power(y, p)||_inf ||y||_p^{q-p}; for r = 1 and lambda at or
/// above this value the minimizer is zero. Requires r = 1 and y != 0.
double zero_solution_threshold(const ProblemParams& params, const ProblemInstance& inst);

}  // namespace lassolab

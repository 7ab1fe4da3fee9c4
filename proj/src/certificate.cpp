#include "lassolab/certificate.hpp"

#include "lassolab/prox.hpp"

#include <algorithm>
#include <cmath>

namespace lassolab {

const char* to_string(CertificateVariant v) {
    switch (v) {
        case CertificateVariant::Characterization: return "characterization";
        case CertificateVariant::FreeMultiplier: return "free_multiplier";
        case CertificateVariant::DualBall: return "dual_ball";
        case CertificateVariant::Trivial: return "trivial";
    }
    return "unknown";
}

double Certificate::kkt_residual() const {
    if (!std::isfinite(nu_lambda)) return kInf;
    const double denom = scale > 0.0 ? scale : std::max(1.0, nu_lambda);
    return std::max(std::max(eq_violation, ineq_violation) / denom, dual_violation);
}

namespace {

// base^exponent with 0^0 = 1 and 0^{negative} = +inf.
double power_convention(double base, double exponent) {
    if (exponent == 0.0) return 1.0;
    if (base == 0.0) return exponent > 0.0 ? 0.0 : kInf;
    return std::pow(base, exponent);
}

double sgn(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }

std::vector<char> membership(const IndexSet& S, Eigen::Index n) {
    std::vector<char> in(static_cast<size_t>(n), 0);
    for (auto j : S) in[static_cast<size_t>(j)] = 1;
    return in;
}

void finish(Certificate& cert, double tol) {
    if (cert.scale == 0.0) cert.scale = std::max(1.0, cert.nu_lambda);
    if (!std::isfinite(cert.nu_lambda)) {
        cert.passed = false;
        cert.reason = "nu_infinite";
        return;
    }
    cert.passed = cert.eq_violation <= tol * cert.scale && cert.ineq_violation <= tol * cert.scale &&
                  cert.dual_violation <= tol;
    if (!cert.passed) cert.reason = "violation";
}

// Fills eq/ineq violations for the stationarity vector c and multiplier nu.
void violations(Certificate& cert, const Vector& c, const Vector& w) {
    const auto in = membership(cert.S_lambda, w.size());
    cert.eq_violation = 0.0;
    cert.ineq_violation = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (in[static_cast<size_t>(j)]) {
            cert.eq_violation = std::max(cert.eq_violation, std::abs(c(j) - cert.nu_lambda * sgn(w(j))));
        } else {
            cert.ineq_violation = std::max(cert.ineq_violation, std::max(std::abs(c(j)) - cert.nu_lambda, 0.0));
        }
    }
}

Matrix select_rows_cols(const Matrix& M, const std::vector<Eigen::Index>& rows, const IndexSet& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = 0; b < cols.size(); ++b)
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = M(rows[a], cols[b]);
    return out;
}

// p = 1: c = M^T (sigma + xi) with xi supported on the zero-residual rows Z and
// |xi_i| <= 1. The equality block fixes xi up to the null space of M_{Z,S}^T;
// we take the min-norm solution, clip to the box, and refine by projected
// gradient on the squared violations.
void free_multiplier(Certificate& cert, const Matrix& M, const Vector& res, const Vector& w, double zero_tol) {
    const Eigen::Index m = M.rows();
    std::vector<Eigen::Index> Z;
    Vector sigma = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(res(i)) <= zero_tol)
            Z.push_back(i);
        else
            sigma(i) = sgn(res(i));
    }
    const Vector c0 = M.transpose() * sigma;
    if (Z.empty()) {
        violations(cert, c0, w);
        return;
    }

    std::vector<Eigen::Index> all_cols_idx(static_cast<size_t>(w.size()));
    for (Eigen::Index j = 0; j < w.size(); ++j) all_cols_idx[static_cast<size_t>(j)] = j;
    const Matrix MZ = select_rows_cols(M, Z, all_cols_idx);  // |Z| x N
    const auto& S = cert.S_lambda;
    const auto in = membership(S, w.size());

    Vector xi = Vector::Zero(static_cast<Eigen::Index>(Z.size()));
    if (!S.empty()) {
        Matrix G(static_cast<Eigen::Index>(S.size()), MZ.rows());
        Vector b(static_cast<Eigen::Index>(S.size()));
        for (size_t a = 0; a < S.size(); ++a) {
            G.row(static_cast<Eigen::Index>(a)) = MZ.col(S[a]).transpose();
            b(static_cast<Eigen::Index>(a)) = cert.nu_lambda * sgn(w(S[a])) - c0(S[a]);
        }
        xi = Eigen::CompleteOrthogonalDecomposition<Matrix>(G).solve(b);
    }
    xi = xi.cwiseMax(-1.0).cwiseMin(1.0);

    auto evaluate = [&](const Vector& x) {
        Certificate tmp = cert;
        violations(tmp, c0 + MZ.transpose() * x, w);
        return std::max(tmp.eq_violation, tmp.ineq_violation);
    };
    Vector best = xi;
    double best_val = evaluate(xi);

    if (best_val > 0.0) {
        const double L = std::max(MZ.squaredNorm(), 1e-300);
        Vector x = xi;
        for (int it = 0; it < 300; ++it) {
            const Vector c = c0 + MZ.transpose() * x;
            Vector grad_c = Vector::Zero(w.size());
            for (Eigen::Index j = 0; j < w.size(); ++j) {
                if (in[static_cast<size_t>(j)]) {
                    grad_c(j) = c(j) - cert.nu_lambda * sgn(w(j));
                } else {
                    const double excess = std::abs(c(j)) - cert.nu_lambda;
                    if (excess > 0.0) grad_c(j) = excess * sgn(c(j));
                }
            }
            x = (x - (MZ * grad_c) / L).cwiseMax(-1.0).cwiseMin(1.0);
            const double v = evaluate(x);
            if (v < best_val) {
                best_val = v;
                best = x;
            }
        }
    }
    violations(cert, c0 + MZ.transpose() * best, w);
}

}  // namespace

double nu_lambda(const ProblemParams& params, const ProblemInstance& inst, const Vector& z) {
    if (!(params.lambda > 0.0)) throw PreconditionError("nu_lambda requires lambda > 0");
    const Vector res = inst.y() - inst.A() * z;
    const double rn = lp_norm(res, params.p);
    const double wn = inst.apply_Binv(z).lpNorm<1>();
    return params.lambda * power_convention(rn, params.p - params.q) * power_convention(wn, params.r - 1.0);
}

Certificate check_stationarity_coefficients(const ProblemParams& params, const ProblemInstance& inst,
                                            const Vector& w, const CertificateOptions& opts) {
    params.validate_positive_lambda();
    if (w.size() != inst.cols()) throw DimensionError("candidate length must equal N");

    const Matrix& M = inst.M();
    const Vector& y = inst.y();
    const Vector res = y - M * w;
    const double p = params.p;
    const double q = params.q;

    Certificate cert;
    cert.S_lambda = support(w, opts.eta);

    if (y.lpNorm<Eigen::Infinity>() == 0.0 && w.lpNorm<Eigen::Infinity>() == 0.0) {
        cert.variant = CertificateVariant::Trivial;
        cert.S_lambda.clear();
        cert.passed = true;
        return cert;
    }

    const double zero_tol = opts.zero_residual * std::max(1.0, y.lpNorm<Eigen::Infinity>());
    const double rn = lp_norm(res, p);
    const double wn = w.lpNorm<1>();
    const double wfac = power_convention(wn, params.r - 1.0);

    if (p == 1.0) {
        cert.variant = CertificateVariant::FreeMultiplier;
        cert.nu_lambda = params.lambda * power_convention(rn, p - q) * wfac;
        if (std::isfinite(cert.nu_lambda)) free_multiplier(cert, M, res, w, zero_tol);
        finish(cert, opts.tol);
        return cert;
    }

    if (q < p && res.lpNorm<Eigen::Infinity>() <= zero_tol) {
        // Kink of ||.||_p^q / q at zero: subdifferential is the p'-ball for q = 1, {0} otherwise.
        cert.variant = CertificateVariant::DualBall;
        cert.nu_lambda = params.lambda * wfac;
        const double radius = (q == 1.0) ? 1.0 : 0.0;
        Vector g = Vector::Zero(M.rows());
        if (!cert.S_lambda.empty() && radius > 0.0) {
            const auto& S = cert.S_lambda;
            Matrix G(static_cast<Eigen::Index>(S.size()), M.rows());
            Vector b(static_cast<Eigen::Index>(S.size()));
            for (size_t a = 0; a < S.size(); ++a) {
                G.row(static_cast<Eigen::Index>(a)) = M.col(S[a]).transpose();
                b(static_cast<Eigen::Index>(a)) = cert.nu_lambda * sgn(w(S[a]));
            }
            g = Eigen::CompleteOrthogonalDecomposition<Matrix>(G).solve(b);
        }
        violations(cert, M.transpose() * g, w);
        cert.dual_violation = std::max(lp_norm(g, conjugate_exponent(p)) - radius, 0.0);
        finish(cert, opts.tol);
        return cert;
    }

    cert.variant = CertificateVariant::Characterization;
    cert.nu_lambda = params.lambda * power_convention(rn, p - q) * wfac;
    // Both sides carry the factor ||res||^{p-q}; for q < p it vanishes with the residual.
    if (q < p && rn < 1.0) cert.scale = std::max(power_convention(rn, p - q), cert.nu_lambda);
    if (std::isfinite(cert.nu_lambda)) violations(cert, M.transpose() * sgn_power(res, p), w);
    finish(cert, opts.tol);
    return cert;
}

Certificate check_stationarity(const ProblemParams& params, const ProblemInstance& inst, const Vector& z,
                               const CertificateOptions& opts) {
    if (z.size() != inst.cols()) throw DimensionError("candidate length must equal N");
    return check_stationarity_coefficients(params, inst, inst.apply_Binv(z), opts);
}

double zero_solution_threshold(const ProblemParams& params, const ProblemInstance& inst) {
    params.validate();
    if (params.r != 1.0) throw PreconditionError("zero_solution_threshold requires r = 1");
    const Vector& y = inst.y();
    const double yn = lp_norm(y, params.p);
    if (yn == 0.0) throw PreconditionError("zero_solution_threshold requires y != 0");
    const double c = (inst.M().transpose() * sgn_power(y, params.p)).lpNorm<Eigen::Infinity>();
    return c * power_convention(yn, params.q - params.p);
}

}  // namespace lassolab

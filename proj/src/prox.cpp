#include "lassolab/prox.hpp"

#include <algorithm>
#include <cmath>

namespace lassolab {

Vector sgn_power(const Vector& v, double p) {
    Vector out(v.size());
    const double e = p - 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = v(i);
        if (a == 0.0) {
            out(i) = 0.0;
        } else if (e == 0.0) {
            out(i) = a > 0.0 ? 1.0 : -1.0;
        } else if (e == 1.0) {
            out(i) = a;
        } else {
            out(i) = std::copysign(std::pow(std::abs(a), e), a);
        }
    }
    return out;
}

double lp_norm(const Vector& v, double p) {
    if (v.size() == 0) return 0.0;
    if (std::isinf(p)) return v.lpNorm<Eigen::Infinity>();
    if (p == 1.0) return v.lpNorm<1>();
    if (p == 2.0) return v.norm();
    const double scale = v.lpNorm<Eigen::Infinity>();
    if (scale == 0.0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v(i)) / scale, p);
    return scale * std::pow(acc, 1.0 / p);
}

double conjugate_exponent(double p) {
    if (p == 1.0) return kInf;
    return p / (p - 1.0);
}

Vector soft_threshold(const Vector& v, double tau) {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v(i)) - tau;
        out(i) = m > 0.0 ? std::copysign(m, v(i)) : 0.0;
    }
    return out;
}

namespace {

// ||soft_threshold(v, tau)||_1 without materializing the vector.
double shrunk_l1(const Vector& v, double tau) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::max(std::abs(v(i)) - tau, 0.0);
    return acc;
}

}  // namespace

ProxResult prox_l1_power(const Vector& v, double mu, double r) {
    if (!(mu >= 0.0)) throw PreconditionError("prox_l1_power: mu must be >= 0");
    if (!(r >= 1.0)) throw PreconditionError("prox_l1_power: r must be >= 1");

    ProxResult out;
    if (r == 1.0 || mu == 0.0) {
        out.tau = (r == 1.0) ? mu : 0.0;
        out.z = soft_threshold(v, out.tau);
        out.fixed_point_residual = 0.0;
        return out;
    }

    const double l1 = v.lpNorm<1>();
    auto residual = [&](double tau) { return tau - mu * std::pow(shrunk_l1(v, tau), r - 1.0); };

    double lo = 0.0;
    double hi = mu * std::pow(l1, r - 1.0);
    const double tol = 1e-12 * std::max(1.0, l1);
    double best = hi;
    double best_res = std::abs(residual(hi));
    if (std::abs(residual(lo)) < best_res) {
        best = lo;
        best_res = std::abs(residual(lo));
    }
    for (int it = 0; it < 200 && best_res > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double h = residual(mid);
        if (std::abs(h) < best_res) {
            best = mid;
            best_res = std::abs(h);
        }
        if (h < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    out.tau = best;
    out.z = soft_threshold(v, best);
    out.fixed_point_residual = best_res;
    return out;
}

FidelityGradient fidelity_subgradient_from_residual(const ProblemParams& params, const Matrix& M,
                                                    const Vector& res) {
    FidelityGradient out;
    const double nrm = lp_norm(res, params.p);
    if (nrm == 0.0) {
        out.g = Vector::Zero(M.cols());
        out.nonsmooth = params.q < params.p;
        return out;
    }
    const double scale = (params.q == params.p) ? 1.0 : std::pow(nrm, params.q - params.p);
    out.g = -scale * (M.transpose() * sgn_power(res, params.p));
    return out;
}

FidelityGradient fidelity_subgradient(const ProblemParams& params, const ProblemInstance& inst, const Vector& w) {
    if (w.size() != inst.cols()) throw DimensionError("w length must equal N");
    const Vector res = inst.y() - inst.M() * w;
    return fidelity_subgradient_from_residual(params, inst.M(), res);
}

}  // namespace lassolab

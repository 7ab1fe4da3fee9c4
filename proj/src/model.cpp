#include "lassolab/model.hpp"

#include "lassolab/prox.hpp"

#include <cmath>
#include <limits>

namespace lassolab {

void ProblemParams::validate() const {
    if (!(p >= 1.0 && p <= 2.0)) throw PreconditionError("p must lie in [1, 2]");
    if (!(q >= 1.0)) throw PreconditionError("q must be >= 1");
    if (!(r >= 1.0)) throw PreconditionError("r must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw PreconditionError("lambda must be finite and >= 0");
}

void ProblemParams::validate_positive_lambda() const {
    validate();
    if (!(lambda > 0.0)) throw PreconditionError("lambda must be > 0");
}

ProblemInstance::ProblemInstance(Matrix A, Vector y)
    : ProblemInstance(A, Matrix::Identity(A.cols(), A.cols()), std::move(y)) {}

ProblemInstance::ProblemInstance(Matrix A, Matrix B, Vector y) {
    if (A.rows() < 1 || A.cols() < 1) throw DimensionError("A must be at least 1 x 1");
    if (B.rows() != A.cols() || B.cols() != A.cols())
        throw DimensionError("B must be N x N with N = cols(A)");
    if (y.size() != A.rows()) throw DimensionError("y must have length rows(A)");
    if (!A.allFinite() || !B.allFinite() || !y.allFinite())
        throw PreconditionError("A, B and y must be finite");

    auto data = std::make_shared<Data>();
    data->identity = B.isIdentity(0.0);
    if (data->identity) {
        data->norm_B = 1.0;
        data->norm_Binv = 1.0;
    } else {
        Eigen::JacobiSVD<Matrix> svd(B);
        const auto& sv = svd.singularValues();
        const double smax = sv(0);
        const double smin = sv(sv.size() - 1);
        if (!(smin > 1e-10 * smax)) throw PreconditionError("B is numerically singular");
        data->norm_B = smax;
        data->norm_Binv = 1.0 / smin;
        data->B_qr.compute(B);
    }
    data->M = data->identity ? A : Matrix(A * B);
    data->A = std::move(A);
    data->B = std::move(B);
    data->y = std::move(y);
    data_ = std::move(data);
}

Vector ProblemInstance::apply_B(const Vector& w) const {
    if (w.size() != cols()) throw DimensionError("vector length must equal N");
    if (data_->identity) return w;
    return data_->B * w;
}

Vector ProblemInstance::apply_Binv(const Vector& z) const {
    if (z.size() != cols()) throw DimensionError("vector length must equal N");
    if (data_->identity) return z;
    return data_->B_qr.solve(z);
}

ProblemInstance ProblemInstance::with_observation(Vector y) const {
    if (y.size() != rows()) throw DimensionError("y must have length rows(A)");
    auto data = std::make_shared<Data>(*data_);
    data->y = std::move(y);
    return ProblemInstance(std::shared_ptr<const Data>(std::move(data)));
}

OperatorNorms operator_norms(const Matrix& B) {
    Eigen::JacobiSVD<Matrix> svd(B);
    const auto& sv = svd.singularValues();
    OperatorNorms n;
    n.norm_B = sv(0);
    n.norm_Binv = 1.0 / sv(sv.size() - 1);
    n.kappa_B = n.norm_B * n.norm_Binv;
    return n;
}

double objective_in_coefficients(const ProblemParams& params, const ProblemInstance& inst, const Vector& w) {
    if (w.size() != inst.cols()) throw DimensionError("coefficient vector length must equal N");
    const Vector res = inst.y() - inst.M() * w;
    const double fid = std::pow(lp_norm(res, params.p), params.q) / params.q;
    if (params.lambda == 0.0) return fid;
    return fid + params.lambda / params.r * std::pow(w.lpNorm<1>(), params.r);
}

double objective_value(const ProblemParams& params, const ProblemInstance& inst, const Vector& z) {
    if (z.size() != inst.cols()) throw DimensionError("z length must equal N");
    const Vector res = inst.y() - inst.A() * z;
    const double fid = std::pow(lp_norm(res, params.p), params.q) / params.q;
    if (params.lambda == 0.0) return fid;
    return fid + params.lambda / params.r * std::pow(inst.apply_Binv(z).lpNorm<1>(), params.r);
}

IndexSet support(const Vector& v, double eta) {
    IndexSet out;
    if (v.size() == 0) return out;
    const double cut = eta * v.lpNorm<Eigen::Infinity>();
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (std::abs(v(j)) > cut) out.push_back(j);
    return out;
}

TheoremBounds theorem_bounds(const OperatorNorms& norms, double gamma, long long s, bool noisy,
                             const ProblemParams& params, double beta, double e_norm) {
    if (!(gamma >= 1.0)) throw PreconditionError("gamma must be >= 1");
    if (s < 1) throw PreconditionError("s must be >= 1");
    if (!(beta > 0.0)) throw PreconditionError("beta must be > 0");
    if (!(e_norm >= 0.0)) throw PreconditionError("e_norm must be >= 0");

    TheoremBounds tb;
    tb.chi = (noisy ? 6.0 : 2.0) * gamma * norms.kappa_B;
    const double prod = tb.chi * tb.chi * static_cast<double>(s);
    // gamma = inf (alpha = 0) makes the cap vacuous
    if (!(prod < 9.0e18)) {
        tb.sparsity_cap = std::numeric_limits<long long>::max() - 1;
    } else {
        tb.sparsity_cap = static_cast<long long>(std::floor(prod));
    }
    tb.t = tb.sparsity_cap + 1;
    if (!noisy) return tb;

    const double q = params.q;
    const double r = params.r;
    const double base = std::pow(2.0, q - 1.0) * std::pow(beta, r) * std::pow(norms.norm_B, r);
    if (e_norm == 0.0) {
        if (q > r) {
            tb.lambda_star = 0.0;
        } else if (q == r) {
            tb.lambda_star = base;
        } else {
            tb.lambda_star = kInf;
            tb.lambda_star_infinite = true;
        }
    } else {
        tb.lambda_star = base * std::pow(e_norm, q - r);
    }
    return tb;
}

}  // namespace lassolab

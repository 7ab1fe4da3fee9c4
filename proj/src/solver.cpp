#include "lassolab/solver.hpp"

#include "lassolab/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lassolab {

void SolverOptions::validate() const {
    if (max_iters < 1) throw PreconditionError("max_iters must be >= 1");
    if (!(tol_kkt > 0.0)) throw PreconditionError("tol_kkt must be > 0");
    if (!(tol_obj > 0.0)) throw PreconditionError("tol_obj must be > 0");
    if (check_every < 1) throw PreconditionError("check_every must be >= 1");
    if (!(eta >= 0.0)) throw PreconditionError("eta must be >= 0");
}

double spectral_norm_estimate(const Matrix& M, int iters) {
    if (M.size() == 0) return 0.0;
    Vector v = Vector::Ones(M.cols()) / std::sqrt(static_cast<double>(M.cols()));
    double est = 0.0;
    for (int k = 0; k < iters; ++k) {
        Vector u = M.transpose() * (M * v);
        const double n = u.norm();
        if (n == 0.0) {
            // start vector in the null space; fall back to the largest column
            Eigen::Index j = 0;
            M.colwise().norm().maxCoeff(&j);
            v.setZero();
            v(j) = 1.0;
            continue;
        }
        est = std::sqrt(n);
        v = u / n;
    }
    return est;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw PreconditionError("log_grid: need 0 < lo <= hi");
    const double decades = std::log10(hi / lo);
    const int n = std::max(1, static_cast<int>(std::ceil(decades * per_decade - 1e-9)));
    std::vector<double> g;
    if (hi == lo) return {lo};
    for (int i = 0; i <= n; ++i) g.push_back(lo * std::pow(10.0, decades * i / n));
    g.back() = hi;
    return g;
}

namespace {

double sgn(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }

// The program in coefficient space: (1/q)||y - Mw||_p^q + (lambda/r)||w||_1^r.
struct Program {
    const ProblemParams& params;
    const Matrix& M;
    const Vector& y;

    double fidelity(const Vector& res) const { return std::pow(lp_norm(res, params.p), params.q) / params.q; }
    double penalty(const Vector& w) const { return params.lambda / params.r * std::pow(w.lpNorm<1>(), params.r); }
    double objective(const Vector& w) const { return fidelity(y - M * w) + penalty(w); }
};

// Prox of (mu/q)||u||_p^q for p in {1, 2}.
Vector prox_fidelity(const Vector& v, double mu, double p, double q) {
    if (p == 1.0) return prox_l1_power(v, mu, q).z;
    const double nv = v.norm();
    if (nv == 0.0) return v;
    // radial: rho + mu rho^{q-1} = ||v||
    double rho;
    if (q == 1.0) {
        rho = std::max(nv - mu, 0.0);
    } else if (q == 2.0) {
        rho = nv / (1.0 + mu);
    } else {
        double lo = 0.0;
        double hi = nv;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (mid + mu * std::pow(mid, q - 1.0) < nv)
                lo = mid;
            else
                hi = mid;
        }
        rho = 0.5 * (lo + hi);
    }
    return v * (rho / nv);
}

Matrix columns(const Matrix& M, const IndexSet& S) {
    Matrix out(M.rows(), static_cast<Eigen::Index>(S.size()));
    for (size_t a = 0; a < S.size(); ++a) out.col(static_cast<Eigen::Index>(a)) = M.col(S[a]);
    return out;
}

// Minimizes the objective restricted to a face: coefficients outside S are zero,
// the signs of w_S are fixed, and the residual rows in Z are held at zero. For
// p = 1 the remaining residual rows keep their signs, so the fidelity is a
// smooth function of a linear form. Newton steps run in a null-space
// parametrization of the Z constraints; when a sign would flip the step stops
// at the boundary and the face shrinks (coefficient dropped) or the row joins Z.
class FacePolisher {
public:
    FacePolisher(const Program& prog, Vector w, IndexSet S, std::vector<Eigen::Index> Z)
        : prog_(prog), w_(std::move(w)), S_(std::move(S)), Z_(std::move(Z)) {
        const Vector res = prog_.y - prog_.M * w_;
        in_z_.assign(static_cast<size_t>(prog_.M.rows()), 0);
        for (auto i : Z_) in_z_[static_cast<size_t>(i)] = 1;
        sigma_ = Vector::Zero(prog_.M.rows());
        for (Eigen::Index i = 0; i < res.size(); ++i)
            if (!in_z_[static_cast<size_t>(i)]) sigma_(i) = sgn(res(i));
    }

    std::optional<Vector> run(int max_steps = 200) {
        for (int outer = 0; outer < max_steps; ++outer) {
            if (S_.empty()) return Vector::Zero(w_.size());
            if (!setup()) return std::nullopt;
            const Step step = newton_step();
            if (step.done) break;
            if (!step.progressed) break;
        }
        Vector out = Vector::Zero(w_.size());
        for (size_t a = 0; a < S_.size(); ++a) out(S_[a]) = x_(static_cast<Eigen::Index>(a));
        return out;
    }

private:
    struct Step {
        bool done = false;
        bool progressed = false;
    };

    bool linear_rows() const { return prog_.params.p == 1.0; }

    // Builds M_S, signs, particular solution and null-space basis; returns false
    // when the face is inconsistent.
    bool setup() {
        const Eigen::Index k = static_cast<Eigen::Index>(S_.size());
        MS_ = columns(prog_.M, S_);
        s_.resize(k);
        Vector wS(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            wS(a) = w_(S_[static_cast<size_t>(a)]);
            s_(a) = sgn(wS(a));
            if (s_(a) == 0.0) return false;
        }
        if (Z_.empty()) {
            base_ = Vector::Zero(k);
            basis_ = Matrix::Identity(k, k);
            x_ = wS;
            return true;
        }
        Matrix MZS(static_cast<Eigen::Index>(Z_.size()), k);
        Vector yZ(static_cast<Eigen::Index>(Z_.size()));
        for (size_t a = 0; a < Z_.size(); ++a) {
            MZS.row(static_cast<Eigen::Index>(a)) = MS_.row(Z_[a]);
            yZ(static_cast<Eigen::Index>(a)) = prog_.y(Z_[a]);
        }
        Eigen::JacobiSVD<Matrix> svd(MZS, Eigen::ComputeFullV | Eigen::ComputeThinU);
        svd.setThreshold(1e-11);
        base_ = svd.solve(yZ);
        if ((MZS * base_ - yZ).norm() > 1e-9 * (1.0 + yZ.norm())) return false;
        const Eigen::Index rank = svd.rank();
        basis_ = svd.matrixV().rightCols(k - rank);
        x_ = base_ + basis_ * (basis_.transpose() * (wS - base_));
        // projection may have flipped signs
        for (Eigen::Index a = 0; a < k; ++a)
            if (sgn(x_(a)) != s_(a)) return false;
        if (linear_rows()) {
            const Vector res = prog_.y - MS_ * x_;
            for (Eigen::Index i = 0; i < res.size(); ++i)
                if (!in_z_[static_cast<size_t>(i)] && sigma_(i) * res(i) <= 0.0) return false;
        }
        return true;
    }

    double phi(const Vector& x) const {
        const Vector res = prog_.y - MS_ * x;
        double fid = 0.0;
        if (linear_rows()) {
            double h = 0.0;
            for (Eigen::Index i = 0; i < res.size(); ++i)
                if (!in_z_[static_cast<size_t>(i)]) h += std::abs(res(i));
            fid = std::pow(h, prog_.params.q) / prog_.params.q;
        } else if (Z_.empty()) {
            fid = prog_.fidelity(res);
        }
        const double ell = std::abs(s_.dot(x));
        return fid + prog_.params.lambda / prog_.params.r * std::pow(ell, prog_.params.r);
    }

    void derivatives(const Vector& x, Vector& grad, Matrix& hess) const {
        const Eigen::Index k = x.size();
        const double p = prog_.params.p;
        const double q = prog_.params.q;
        const double r = prog_.params.r;
        const double lambda = prog_.params.lambda;
        grad = Vector::Zero(k);
        hess = Matrix::Zero(k, k);
        const Vector res = prog_.y - MS_ * x;

        if (linear_rows()) {
            Vector sig = Vector::Zero(res.size());
            double h = 0.0;
            for (Eigen::Index i = 0; i < res.size(); ++i) {
                if (in_z_[static_cast<size_t>(i)]) continue;
                sig(i) = sigma_(i);
                h += sigma_(i) * res(i);
            }
            if (h > 0.0) {
                const Vector dh = -(MS_.transpose() * sig);
                grad += std::pow(h, q - 1.0) * dh;
                if (q != 1.0) hess += (q - 1.0) * std::pow(h, q - 2.0) * dh * dh.transpose();
            }
        } else if (Z_.empty()) {
            double h = 0.0;
            for (Eigen::Index i = 0; i < res.size(); ++i) h += std::pow(std::abs(res(i)), p);
            if (h > 0.0) {
                const Vector dh = -p * (MS_.transpose() * sgn_power(res, p));
                Matrix d2h;
                if (p == 2.0) {
                    d2h = 2.0 * (MS_.transpose() * MS_);
                } else {
                    const double floor = 1e-12 * std::max(1.0, res.lpNorm<Eigen::Infinity>());
                    Vector wt(res.size());
                    for (Eigen::Index i = 0; i < res.size(); ++i)
                        wt(i) = std::pow(std::max(std::abs(res(i)), floor), p - 2.0);
                    d2h = p * (p - 1.0) * (MS_.transpose() * wt.asDiagonal() * MS_);
                }
                const double e = q / p;
                grad += std::pow(h, e - 1.0) / p * dh;
                hess += std::pow(h, e - 1.0) / p * d2h;
                if (e != 1.0) hess += (e - 1.0) * std::pow(h, e - 2.0) / p * dh * dh.transpose();
            }
        }
        const double ell = s_.dot(x);
        grad += lambda * std::pow(ell, r - 1.0) * s_;
        if (r != 1.0) hess += lambda * (r - 1.0) * std::pow(ell, r - 2.0) * s_ * s_.transpose();
    }

    Step newton_step() {
        Step st;
        const Eigen::Index dim = basis_.cols();
        if (dim == 0) {
            st.done = true;
            return st;
        }
        Vector grad;
        Matrix hess;
        derivatives(x_, grad, hess);
        const Vector g = basis_.transpose() * grad;
        const Matrix H = basis_.transpose() * hess * basis_;
        const double scale = 1.0 + H.diagonal().cwiseAbs().maxCoeff();
        double delta = 1e-12 * scale;
        Vector d;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::LDLT<Matrix> ldlt(H + delta * Matrix::Identity(dim, dim));
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                d = ldlt.solve(-g);
                if (d.allFinite()) break;
            }
            delta *= 100.0;
        }
        if (d.size() != dim || !d.allFinite()) return st;
        const double decrement = -g.dot(d);
        const double f0 = phi(x_);
        if (!(decrement > 1e-22 * std::max(1.0, std::abs(f0)))) {
            st.done = true;
            return st;
        }
        const Vector dx = basis_ * d;

        // largest step keeping coefficient and residual signs
        double alpha_max = kInf;
        Eigen::Index block_coef = -1;
        Eigen::Index block_row = -1;
        for (Eigen::Index a = 0; a < dx.size(); ++a) {
            if (s_(a) * dx(a) < 0.0) {
                const double lim = -x_(a) / dx(a);
                if (lim < alpha_max) {
                    alpha_max = lim;
                    block_coef = a;
                    block_row = -1;
                }
            }
        }
        if (linear_rows()) {
            const Vector res = prog_.y - MS_ * x_;
            const Vector dres = -(MS_ * dx);
            for (Eigen::Index i = 0; i < res.size(); ++i) {
                if (in_z_[static_cast<size_t>(i)]) continue;
                if (sigma_(i) * dres(i) < 0.0) {
                    const double lim = -res(i) / dres(i);
                    if (lim < alpha_max) {
                        alpha_max = lim;
                        block_row = i;
                        block_coef = -1;
                    }
                }
            }
        }

        if (alpha_max <= 1.0) {
            Vector xb = x_ + alpha_max * dx;
            if (block_coef >= 0) xb(block_coef) = 0.0;
            if (phi(xb) <= f0) {
                commit(xb);
                if (block_coef >= 0) {
                    S_.erase(S_.begin() + block_coef);
                } else {
                    Z_.push_back(block_row);
                    std::sort(Z_.begin(), Z_.end());
                    in_z_[static_cast<size_t>(block_row)] = 1;
                    sigma_(block_row) = 0.0;
                }
                st.progressed = true;
                return st;
            }
        }

        double alpha = std::min(1.0, 0.5 * alpha_max);
        while (alpha > 1e-20) {
            const Vector xn = x_ + alpha * dx;
            if (phi(xn) <= f0 - 1e-4 * alpha * decrement) {
                commit(xn);
                st.progressed = true;
                return st;
            }
            alpha *= 0.5;
        }
        st.done = true;
        return st;
    }

    void commit(const Vector& x) {
        x_ = x;
        for (size_t a = 0; a < S_.size(); ++a) w_(S_[a]) = x(static_cast<Eigen::Index>(a));
        // drop exact zeros from the tracked vector
        for (Eigen::Index j = 0; j < w_.size(); ++j)
            if (std::find(S_.begin(), S_.end(), j) == S_.end()) w_(j) = 0.0;
    }

    const Program& prog_;
    Vector w_;
    IndexSet S_;
    std::vector<Eigen::Index> Z_;
    std::vector<char> in_z_;
    Vector sigma_;
    Matrix MS_;
    Vector s_;
    Vector base_;
    Matrix basis_;
    Vector x_;
};

// Candidate polished points for the current iterate.
std::vector<Vector> polish_candidates(const Program& prog, const Vector& w, double eta) {
    std::vector<Vector> out;
    const IndexSet S = support(w, eta);
    Vector wt = Vector::Zero(w.size());
    for (auto j : S) wt(j) = w(j);
    const Vector res = prog.y - prog.M * wt;
    const double yscale = std::max(1.0, prog.y.lpNorm<Eigen::Infinity>());
    const double p = prog.params.p;
    const double q = prog.params.q;

    auto rows_below = [&](double thr) {
        std::vector<Eigen::Index> Z;
        for (Eigen::Index i = 0; i < res.size(); ++i)
            if (std::abs(res(i)) <= thr) Z.push_back(i);
        return Z;
    };

    if (p == 1.0) {
        std::vector<Eigen::Index> last;
        bool first = true;
        for (double rel : {1e-10, 1e-8, 1e-6, 1e-4}) {
            auto Z = rows_below(rel * yscale);
            if (!first && Z == last) continue;
            first = false;
            last = Z;
            if (auto c = FacePolisher(prog, wt, S, Z).run()) out.push_back(std::move(*c));
        }
        return out;
    }
    if (q < p && res.lpNorm<Eigen::Infinity>() <= 1e-6 * yscale) {
        std::vector<Eigen::Index> all(static_cast<size_t>(res.size()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        if (auto c = FacePolisher(prog, wt, S, all).run()) out.push_back(std::move(*c));
    }
    if (auto c = FacePolisher(prog, wt, S, {}).run()) out.push_back(std::move(*c));
    return out;
}

// Moves w along null directions of the support columns of M until those
// columns are independent. The residual is unchanged and ||w||_1 does not
// increase, so a minimizer stays a minimizer with at most rank(M) nonzeros.
Vector reduce_support(const Matrix& M, Vector w, double eta) {
    for (;;) {
        const IndexSet S = support(w, eta);
        if (S.size() <= 1) return w;
        const Matrix MS = columns(M, S);
        Eigen::JacobiSVD<Matrix> svd(MS, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double floor = 1e-10 * std::max(sv(0), 1e-300);
        Eigen::Index rank = 0;
        while (rank < sv.size() && sv(rank) > floor) ++rank;
        if (rank == static_cast<Eigen::Index>(S.size())) return w;
        Vector v = svd.matrixV().col(static_cast<Eigen::Index>(S.size()) - 1);
        double slope = 0.0;
        for (size_t a = 0; a < S.size(); ++a) slope += sgn(w(S[a])) * v(static_cast<Eigen::Index>(a));
        if (slope > 0.0) v = -v;
        double step = kInf;
        size_t hit = 0;
        for (size_t a = 0; a < S.size(); ++a) {
            const double wa = w(S[a]);
            const double va = v(static_cast<Eigen::Index>(a));
            if (wa * va < 0.0 && -wa / va < step) {
                step = -wa / va;
                hit = a;
            }
        }
        if (!std::isfinite(step)) return w;
        for (size_t a = 0; a < S.size(); ++a) w(S[a]) += step * v(static_cast<Eigen::Index>(a));
        w(S[hit]) = 0.0;
    }
}

// Simplex method (Bland's rule) for min ||w||_1 subject to Mw = y, in the
// split form w = w+ - w-. Column k < N is +M_k, column k >= N is -M_{k-N}.
// Starts from the basis picked by a column-pivoted QR of M. Returns nullopt
// when M lacks full row rank or the iteration cap is reached.
std::optional<Vector> basis_pursuit_simplex(const Matrix& M, const Vector& y) {
    const Eigen::Index m = M.rows();
    const Eigen::Index N = M.cols();
    if (m > N) return std::nullopt;
    Eigen::ColPivHouseholderQR<Matrix> qr(M);
    qr.setThreshold(1e-10);
    if (qr.rank() < m) return std::nullopt;

    std::vector<Eigen::Index> basis(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = qr.colsPermutation().indices()(i);
    auto column = [&](Eigen::Index k) -> Vector { return k < N ? Vector(M.col(k)) : Vector(-M.col(k - N)); };
    {
        Matrix Bm(m, m);
        for (Eigen::Index i = 0; i < m; ++i) Bm.col(i) = M.col(basis[static_cast<size_t>(i)]);
        const Vector x = Bm.partialPivLu().solve(y);
        for (Eigen::Index i = 0; i < m; ++i)
            if (x(i) < 0.0) basis[static_cast<size_t>(i)] += N;
    }

    const double scale = std::max(1.0, M.lpNorm<Eigen::Infinity>());
    const long long cap = 50 * (m + N) + 1000;
    for (long long it = 0; it < cap; ++it) {
        Matrix Bm(m, m);
        for (Eigen::Index i = 0; i < m; ++i) Bm.col(i) = column(basis[static_cast<size_t>(i)]);
        const Eigen::PartialPivLU<Matrix> lu(Bm);
        const Vector x = lu.solve(y).cwiseMax(0.0);
        const Vector pi = lu.transpose().solve(Vector::Ones(m));
        const Vector mp = M.transpose() * pi;

        std::vector<char> in_basis(static_cast<size_t>(2 * N), 0);
        for (auto k : basis) in_basis[static_cast<size_t>(k)] = 1;
        Eigen::Index enter = -1;
        for (Eigen::Index k = 0; k < 2 * N && enter < 0; ++k) {
            if (in_basis[static_cast<size_t>(k)]) continue;
            const double reduced = 1.0 - (k < N ? mp(k) : -mp(k - N));
            if (reduced < -1e-11 * scale) enter = k;
        }
        if (enter < 0) {
            Vector w = Vector::Zero(N);
            for (Eigen::Index i = 0; i < m; ++i) {
                const Eigen::Index k = basis[static_cast<size_t>(i)];
                if (k < N)
                    w(k) += x(i);
                else
                    w(k - N) -= x(i);
            }
            return w;
        }
        const Vector d = lu.solve(column(enter));
        Eigen::Index leave = -1;
        double best = kInf;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (d(i) <= 1e-12) continue;
            const double ratio = x(i) / d(i);
            if (ratio < best - 1e-14 ||
                (ratio <= best + 1e-14 && leave >= 0 &&
                 basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
                best = ratio;
                leave = i;
            }
        }
        if (leave < 0) return std::nullopt;
        basis[static_cast<size_t>(leave)] = enter;
    }
    return std::nullopt;
}

// Holds the best iterate and decides termination via the certificate.
class Tracker {
public:
    Tracker(const Program& prog, const ProblemInstance& inst, const SolverOptions& opts)
        : prog_(prog), inst_(inst), opts_(opts) {
        copts_.tol = opts.tol_kkt;
        copts_.eta = opts.eta;
    }

    /// Returns true when a certified point was found. `adopt` receives a
    /// polished point with lower objective than w, if any.
    bool check(const Vector& w, bool try_polish, std::optional<Vector>& adopt) {
        adopt.reset();
        if (consider(w)) return true;
        if (!try_polish || !opts_.polish) return false;
        const double fw = prog_.objective(w);
        for (auto& c : polish_candidates(prog_, w, opts_.eta)) {
            const double fc = prog_.objective(c);
            if (!(fc <= fw + 1e-12 * std::max(1.0, std::abs(fw)))) continue;
            if (consider(c)) return true;
            if (fc < fw && (!adopt || fc < prog_.objective(*adopt))) adopt = c;
        }
        return false;
    }

    void observe(const Vector& w, double fw) {
        if (!certified_ && fw < best_obj_) {
            best_obj_ = fw;
            best_ = w;
        }
    }

    [[nodiscard]] bool certified() const { return certified_; }
    [[nodiscard]] const Vector& best() const { return best_; }
    [[nodiscard]] double best_kkt() const { return best_kkt_; }

private:
    bool consider(const Vector& w) {
        const Certificate cert = check_stationarity_coefficients(prog_.params, inst_, w, copts_);
        const double kkt = cert.kkt_residual();
        const double fw = prog_.objective(w);
        if (cert.passed) {
            if (!certified_ || fw < best_obj_) {
                certified_ = true;
                best_ = w;
                best_obj_ = fw;
                best_kkt_ = kkt;
            }
            return true;
        }
        if (!certified_ && (fw < best_obj_ || best_.size() == 0)) {
            best_ = w;
            best_obj_ = fw;
            best_kkt_ = kkt;
        }
        return false;
    }

    const Program& prog_;
    const ProblemInstance& inst_;
    const SolverOptions& opts_;
    CertificateOptions copts_;
    Vector best_;
    double best_obj_ = kInf;
    double best_kkt_ = kInf;
    bool certified_ = false;
};

enum class Method { ProxGrad, Admm, Subgradient };

struct Loop {
    const Program& prog;
    const SolverOptions& opts;
    Tracker& tracker;
    int iters = 0;
    IndexSet last_support;
    int checks = 0;

    // Periodic certificate and polish; returns true when done.
    bool checkpoint(Vector& w, bool& adopted) {
        adopted = false;
        ++checks;
        IndexSet S = support(w, opts.eta);
        const bool stable = (S == last_support) || (checks % 10 == 0);
        last_support = std::move(S);
        std::optional<Vector> adopt;
        if (tracker.check(w, stable, adopt)) return true;
        if (adopt) {
            w = *adopt;
            adopted = true;
        }
        return false;
    }

    Method prox_grad(Vector& w) {
        const double lambda = prog.params.lambda;
        const double r = prog.params.r;
        const double L = spectral_norm_estimate(prog.M);
        const double sigma0 = 1.0 / (L * L + 1.0);
        double sigma = sigma0;
        Vector w_prev = w;
        double t = 1.0;
        double fw = prog.objective(w);

        while (iters < opts.max_iters) {
            ++iters;
            const bool momentum = opts.acceleration && t > 1.0;
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            Vector u = momentum ? Vector(w + ((t - 1.0) / t_next) * (w - w_prev)) : w;
            const Vector res_u = prog.y - prog.M * u;
            const FidelityGradient fg = fidelity_subgradient_from_residual(prog.params, prog.M, res_u);
            if (fg.nonsmooth) return prog.params.p == 2.0 ? Method::Admm : Method::Subgradient;
            const double F_u = prog.fidelity(res_u);

            Vector cand;
            double F_c = 0.0;
            bool accepted = false;
            while (sigma > 1e-14 * sigma0) {
                cand = prox_l1_power(u - sigma * fg.g, sigma * lambda, r).z;
                F_c = prog.fidelity(prog.y - prog.M * cand);
                const Vector d = cand - u;
                const double model = F_u + fg.g.dot(d) + d.squaredNorm() / (2.0 * sigma);
                if (F_c <= model + 1e-15 * std::abs(F_u)) {
                    accepted = true;
                    break;
                }
                sigma *= 0.5;
            }
            if (!accepted) return prog.params.p == 2.0 ? Method::Admm : Method::Subgradient;

            const double f_c = F_c + prog.penalty(cand);
            if (f_c > fw) {
                if (momentum) {
                    // restart from w without momentum
                    w_prev = w;
                    t = 1.0;
                    continue;
                }
                if (f_c > fw + 1e-14 * std::max(1.0, std::abs(fw))) {
                    return prog.params.p == 2.0 ? Method::Admm : Method::Subgradient;
                }
            }
            const double decrease = fw - f_c;
            w_prev = w;
            w = cand;
            fw = f_c;
            t = opts.acceleration ? t_next : 1.0;
            tracker.observe(w, fw);
            if (opts.on_accept) opts.on_accept(iters, fw);
            sigma = std::min(sigma * 1.25, 1e6 * sigma0);

            const bool stalled = decrease <= opts.tol_obj * (1.0 + std::abs(fw));
            if (iters % opts.check_every == 0 || stalled) {
                bool adopted = false;
                if (checkpoint(w, adopted)) return Method::ProxGrad;
                if (adopted) {
                    w_prev = w;
                    fw = prog.objective(w);
                    t = 1.0;
                    tracker.observe(w, fw);
                    if (opts.on_accept) opts.on_accept(iters, fw);
                }
            }
        }
        return Method::ProxGrad;
    }

    void admm(Vector& w) {
        const double lambda = prog.params.lambda;
        const double p = prog.params.p;
        const double q = prog.params.q;
        const double r = prog.params.r;
        Eigen::BDCSVD<Matrix> svd(prog.M);
        const double L = std::max(svd.singularValues()(0) * svd.singularValues()(0) * 1.0001, 1e-300);
        const double rho = 1.0;
        Vector Mw = prog.M * w;
        Vector u = prog.y - Mw;
        Vector d = Vector::Zero(prog.y.size());

        while (iters < opts.max_iters) {
            ++iters;
            const Vector v = Mw + u - prog.y + d;
            w = prox_l1_power(w - (prog.M.transpose() * v) / L, lambda / (rho * L), r).z;
            Mw = prog.M * w;
            u = prox_fidelity(prog.y - Mw - d, 1.0 / rho, p, q);
            const Vector primal = Mw + u - prog.y;
            d += primal;
            tracker.observe(w, prog.objective(w));

            if (iters % opts.check_every == 0) {
                bool adopted = false;
                Vector probe = w;
                if (checkpoint(probe, adopted)) return;
            }
        }
    }

    // Zero-residual regime: the candidate is a minimizer of ||w||_1 subject to
    // Mw = y, which the certificate then accepts or rejects.
    bool basis_pursuit() {
        std::optional<Vector> unused;
        auto w = basis_pursuit_simplex(prog.M, prog.y);
        if (!w) return false;
        tracker.observe(*w, prog.objective(*w));
        return tracker.check(*w, true, unused);
    }

    void subgradient(Vector& w) {
        const double lambda = prog.params.lambda;
        const double r = prog.params.r;
        const double L = spectral_norm_estimate(prog.M);
        const double sigma0 = 1.0 / (L * L + 1.0);
        long long k = 0;
        while (iters < opts.max_iters) {
            ++iters;
            ++k;
            const double sigma = sigma0 / std::sqrt(static_cast<double>(k));
            const Vector res = prog.y - prog.M * w;
            const FidelityGradient fg = fidelity_subgradient_from_residual(prog.params, prog.M, res);
            w = prox_l1_power(w - sigma * fg.g, sigma * lambda, r).z;
            tracker.observe(w, prog.objective(w));
            if (iters % opts.check_every == 0) {
                bool adopted = false;
                Vector probe = tracker.best();
                if (checkpoint(probe, adopted)) return;
                if (adopted) w = probe;
            }
        }
    }
};

}  // namespace

Solution solve(const ProblemParams& params, const ProblemInstance& inst, const SolverOptions& opts,
               const std::optional<Vector>& warm_start) {
    params.validate_positive_lambda();
    opts.validate();
    const Eigen::Index N = inst.cols();
    if (warm_start && warm_start->size() != N) throw DimensionError("warm start length must equal N");
    if (opts.step_mode == StepMode::Admm && !(params.p == 1.0 || params.p == 2.0))
        throw PreconditionError("ADMM mode needs p = 1 or p = 2");

    const Program prog{params, inst.M(), inst.y()};
    Tracker tracker(prog, inst, opts);
    std::optional<Vector> unused;

    auto finish = [&](const Vector& w_in, int iters) {
        Vector w = w_in;
        if (static_cast<Eigen::Index>(support(w, opts.eta).size()) > inst.rows()) {
            Vector reduced = reduce_support(prog.M, w, opts.eta);
            const double f0 = prog.objective(w);
            if (prog.objective(reduced) <= f0 + 1e-12 * std::max(1.0, std::abs(f0))) w = std::move(reduced);
        }
        Solution sol;
        sol.z = inst.apply_B(w);
        sol.objective = objective_value(params, inst, sol.z);
        sol.support = support(w, opts.eta);
        sol.iterations = iters;
        CertificateOptions copts;
        copts.tol = opts.tol_kkt;
        copts.eta = opts.eta;
        const Certificate cert = check_stationarity_coefficients(params, inst, w, copts);
        sol.kkt_residual = cert.kkt_residual();
        sol.certified = cert.passed;
        return sol;
    };

    const Vector zero = Vector::Zero(N);
    if (params.r == 1.0 || inst.y().lpNorm<Eigen::Infinity>() == 0.0) {
        if (tracker.check(zero, false, unused)) return finish(tracker.best(), 0);
    }
    Vector w = warm_start ? inst.apply_Binv(*warm_start) : zero;
    if (warm_start && tracker.check(w, true, unused)) return finish(tracker.best(), 0);
    tracker.observe(w, prog.objective(w));

    Loop loop{prog, opts, tracker, 0, {}, 0};
    Method method = Method::ProxGrad;
    switch (opts.step_mode) {
        case StepMode::Automatic: method = params.p == 1.0 ? Method::Admm : Method::ProxGrad; break;
        case StepMode::Backtracking: method = Method::ProxGrad; break;
        case StepMode::Diminishing: method = Method::Subgradient; break;
        case StepMode::Admm: method = Method::Admm; break;
    }
    if (method == Method::ProxGrad && params.p == 1.0) method = Method::Admm;

    if (method == Method::ProxGrad) {
        method = loop.prox_grad(w);
        if (method == Method::ProxGrad || tracker.certified()) return finish(tracker.best(), loop.iters);
        w = tracker.best();
    }
    if (!tracker.certified() && (params.p == 1.0 || params.q < params.p)) loop.basis_pursuit();
    if (!tracker.certified()) {
        if (method == Method::Admm)
            loop.admm(w);
        else
            loop.subgradient(w);
    }
    if (!tracker.certified() && opts.polish) tracker.check(tracker.best(), true, unused);
    return finish(tracker.best(), loop.iters);
}

PathResult solve_path(const ProblemParams& base, const ProblemInstance& inst, const std::vector<double>& lambda_grid,
                      const SolverOptions& opts) {
    if (lambda_grid.empty()) throw PreconditionError("lambda grid must not be empty");
    for (size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0.0)) throw PreconditionError("lambda grid must be positive");
        if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
            throw PreconditionError("lambda grid must be strictly increasing");
    }
    PathResult out;
    out.lambda_grid = lambda_grid;
    std::optional<Vector> warm;
    for (double lam : lambda_grid) {
        ProblemParams params = base;
        params.lambda = lam;
        Solution sol = solve(params, inst, opts, warm);
        warm = sol.z;
        out.residual_p_norms.push_back(lp_norm(inst.y() - inst.A() * sol.z, params.p));
        out.solutions.push_back(std::move(sol));
    }
    return out;
}

Solution coordinate_descent_lasso(const ProblemInstance& inst, double lambda, double eta, long long max_sweeps) {
    if (!inst.identity_dictionary()) throw PreconditionError("coordinate_descent_lasso requires B = I");
    if (!(lambda > 0.0)) throw PreconditionError("coordinate_descent_lasso requires lambda > 0");
    const Matrix& A = inst.A();
    const Vector& y = inst.y();
    const Eigen::Index N = A.cols();
    const Vector col_sq = A.colwise().squaredNorm().transpose();

    Vector z = Vector::Zero(N);
    Vector res = y;
    auto objective = [&]() { return 0.5 * res.squaredNorm() + lambda * z.lpNorm<1>(); };
    double f = objective();
    long long sweeps = 0;
    while (sweeps < max_sweeps) {
        ++sweeps;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < N; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double old = z(j);
            const double rho = A.col(j).dot(res) + col_sq(j) * old;
            const double m = std::abs(rho) - lambda;
            const double nz = m > 0.0 ? std::copysign(m, rho) / col_sq(j) : 0.0;
            if (nz != old) {
                res -= (nz - old) * A.col(j);
                z(j) = nz;
                max_change = std::max(max_change, std::abs(nz - old));
            }
        }
        // recompute the residual periodically to avoid drift
        if (sweeps % 64 == 0) res = y - A * z;
        const double fn = objective();
        const bool small_decrease = f - fn < 1e-14 * (1.0 + fn);
        f = fn;
        if (small_decrease && max_change <= 1e-13 * (1.0 + z.lpNorm<Eigen::Infinity>())) break;
    }
    Solution sol;
    sol.z = z;
    ProblemParams params{2.0, 2.0, 1.0, lambda};
    sol.objective = objective_value(params, inst, z);
    sol.support = support(z, eta);
    sol.iterations = static_cast<int>(std::min<long long>(sweeps, std::numeric_limits<int>::max()));
    const Certificate cert = check_stationarity(params, inst, z);
    sol.kkt_residual = cert.kkt_residual();
    sol.certified = cert.passed;
    return sol;
}

}  // namespace lassolab

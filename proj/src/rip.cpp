#include "lassolab/rip.hpp"

#include "lassolab/ensembles.hpp"
#include "lassolab/prox.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>

#include <omp.h>

namespace lassolab {

const char* to_string(RipMode m) { return m == RipMode::ExactL2 ? "exact_l2" : "estimated"; }

long long binomial(long long n, long long k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned long long c = 1;
    for (long long i = 1; i <= k; ++i) {
        const unsigned long long num = static_cast<unsigned long long>(n - k + i);
        // c * num / i is exact at every step since c * num = C(n-k+i, i) * i
        const unsigned long long g = std::gcd(c, static_cast<unsigned long long>(i));
        const unsigned long long a = c / g;
        const unsigned long long b = static_cast<unsigned long long>(i) / g;
        const unsigned long long num_b = num / b;
        if (a > static_cast<unsigned long long>(LLONG_MAX) / num_b) return LLONG_MAX;
        c = a * num_b;
    }
    return static_cast<long long>(c);
}

namespace {

struct Extremes {
    double lo2 = kInf;
    double hi2 = 0.0;
};

void check_rip_inputs(const Matrix& A, const Matrix& B, long long t) {
    if (A.rows() < 1 || A.cols() < 1) throw DimensionError("A must be at least 1 x 1");
    if (B.rows() != A.cols() || B.cols() != A.cols()) throw DimensionError("B must be N x N");
    if (t < 1) throw PreconditionError("RIP order t must be >= 1");
}

// Combination of the given lexicographic rank among k-subsets of [0, n).
IndexSet unrank(long long rank, Eigen::Index n, Eigen::Index k) {
    IndexSet comb(static_cast<size_t>(k));
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (;; ++c) {
            const long long count = binomial(n - c - 1, k - i - 1);
            if (rank < count) break;
            rank -= count;
        }
        comb[static_cast<size_t>(i)] = c++;
    }
    return comb;
}

bool next_combination(IndexSet& comb, Eigen::Index n) {
    const auto k = static_cast<Eigen::Index>(comb.size());
    for (Eigen::Index i = k - 1; i >= 0; --i) {
        if (comb[static_cast<size_t>(i)] < n - k + i) {
            ++comb[static_cast<size_t>(i)];
            for (Eigen::Index j = i + 1; j < k; ++j) comb[static_cast<size_t>(j)] = comb[static_cast<size_t>(j - 1)] + 1;
            return true;
        }
    }
    return false;
}

Matrix gather(const Matrix& M, const IndexSet& S) {
    Matrix out(M.rows(), static_cast<Eigen::Index>(S.size()));
    for (size_t a = 0; a < S.size(); ++a) out.col(static_cast<Eigen::Index>(a)) = M.col(S[a]);
    return out;
}

void support_extremes(const Matrix& M, const Matrix& B, const IndexSet& S, Extremes& ex) {
    const Matrix MS = gather(M, S);
    const Matrix BS = gather(B, S);
    const Matrix G1 = MS.transpose() * MS;
    const Matrix G2 = BS.transpose() * BS;
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(G1, G2, Eigen::EigenvaluesOnly);
    const auto& ev = ges.eigenvalues();
    ex.lo2 = std::min(ex.lo2, std::max(ev(0), 0.0));
    ex.hi2 = std::max(ex.hi2, std::max(ev(ev.size() - 1), 0.0));
}

RipReport exact_report(long long t, long long count, const Extremes& ex) {
    RipReport rep;
    rep.t = t;
    rep.p = 2.0;
    rep.mode = RipMode::ExactL2;
    rep.supports_enumerated = count;
    rep.alpha = std::sqrt(ex.lo2);
    rep.beta = std::sqrt(ex.hi2);
    rep.gamma = rep.alpha > 0.0 ? rep.beta / rep.alpha : kInf;
    return rep;
}

long long support_count(const Matrix& A, long long t, long long budget) {
    const long long k = std::min<long long>(t, A.cols());
    const long long count = binomial(A.cols(), k);
    if (count > budget)
        throw PreconditionError("C(N, t) = " + std::to_string(count) + " exceeds the support budget " +
                                std::to_string(budget) + "; use estimated mode");
    return count;
}

}  // namespace

RipReport rip_exact_l2_serial(const Matrix& A, const Matrix& B, long long t, long long budget) {
    check_rip_inputs(A, B, t);
    const long long count = support_count(A, t, budget);
    const Eigen::Index k = std::min<Eigen::Index>(t, A.cols());
    const Matrix M = A * B;
    Extremes ex;
    IndexSet comb(static_cast<size_t>(k));
    std::iota(comb.begin(), comb.end(), Eigen::Index{0});
    do {
        support_extremes(M, B, comb, ex);
    } while (next_combination(comb, A.cols()));
    return exact_report(t, count, ex);
}

RipReport rip_exact_l2(const Matrix& A, const Matrix& B, long long t, long long budget) {
    check_rip_inputs(A, B, t);
    const long long count = support_count(A, t, budget);
    const Eigen::Index k = std::min<Eigen::Index>(t, A.cols());
    const Matrix M = A * B;
    const long long chunks = std::min<long long>(count, 16LL * omp_get_max_threads());
    double lo2 = kInf;
    double hi2 = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(min : lo2) reduction(max : hi2)
    for (long long c = 0; c < chunks; ++c) {
        const long long first = count * c / chunks;
        const long long last = count * (c + 1) / chunks;
        Extremes ex;
        IndexSet comb = unrank(first, A.cols(), k);
        for (long long r = first; r < last; ++r) {
            support_extremes(M, B, comb, ex);
            next_combination(comb, A.cols());
        }
        lo2 = std::min(lo2, ex.lo2);
        hi2 = std::max(hi2, ex.hi2);
    }
    return exact_report(t, count, Extremes{lo2, hi2});
}

namespace {

// Ratio |M_S w|_p / |B_S w|_2 and the gradient of its logarithm.
struct RatioEval {
    double value = 0.0;
    Vector grad;
};

RatioEval ratio(const Matrix& MS, const Matrix& BS, const Vector& w, double p) {
    RatioEval out;
    const Vector mw = MS * w;
    const Vector bw = BS * w;
    const double num = lp_norm(mw, p);
    const double den = bw.norm();
    out.value = den > 0.0 ? num / den : 0.0;
    out.grad = Vector::Zero(w.size());
    if (num > 0.0 && den > 0.0)
        out.grad = MS.transpose() * sgn_power(mw, p) / std::pow(num, p) - BS.transpose() * bw / (den * den);
    return out;
}

// Projected gradient on the sphere, ascending (dir = +1) or descending (-1).
// Every evaluated point is a witness, so the running extremes are tracked.
void polish(const Matrix& MS, const Matrix& BS, Vector w, double p, int dir, int steps, Extremes& ex) {
    RatioEval cur = ratio(MS, BS, w, p);
    auto record = [&](double v) {
        ex.lo2 = std::min(ex.lo2, v * v);
        ex.hi2 = std::max(ex.hi2, v * v);
    };
    record(cur.value);
    double step = 0.5;
    for (int it = 0; it < steps; ++it) {
        const double gn = cur.grad.norm();
        if (!(gn > 0.0) || cur.value == 0.0) return;
        const double wn = w.norm();
        bool improved = false;
        for (int bt = 0; bt < 30; ++bt) {
            Vector cand = w + (dir * step * wn / gn) * cur.grad;
            cand /= cand.norm();
            const RatioEval next = ratio(MS, BS, cand, p);
            record(next.value);
            if (dir * (next.value - cur.value) > 0.0) {
                w = cand;
                cur = next;
                improved = true;
                step = std::min(step * 2.0, 1.0);
                break;
            }
            step *= 0.5;
        }
        if (!improved) return;
    }
}

Extremes estimate_trial(const Matrix& M, const Matrix& B, Eigen::Index k, double p, std::uint64_t seed,
                        int polish_steps) {
    Rng rng(seed);
    const IndexSet S = rng.sample_indices(M.cols(), k);
    const Matrix MS = gather(M, S);
    const Matrix BS = gather(B, S);
    Vector w = rng.normal_vector(k);
    w /= w.norm();
    Extremes ex;
    polish(MS, BS, w, p, +1, polish_steps, ex);
    polish(MS, BS, w, p, -1, polish_steps, ex);
    return ex;
}

RipReport estimate_report(long long t, double p, long long trials, const Extremes& ex) {
    RipReport rep;
    rep.t = t;
    rep.p = p;
    rep.mode = RipMode::Estimated;
    rep.trials = trials;
    rep.alpha = std::sqrt(ex.lo2);
    rep.beta = std::sqrt(ex.hi2);
    rep.gamma = rep.alpha > 0.0 ? rep.beta / rep.alpha : kInf;
    return rep;
}

void check_estimate_inputs(const Matrix& A, const Matrix& B, long long t, double p, long long trials) {
    check_rip_inputs(A, B, t);
    if (!(p >= 1.0 && p <= 2.0)) throw PreconditionError("p must lie in [1, 2]");
    if (trials < 1) throw PreconditionError("trials must be >= 1");
}

}  // namespace

RipReport rip_estimate_serial(const Matrix& A, const Matrix& B, long long t, double p, long long trials,
                              std::uint64_t seed, int polish_steps) {
    check_estimate_inputs(A, B, t, p, trials);
    const Eigen::Index k = std::min<Eigen::Index>(t, A.cols());
    const Matrix M = A * B;
    Extremes total;
    for (long long i = 0; i < trials; ++i) {
        const Extremes ex = estimate_trial(M, B, k, p, mix_seed(seed, static_cast<std::uint64_t>(i)), polish_steps);
        total.lo2 = std::min(total.lo2, ex.lo2);
        total.hi2 = std::max(total.hi2, ex.hi2);
    }
    return estimate_report(t, p, trials, total);
}

RipReport rip_estimate(const Matrix& A, const Matrix& B, long long t, double p, long long trials, std::uint64_t seed,
                       int polish_steps) {
    check_estimate_inputs(A, B, t, p, trials);
    const Eigen::Index k = std::min<Eigen::Index>(t, A.cols());
    const Matrix M = A * B;
    double lo2 = kInf;
    double hi2 = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(min : lo2) reduction(max : hi2)
    for (long long i = 0; i < trials; ++i) {
        const Extremes ex = estimate_trial(M, B, k, p, mix_seed(seed, static_cast<std::uint64_t>(i)), polish_steps);
        lo2 = std::min(lo2, ex.lo2);
        hi2 = std::max(hi2, ex.hi2);
    }
    return estimate_report(t, p, trials, Extremes{lo2, hi2});
}

SelfConsistentRip self_consistent_exact_rip(const Matrix& A, const Matrix& B, double kappa, long long s, double c,
                                            long long budget) {
    if (s < 1) throw PreconditionError("s must be >= 1");
    long long t = 1;
    for (;;) {
        SelfConsistentRip out;
        out.rip = rip_exact_l2(A, B, t, budget);
        const double x = std::pow(c * out.rip.gamma * kappa, 2) * static_cast<double>(s);
        out.t_theorem = (std::isfinite(x) && x < 9e18) ? static_cast<long long>(std::floor(x)) + 1 : LLONG_MAX;
        if (out.t_theorem <= t || t >= A.cols()) return out;
        t = std::min<long long>(out.t_theorem, A.cols());
    }
}

InequalityCheck embed_inequality_check(const Vector& v, double p_prime, double p) {
    if (!(1.0 <= p_prime && p_prime <= p && p <= 2.0)) throw PreconditionError("need 1 <= p' <= p <= 2");
    InequalityCheck out;
    const double m = static_cast<double>(v.size());
    out.lhs = lp_norm(v, p_prime);
    out.rhs = std::pow(m, 1.0 / p_prime - 1.0 / p) * lp_norm(v, p);
    out.ok = out.lhs <= out.rhs * (1.0 + 1e-12);
    return out;
}

StechkinCheck stechkin_row_select(const Vector& v, double theta, double p, double p_prime) {
    if (!(1.0 <= p_prime && p_prime <= p && p <= 2.0)) throw PreconditionError("need 1 <= p' <= p <= 2");
    const auto m = v.size();
    const double tm = theta * static_cast<double>(m);
    if (!(theta > 0.0 && theta < 1.0) || tm < 1.0) throw PreconditionError("need theta in (0, 1) and theta m >= 1");
    const auto drop = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(std::ceil(tm * (1.0 - 1e-12))));
    IndexSet order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(v(a)) > std::abs(v(b));
    });
    StechkinCheck out;
    out.rows.assign(order.begin() + drop, order.end());
    std::sort(out.rows.begin(), out.rows.end());
    Vector kept(static_cast<Eigen::Index>(out.rows.size()));
    for (size_t a = 0; a < out.rows.size(); ++a) kept(static_cast<Eigen::Index>(a)) = v(out.rows[a]);
    out.lhs = lp_norm(kept, p);
    out.rhs = std::pow(tm, -(1.0 / p_prime - 1.0 / p)) * lp_norm(v, p_prime);
    out.ok = out.lhs <= out.rhs * (1.0 + 1e-12);
    return out;
}

double theta_root(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw PreconditionError("theta_root needs c > 0");
    auto f = [c](double th) { return c * (1.0 - th) - th * (1.0 - std::log(th)) - 0.5 * c; };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    if (lo == 0.0) return hi;
    return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

NspConstants nsp_constants_from_rip(const RipReport& rip, const OperatorNorms& norms, double rho, long long s) {
    if (!(rho > 0.0 && rho <= 1.0)) throw PreconditionError("rho must lie in (0, 1]");
    if (s < 1) throw PreconditionError("s must be >= 1");
    if (!(rip.alpha >= 0.0 && rip.beta >= rip.alpha)) throw PreconditionError("invalid RIP report");
    NspConstants out;
    out.nsp.rho = rho;
    out.nsp.s = s;
    const double sq = std::sqrt(static_cast<double>(s));
    out.nsp.tau = rip.alpha > 0.0 ? (1.0 + rho) * norms.norm_Binv * sq / rip.alpha : kInf;
    const double x = std::pow((1.0 + rho) * rip.gamma * norms.kappa_B / rho, 2) * static_cast<double>(s);
    if (std::isfinite(x) && x < 9e18) {
        out.t_ceil = static_cast<long long>(std::ceil(x));
        out.t_floor_plus_one = static_cast<long long>(std::floor(x)) + 1;
    } else {
        out.t_ceil = LLONG_MAX;
        out.t_floor_plus_one = LLONG_MAX;
    }
    out.t_required = std::max(out.t_ceil, out.t_floor_plus_one);
    out.applicable = rip.t >= out.t_required;
    return out;
}

namespace {

double nsp_margin(const Vector& u, const Vector& Av, const IndexSet& S, const NspParams& nsp, double p) {
    std::vector<char> in(static_cast<size_t>(u.size()), 0);
    for (auto j : S) in[static_cast<size_t>(j)] = 1;
    double on = 0.0;
    double off = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) (in[static_cast<size_t>(j)] ? on : off) += std::abs(u(j));
    const double noise = nsp.tau == 0.0 ? 0.0 : nsp.tau * std::sqrt(static_cast<double>(nsp.s)) * lp_norm(Av, p);
    return nsp.rho * off + noise - on;
}

IndexSet top_s(const Vector& u, long long s) {
    IndexSet order(static_cast<size_t>(u.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(u(a)) > std::abs(u(b));
    });
    order.resize(static_cast<size_t>(s));
    std::sort(order.begin(), order.end());
    return order;
}

struct Falsifier {
    const Matrix& A;
    const NspParams& nsp;
    double p;
    std::uint64_t seed;
    Eigen::ColPivHouseholderQR<Matrix> B_qr;
    Matrix null_basis;

    Falsifier(const Matrix& A_, const Matrix& B, const NspParams& nsp_, double p_, std::uint64_t seed_)
        : A(A_), nsp(nsp_), p(p_), seed(seed_), B_qr(B) {
        if (A.rows() < A.cols()) {
            Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            Eigen::Index rank = 0;
            while (rank < sv.size() && sv(rank) > 1e-12 * std::max(sv(0), 1e-300)) ++rank;
            null_basis = svd.matrixV().rightCols(A.cols() - rank);
        }
    }

    NspCounterexample candidate(long long k) const {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
        NspCounterexample out;
        out.candidate = k;
        if (k % 2 == 1 && null_basis.cols() > 0)
            out.v = null_basis * rng.normal_vector(null_basis.cols());
        else
            out.v = rng.normal_vector(A.cols());
        const Vector u = B_qr.solve(out.v);
        out.S = top_s(u, nsp.s);
        out.margin = nsp_margin(u, A * out.v, out.S, nsp, p);
        return out;
    }
};

void check_nsp_inputs(const Matrix& A, const Matrix& B, const NspParams& nsp, double p, long long budget) {
    if (B.rows() != A.cols() || B.cols() != A.cols()) throw DimensionError("B must be N x N");
    if (!(nsp.rho >= 0.0) || !(nsp.tau >= 0.0)) throw PreconditionError("rho and tau must be >= 0");
    if (nsp.s < 1 || nsp.s > A.cols()) throw PreconditionError("need 1 <= s <= N");
    if (!(p >= 1.0 && p <= 2.0)) throw PreconditionError("p must lie in [1, 2]");
    if (budget < 1) throw PreconditionError("budget must be >= 1");
}

}  // namespace

double nsp_check_vector(const Matrix& A, const Matrix& B, const Vector& v, const IndexSet& S, const NspParams& nsp,
                        double p) {
    if (B.rows() != A.cols() || B.cols() != A.cols()) throw DimensionError("B must be N x N");
    if (v.size() != A.cols()) throw DimensionError("v must have length N");
    if (static_cast<long long>(S.size()) != nsp.s) throw PreconditionError("|S| must equal s");
    std::vector<char> seen(static_cast<size_t>(A.cols()), 0);
    for (auto j : S) {
        if (j < 0 || j >= A.cols() || seen[static_cast<size_t>(j)]) throw PreconditionError("S must hold distinct indices in [0, N)");
        seen[static_cast<size_t>(j)] = 1;
    }
    const Vector u = B.colPivHouseholderQr().solve(v);
    return nsp_margin(u, A * v, S, nsp, p);
}

std::optional<NspCounterexample> nsp_falsify_serial(const Matrix& A, const Matrix& B, const NspParams& nsp, double p,
                                                    long long budget, std::uint64_t seed) {
    check_nsp_inputs(A, B, nsp, p, budget);
    const Falsifier f(A, B, nsp, p, seed);
    for (long long k = 0; k < budget; ++k) {
        NspCounterexample c = f.candidate(k);
        if (c.margin < 0.0) return c;
    }
    return std::nullopt;
}

std::optional<NspCounterexample> nsp_falsify(const Matrix& A, const Matrix& B, const NspParams& nsp, double p,
                                             long long budget, std::uint64_t seed) {
    check_nsp_inputs(A, B, nsp, p, budget);
    const Falsifier f(A, B, nsp, p, seed);
    constexpr long long kBlock = 4096;
    std::vector<double> margins;
    for (long long start = 0; start < budget; start += kBlock) {
        const long long n = std::min(kBlock, budget - start);
        margins.assign(static_cast<size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < n; ++i) margins[static_cast<size_t>(i)] = f.candidate(start + i).margin;
        for (long long i = 0; i < n; ++i)
            if (margins[static_cast<size_t>(i)] < 0.0) return f.candidate(start + i);
    }
    return std::nullopt;
}

}  // namespace lassolab

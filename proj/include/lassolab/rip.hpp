#pragma once

#include "lassolab/model.hpp"

#include <cstdint>
#include <optional>

namespace lassolab {

enum class RipMode { ExactL2, Estimated };

const char* to_string(RipMode m);

/// Constants of alpha ||z||_2 <= ||Az||_p <= beta ||z||_2 over z = Bw with
/// ||w||_0 <= t. In Estimated mode alpha is an upper bound and beta a lower
/// bound on the true constants, so gamma under-estimates the true ratio.
struct RipReport {
    long long t = 1;
    double p = 2.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = kInf;
    RipMode mode = RipMode::ExactL2;
    long long trials = 0;
    long long supports_enumerated = 0;
};

inline constexpr long long kDefaultSupportBudget = 2000000;

/// C(n, k), saturating at LLONG_MAX.
long long binomial(long long n, long long k);

/// Exact p = 2 constants by enumerating all supports of size min(t, N) in
/// lexicographic order; per support the extremes of the generalized Rayleigh
/// quotient |(AB)_S w|^2 / |B_S w|^2. Throws PreconditionError when the
/// number of supports exceeds the budget. Parallel over support ranges.
RipReport rip_exact_l2(const Matrix& A, const Matrix& B, long long t, long long budget = kDefaultSupportBudget);

/// Single-threaded reference for rip_exact_l2.
RipReport rip_exact_l2_serial(const Matrix& A, const Matrix& B, long long t,
                              long long budget = kDefaultSupportBudget);

/// Random supports and starting points, each polished by projected gradient
/// ascent and descent of |ABw|_p / |Bw|_2. Trial k uses Rng(mix_seed(seed, k)).
RipReport rip_estimate(const Matrix& A, const Matrix& B, long long t, double p, long long trials,
                       std::uint64_t seed, int polish_steps = 60);

RipReport rip_estimate_serial(const Matrix& A, const Matrix& B, long long t, double p, long long trials,
                              std::uint64_t seed, int polish_steps = 60);

/// Smallest t such that the exact constants at order t satisfy
/// t >= floor((c gamma_t kappa)^2 s) + 1, found by raising t from 1.
struct SelfConsistentRip {
    RipReport rip;
    long long t_theorem = 1;
};
SelfConsistentRip self_consistent_exact_rip(const Matrix& A, const Matrix& B, double kappa, long long s, double c,
                                            long long budget = kDefaultSupportBudget);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

/// ||v||_{p'} <= m^{1/p' - 1/p} ||v||_p.
InequalityCheck embed_inequality_check(const Vector& v, double p_prime, double p);

struct StechkinCheck {
    IndexSet rows;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

/// Drops the ceil(theta m) largest entries of v; ok when the rest has
/// ||v_I||_p <= (theta m)^{-(1/p' - 1/p)} ||v||_{p'}.
StechkinCheck stechkin_row_select(const Vector& v, double theta, double p, double p_prime);

/// Root in (0, 1) of c (1 - theta) - theta ln(e / theta) = c / 2.
double theta_root(double c);

struct NspParams {
    double rho = 1.0;
    double tau = 0.0;
    long long s = 1;
};

struct NspConstants {
    NspParams nsp;
    /// ceil(((1 + rho) gamma kappa / rho)^2 s)
    long long t_ceil = 1;
    /// floor(((1 + rho) gamma kappa / rho)^2 s) + 1
    long long t_floor_plus_one = 1;
    /// The larger of the two; the RIP order must reach it.
    long long t_required = 1;
    bool applicable = false;
};

NspConstants nsp_constants_from_rip(const RipReport& rip, const OperatorNorms& norms, double rho, long long s);

/// rho ||(B^{-1}v)_{S^c}||_1 + tau sqrt(s) ||Av||_p - ||(B^{-1}v)_S||_1.
double nsp_check_vector(const Matrix& A, const Matrix& B, const Vector& v, const IndexSet& S, const NspParams& nsp,
                        double p);

struct NspCounterexample {
    Vector v;
    IndexSet S;
    double margin = 0.0;
    long long candidate = 0;
};

/// Searches candidates v (even k: Gaussian, odd k: random null-space
/// combination of A when it has one) with S the s largest |(B^{-1}v)_j|
/// (ties to the lower index). Returns the counterexample with the lowest
/// candidate number, or nullopt. A nullopt result proves nothing.
std::optional<NspCounterexample> nsp_falsify(const Matrix& A, const Matrix& B, const NspParams& nsp, double p,
                                             long long budget, std::uint64_t seed);

std::optional<NspCounterexample> nsp_falsify_serial(const Matrix& A, const Matrix& B, const NspParams& nsp, double p,
                                                    long long budget, std::uint64_t seed);

}  // namespace lassolab

#include "lassolab/ensembles.hpp"

#include "lassolab/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace lassolab {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t k) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
    for (;;) {
        const double u = uniform();
        if (u > 0.0) return u;
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

double Rng::laplace() {
    const double u = uniform_open() - 0.5;
    return u < 0.0 ? std::log(1.0 + 2.0 * u) : -std::log(1.0 - 2.0 * u);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw PreconditionError("below(0)");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
        const std::uint64_t x = eng_();
        if (x < limit) return x % n;
    }
}

IndexSet Rng::sample_indices(Eigen::Index n, Eigen::Index k) {
    if (k < 0 || k > n) throw PreconditionError("sample_indices: need 0 <= k <= n");
    IndexSet pool(static_cast<size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto j = i + static_cast<Eigen::Index>(below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    pool.resize(static_cast<size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

Vector Rng::normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

const char* to_string(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::Gaussian: return "gaussian";
        case EnsembleKind::Rademacher: return "rademacher";
        case EnsembleKind::Laplace: return "laplace";
    }
    return "unknown";
}

EnsembleKind parse_ensemble_kind(const std::string& s) {
    if (s == "gaussian") return EnsembleKind::Gaussian;
    if (s == "rademacher") return EnsembleKind::Rademacher;
    if (s == "laplace") return EnsembleKind::Laplace;
    throw PreconditionError("unknown ensemble kind: " + s);
}

void EnsembleSpec::validate() const {
    if (m < 1 || N < 1) throw PreconditionError("ensemble dimensions must be >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw PreconditionError("ensemble scale must be > 0");
}

double default_scale(Eigen::Index m, double p) { return std::pow(static_cast<double>(m), -1.0 / p); }

Matrix generate_matrix(const EnsembleSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Matrix A(spec.m, spec.N);
    for (Eigen::Index i = 0; i < spec.m; ++i) {
        for (Eigen::Index j = 0; j < spec.N; ++j) {
            double v = 0.0;
            switch (spec.kind) {
                case EnsembleKind::Gaussian: v = rng.normal(); break;
                case EnsembleKind::Rademacher: v = (rng.next() >> 63) ? 1.0 : -1.0; break;
                case EnsembleKind::Laplace: v = rng.laplace(); break;
            }
            A(i, j) = spec.scale * v;
        }
    }
    return A;
}

namespace {

// Q factor of a Gaussian matrix with the signs fixed by diag(R) > 0.
Matrix random_orthogonal(Eigen::Index N, Rng& rng) {
    Matrix G(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < N; ++j)
        if (R(j, j) < 0.0) Q.col(j) *= -1.0;
    return Q;
}

}  // namespace

Matrix random_conditioned_B(Eigen::Index N, double kappa, std::uint64_t seed) {
    if (N < 1) throw PreconditionError("N must be >= 1");
    if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw PreconditionError("kappa must be finite and >= 1");
    if (N == 1 && kappa != 1.0) throw PreconditionError("a 1 x 1 dictionary has condition number 1");
    Rng rng(seed);
    const Matrix U = random_orthogonal(N, rng);
    const Matrix V = random_orthogonal(N, rng);
    Vector d(N);
    for (Eigen::Index i = 0; i < N; ++i)
        d(i) = N == 1 ? 1.0 : std::pow(kappa, static_cast<double>(i) / static_cast<double>(N - 1));
    return U * d.asDiagonal() * V.transpose();
}

const char* to_string(AmplitudeLaw a) { return a == AmplitudeLaw::RandomSign ? "sign" : "gaussian"; }

AmplitudeLaw parse_amplitude_law(const std::string& s) {
    if (s == "sign") return AmplitudeLaw::RandomSign;
    if (s == "gaussian") return AmplitudeLaw::Gaussian;
    throw PreconditionError("unknown amplitude law: " + s);
}

SparseTruth sparse_ground_truth(Eigen::Index N, Eigen::Index s, const Matrix& B, AmplitudeLaw law,
                                std::uint64_t seed) {
    if (!(s >= 1 && s <= N)) throw PreconditionError("need 1 <= s <= N");
    if (B.rows() != N || B.cols() != N) throw DimensionError("B must be N x N");
    Rng rng(seed);
    SparseTruth out;
    out.support = rng.sample_indices(N, s);
    out.w = Vector::Zero(N);
    for (auto j : out.support) {
        double v = 0.0;
        if (law == AmplitudeLaw::RandomSign) {
            v = (rng.next() >> 63) ? 1.0 : -1.0;
        } else {
            while (v == 0.0) v = rng.normal();
        }
        out.w(j) = v;
    }
    out.x = B * out.w;
    return out;
}

NoisyObservation calibrated_noise(const Matrix& A, const Vector& x, double p, double ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio <= 1.0 / 3.0)) throw PreconditionError("noise ratio must lie in [0, 1/3]");
    if (!(p >= 1.0)) throw PreconditionError("p must be >= 1");
    if (x.size() != A.cols()) throw DimensionError("x must have length cols(A)");
    const Vector Ax = A * x;
    NoisyObservation out;
    out.e = Vector::Zero(A.rows());
    const double ax = lp_norm(Ax, p);
    if (ratio == 0.0 || ax == 0.0) {
        out.y = Ax;
        return out;
    }
    Rng rng(seed);
    const Vector d = rng.normal_vector(A.rows());
    const double dn = lp_norm(d, p);
    auto h = [&](double sigma) { return sigma * dn - ratio * lp_norm(Ax + sigma * d, p); };
    double lo = 0.0;
    double hi = ratio * ax / (1.0 - ratio) / dn;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (h(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double sigma = std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
    out.e = sigma * d;
    out.y = Ax + out.e;
    return out;
}

}  // namespace lassolab

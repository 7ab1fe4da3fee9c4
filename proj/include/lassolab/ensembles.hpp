#pragma once

#include "lassolab/model.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace lassolab {

/// splitmix64 finalizer applied to base + golden * (k + 1). Trial k of a
/// campaign with base seed b draws from Rng(mix_seed(b, k)).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t k);

/// Seeded stream on top of std::mt19937_64. The variate transforms are written
/// out here instead of using <random> distributions, whose output is
/// implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    /// (x >> 11) * 2^-53, in [0, 1).
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    /// Box-Muller; the second variate of each pair is cached.
    double normal();
    /// Standard Laplace (density exp(-|x|) / 2) by inverse CDF.
    double laplace();
    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);
    /// k distinct indices from [0, n), ascending (partial Fisher-Yates).
    IndexSet sample_indices(Eigen::Index n, Eigen::Index k);
    Vector normal_vector(Eigen::Index n);

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

enum class EnsembleKind { Gaussian, Rademacher, Laplace };

const char* to_string(EnsembleKind k);
EnsembleKind parse_ensemble_kind(const std::string& s);

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::Gaussian;
    Eigen::Index m = 1;
    Eigen::Index N = 1;
    double scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// m^{-1/p}: 1/sqrt(m) for p = 2 and 1/m for p = 1.
double default_scale(Eigen::Index m, double p);

/// I.i.d. entries times scale, drawn in row-major order.
Matrix generate_matrix(const EnsembleSpec& spec);

/// U diag(d) V^T with U, V orthogonal and d log-spaced from 1 to kappa.
Matrix random_conditioned_B(Eigen::Index N, double kappa, std::uint64_t seed);

enum class AmplitudeLaw { RandomSign, Gaussian };

const char* to_string(AmplitudeLaw a);
AmplitudeLaw parse_amplitude_law(const std::string& s);

struct SparseTruth {
    Vector x;  // B w
    Vector w;  // exactly s nonzeros
    IndexSet support;
};

SparseTruth sparse_ground_truth(Eigen::Index N, Eigen::Index s, const Matrix& B, AmplitudeLaw law, std::uint64_t seed);

struct NoisyObservation {
    Vector e;
    Vector y;
};

/// e = sigma d for a Gaussian direction d, with sigma chosen by bisection so
/// that ||e||_p = ratio ||Ax + e||_p. Requires 0 <= ratio <= 1/3.
NoisyObservation calibrated_noise(const Matrix& A, const Vector& x, double p, double ratio, std::uint64_t seed);

}  // namespace lassolab

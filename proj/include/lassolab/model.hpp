#pragma once

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lassolab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexSet = std::vector<Eigen::Index>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Default relative threshold below which an entry counts as zero.
inline constexpr double kDefaultEta = 1e-6;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Exponents and regularization weight of one program
///   min_z (1/q)||y - Az||_p^q + (lambda/r)||B^{-1} z||_1^r.
struct ProblemParams {
    double p = 2.0;
    double q = 2.0;
    double r = 1.0;
    double lambda = 1.0;

    /// Throws PreconditionError unless 1 <= p <= 2, q >= 1, r >= 1, lambda >= 0.
    void validate() const;
    /// Same as validate() and additionally requires lambda > 0.
    void validate_positive_lambda() const;
};

/// Measurement matrix A (m x N), invertible dictionary B (N x N) and
/// observation y (m). Immutable; copies share the underlying storage.
class ProblemInstance {
public:
    /// B defaults to the identity. Throws DimensionError on shape mismatch
    /// and PreconditionError when sigma_min(B) <= 1e-10 * ||B||.
    ProblemInstance(Matrix A, Vector y);
    ProblemInstance(Matrix A, Matrix B, Vector y);

    [[nodiscard]] Eigen::Index rows() const { return data_->A.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return data_->A.cols(); }

    [[nodiscard]] const Matrix& A() const { return data_->A; }
    [[nodiscard]] const Matrix& B() const { return data_->B; }
    [[nodiscard]] const Vector& y() const { return data_->y; }
    /// A * B, the measurement matrix in B^{-1} coordinates.
    [[nodiscard]] const Matrix& M() const { return data_->M; }
    [[nodiscard]] bool identity_dictionary() const { return data_->identity; }

    [[nodiscard]] Vector apply_B(const Vector& w) const;
    [[nodiscard]] Vector apply_Binv(const Vector& z) const;

    [[nodiscard]] double norm_B() const { return data_->norm_B; }
    [[nodiscard]] double norm_Binv() const { return data_->norm_Binv; }

    /// Same A and B, different observation.
    [[nodiscard]] ProblemInstance with_observation(Vector y) const;

private:
    struct Data {
        Matrix A;
        Matrix B;
        Vector y;
        Matrix M;
        Eigen::ColPivHouseholderQR<Matrix> B_qr;
        bool identity = false;
        double norm_B = 1.0;
        double norm_Binv = 1.0;
    };
    explicit ProblemInstance(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
    std::shared_ptr<const Data> data_;
};

struct GroundTruth {
    Vector x;
    Vector e;
    int s = 0;
};

struct Solution {
    Vector z;
    double objective = 0.0;
    IndexSet support;       // of B^{-1} z after thresholding
    int iterations = 0;
    double kkt_residual = kInf;
    bool certified = false;
};

struct OperatorNorms {
    double norm_B = 1.0;
    double norm_Binv = 1.0;
    double kappa_B = 1.0;
};

/// Spectral norms of B and B^{-1} via SVD.
OperatorNorms operator_norms(const Matrix& B);
inline OperatorNorms operator_norms(const ProblemInstance& inst) {
    return {inst.norm_B(), inst.norm_Binv(), inst.norm_B() * inst.norm_Binv()};
}

struct TheoremBounds {
    double chi = 0.0;
    long long sparsity_cap = 0;
    long long t = 1;
    double lambda_star = 0.0;
    bool lambda_star_infinite = false;
};

double objective_value(const ProblemParams& params, const ProblemInstance& inst, const Vector& z);

/// Objective in B^{-1} coordinates: (1/q)||y - Mw||_p^q + (lambda/r)||w||_1^r.
double objective_in_coefficients(const ProblemParams& params, const ProblemInstance& inst, const Vector& w);

/// { j : |v_j| > eta * ||v||_inf }, 0-based and ascending.
IndexSet support(const Vector& v, double eta = kDefaultEta);

TheoremBounds theorem_bounds(const OperatorNorms& norms, double gamma, long long s, bool noisy,
                             const ProblemParams& params, double beta, double e_norm);

}  // namespace lassolab

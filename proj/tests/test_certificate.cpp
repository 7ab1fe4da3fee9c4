#include "doctest.h"

#include "lassolab/certificate.hpp"
#include "lassolab/prox.hpp"
#include "lassolab/solver.hpp"

#include <cmath>
#include <random>

using namespace lassolab;

namespace {

Matrix gaussian(std::mt19937_64& g, Eigen::Index m, Eigen::Index n) {
    std::normal_distribution<double> d;
    Matrix A(m, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = d(g);
    return A;
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_SUITE("certificate") {

TEST_CASE("nu_lambda examples") {
    const ProblemInstance inst(Matrix::Identity(2, 2), Vector::Ones(2));
    Vector z(2);
    z << 0.25, -0.5;
    CHECK(nu_lambda(ProblemParams{2, 2, 1, 0.7}, inst, z) == doctest::Approx(0.7));
    const double res = (Vector::Ones(2) - z).norm();
    CHECK(nu_lambda(ProblemParams{2, 1, 1, 0.7}, inst, z) == doctest::Approx(0.7 * res));
    CHECK(nu_lambda(ProblemParams{2, 2, 2, 0.7}, inst, z) == doctest::Approx(0.7 * 0.75));
}

TEST_CASE("nu_lambda conventions") {
    const ProblemInstance inst(Matrix::Identity(2, 2), Vector::Ones(2));
    // zero residual with q = p: 0^0 = 1
    CHECK(nu_lambda(ProblemParams{2, 2, 1, 0.5}, inst, Vector::Ones(2)) == doctest::Approx(0.5));
    // zero residual with q > p: negative exponent
    CHECK(std::isinf(nu_lambda(ProblemParams{1.5, 2, 1, 0.5}, inst, Vector::Ones(2))));
    // z = 0 with r > 1: nu vanishes
    CHECK(nu_lambda(ProblemParams{2, 2, 2, 0.5}, inst, Vector::Zero(2)) == 0.0);
}

TEST_CASE("check_stationarity scalar examples") {
    const ProblemInstance inst(Matrix::Identity(1, 1), scalar(1.0));
    const ProblemParams params{2, 2, 1, 0.3};
    const auto good = check_stationarity(params, inst, scalar(0.7));
    CHECK(good.passed);
    CHECK(good.variant == CertificateVariant::Characterization);
    CHECK(good.S_lambda == IndexSet{0});
    CHECK(good.nu_lambda == doctest::Approx(0.3));

    const auto bad = check_stationarity(params, inst, scalar(0.5));
    CHECK_FALSE(bad.passed);
    CHECK(bad.eq_violation == doctest::Approx(0.2));
    CHECK(bad.reason == "violation");
}

TEST_CASE("zero passes above the threshold") {
    std::mt19937_64 g(21);
    for (double p : {1.0, 1.5, 2.0}) {
        for (double q : {1.0, 2.0}) {
            const ProblemInstance inst(gaussian(g, 6, 9), gaussian(g, 6, 1).col(0));
            ProblemParams params{p, q, 1.0, 1.0};
            const double thr = zero_solution_threshold(params, inst);
            params.lambda = thr * 1.001;
            const auto cert = check_stationarity(params, inst, Vector::Zero(9));
            CHECK(cert.passed);
            CHECK(cert.S_lambda.empty());
            params.lambda = thr * 0.9;
            CHECK_FALSE(check_stationarity(params, inst, Vector::Zero(9)).passed);
        }
    }
}

TEST_CASE("zero_solution_threshold examples") {
    std::mt19937_64 g(22);
    const Matrix A = gaussian(g, 5, 7);
    const Vector y = gaussian(g, 5, 1).col(0);
    CHECK(zero_solution_threshold(ProblemParams{2, 2, 1, 1}, ProblemInstance(A, y)) ==
          doctest::Approx((A.transpose() * y).lpNorm<Eigen::Infinity>()));
    CHECK(zero_solution_threshold(ProblemParams{2, 2, 1, 1}, ProblemInstance(Matrix::Identity(1, 1), scalar(1))) ==
          doctest::Approx(1.0));
    Vector y2(2);
    y2 << 1.0, -1.0;
    CHECK(zero_solution_threshold(ProblemParams{1, 1, 1, 1}, ProblemInstance(Matrix::Identity(2, 2), y2)) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(zero_solution_threshold(ProblemParams{2, 2, 2, 1}, ProblemInstance(A, y)), PreconditionError);
    CHECK_THROWS_AS(zero_solution_threshold(ProblemParams{2, 2, 1, 1}, ProblemInstance(A, Vector::Zero(5))),
                    PreconditionError);
}

TEST_CASE("infinite nu fails with a reason") {
    const ProblemInstance inst(Matrix::Identity(2, 2), Vector::Ones(2));
    const auto cert = check_stationarity(ProblemParams{1.5, 2, 1, 0.5}, inst, Vector::Ones(2));
    CHECK_FALSE(cert.passed);
    CHECK(cert.reason == "nu_infinite");
    CHECK(std::isinf(cert.kkt_residual()));
}

TEST_CASE("p = 1 uses the free multiplier variant") {
    // LAD: y = (1, 1, 5), A = ones column; the median 1 is optimal for small lambda
    Matrix A = Matrix::Ones(3, 1);
    Vector y(3);
    y << 1.0, 1.0, 5.0;
    const ProblemInstance inst(A, y);
    const auto cert = check_stationarity(ProblemParams{1, 1, 1, 0.1}, inst, scalar(1.0));
    CHECK(cert.variant == CertificateVariant::FreeMultiplier);
    CHECK(cert.passed);
    CHECK_FALSE(check_stationarity(ProblemParams{1, 1, 1, 0.1}, inst, scalar(2.0)).passed);
}

TEST_CASE("dual ball variant at zero residual with q < p") {
    // square-root LASSO with an interpolating minimizer
    const ProblemInstance inst(Matrix::Identity(2, 2), Vector::Constant(2, 3.0));
    const auto cert = check_stationarity(ProblemParams{2, 1, 1, 0.1}, inst, Vector::Constant(2, 3.0));
    CHECK(cert.variant == CertificateVariant::DualBall);
    CHECK(cert.passed);
    // lambda too large for the interpolant: ||c||_2 cannot stay in the ball
    CHECK_FALSE(check_stationarity(ProblemParams{2, 1, 1, 2.0}, inst, Vector::Constant(2, 3.0)).passed);
}

TEST_CASE("trivial variant for zero data") {
    const ProblemInstance inst(Matrix::Identity(2, 2), Vector::Zero(2));
    const auto cert = check_stationarity(ProblemParams{1.5, 2, 2, 1.0}, inst, Vector::Zero(2));
    CHECK(cert.variant == CertificateVariant::Trivial);
    CHECK(cert.passed);
}

TEST_CASE("coefficient form agrees with the z form") {
    std::mt19937_64 g(23);
    const Matrix A = gaussian(g, 6, 5);
    const Matrix B = gaussian(g, 5, 5) + 3.0 * Matrix::Identity(5, 5);
    const ProblemInstance inst(A, B, gaussian(g, 6, 1).col(0));
    const Vector w = gaussian(g, 5, 1).col(0);
    const ProblemParams params{1.5, 2, 1, 0.4};
    const auto a = check_stationarity(params, inst, B * w);
    const auto b = check_stationarity_coefficients(params, inst, w);
    CHECK(a.nu_lambda == doctest::Approx(b.nu_lambda));
    CHECK(a.eq_violation == doctest::Approx(b.eq_violation).epsilon(1e-8));
    CHECK(a.ineq_violation == doctest::Approx(b.ineq_violation).epsilon(1e-8));
}

TEST_CASE("soundness on coordinate descent outputs") {
    std::mt19937_64 g(24);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    int passed = 0;
    for (int k = 0; k < 100; ++k) {
        const ProblemInstance inst(gaussian(g, 10, 20), gaussian(g, 10, 1).col(0));
        const double thr = zero_solution_threshold(ProblemParams{2, 2, 1, 1}, inst);
        const double lambda = thr * std::pow(10.0, u(g));
        const auto sol = coordinate_descent_lasso(inst, lambda);
        CertificateOptions opts;
        opts.tol = 1e-6;
        if (check_stationarity(ProblemParams{2, 2, 1, lambda}, inst, sol.z, opts).passed) ++passed;
    }
    CHECK(passed == 100);
}

TEST_CASE("perturbations of certified solutions fail") {
    std::mt19937_64 g(25);
    std::uniform_real_distribution<double> u(-2.0, -0.3);
    int failed = 0;
    int trials = 0;
    while (trials < 100) {
        const ProblemInstance inst(gaussian(g, 10, 20), gaussian(g, 10, 1).col(0));
        const double thr = zero_solution_threshold(ProblemParams{2, 2, 1, 1}, inst);
        const ProblemParams params{2, 2, 1, thr * std::pow(10.0, u(g))};
        const auto sol = coordinate_descent_lasso(inst, params.lambda);
        if (sol.z.norm() == 0.0 || !check_stationarity(params, inst, sol.z).passed) continue;
        Vector d = gaussian(g, 20, 1).col(0);
        d *= 1e-2 * sol.z.norm() / d.norm();
        if (!check_stationarity(params, inst, sol.z + d).passed) ++failed;
        ++trials;
    }
    CHECK(failed >= 95);
}

TEST_CASE("supports larger than m admit an equal-objective direction") {
    std::mt19937_64 g(26);
    int exercised = 0;
    for (int k = 0; k < 20; ++k) {
        // duplicating every column keeps the optimum and lets the mass split
        const Matrix A0 = gaussian(g, 4, 6);
        Matrix A(4, 12);
        A << A0, A0;
        const Vector y = gaussian(g, 4, 1).col(0);
        const ProblemInstance inst0(A0, y);
        const double lambda = 0.05 * zero_solution_threshold(ProblemParams{2, 2, 1, 1}, inst0);
        const auto sol0 = coordinate_descent_lasso(inst0, lambda);
        Vector z(12);
        z << sol0.z / 2.0, sol0.z / 2.0;
        const ProblemInstance inst(A, y);
        const ProblemParams params{2, 2, 1, lambda};
        const auto cert = check_stationarity(params, inst, z);
        REQUIRE(cert.passed);
        const auto m = static_cast<size_t>(A.rows());
        if (cert.S_lambda.size() <= m) continue;
        ++exercised;

        Matrix MS(4, static_cast<Eigen::Index>(cert.S_lambda.size()));
        for (size_t j = 0; j < cert.S_lambda.size(); ++j) MS.col(static_cast<Eigen::Index>(j)) = A.col(cert.S_lambda[j]);
        const Matrix kernel = Eigen::FullPivLU<Matrix>(MS).kernel();
        REQUIRE(kernel.cols() > 0);
        Vector v = Vector::Zero(12);
        for (size_t j = 0; j < cert.S_lambda.size(); ++j) v(cert.S_lambda[j]) = kernel(static_cast<Eigen::Index>(j), 0);
        CHECK((A * v).norm() < 1e-10);

        // along v the l1 norm is affine; moving both ways keeps the sum, so
        // one of the two directions preserves it when signs are fixed
        double minabs = kInf;
        for (auto j : cert.S_lambda) minabs = std::min(minabs, std::abs(z(j)));
        const double t = 0.1 * minabs / v.lpNorm<Eigen::Infinity>();
        const double slope = (z.cwiseSign().array() * v.array()).sum();
        const double f = objective_value(params, inst, z);
        if (std::abs(slope) < 1e-12) {
            CHECK(std::abs(objective_value(params, inst, z + t * v) - f) <= 1e-10 * (1 + f));
        } else {
            // a minimizer cannot have a strict descent direction
            CHECK(std::abs(slope) < 1e-8);
        }
    }
    CHECK(exercised > 0);
}

}

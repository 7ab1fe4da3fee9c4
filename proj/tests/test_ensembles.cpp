#include "doctest.h"

#include "lassolab/ensembles.hpp"
#include "lassolab/prox.hpp"

#include <cmath>
#include <set>

using namespace lassolab;

TEST_SUITE("ensembles") {

TEST_CASE("generator reference outputs") {
    // the 10000th output of a default-seeded 64-bit Mersenne Twister
    std::mt19937_64 ref;
    ref.discard(9999);
    CHECK(ref() == 9981545732273789042ULL);
    Rng rng(5489);
    for (int i = 0; i < 9999; ++i) (void)rng.next();
    CHECK(rng.next() == 9981545732273789042ULL);

    // published splitmix64 stream from state 0
    CHECK(mix_seed(0, 0) == 0xE220A8397B1DCDAFULL);
    CHECK(mix_seed(0, 1) == 0x6E789E6AA1B965F4ULL);
    CHECK(mix_seed(0, 2) == 0x06C45D188009454FULL);
}

TEST_CASE("derived seeds are distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 10000; ++k) seen.insert(mix_seed(42, k));
    CHECK(seen.size() == 10000);
}

TEST_CASE("variate ranges and moments") {
    Rng rng(9);
    double su = 0, sn = 0, sn2 = 0, sl = 0, sl2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK_UNARY(u >= 0.0 && u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        const double l = rng.laplace();
        sl += l;
        sl2 += l * l;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(sl / n) < 0.02);
    CHECK(sl2 / n == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("below and sample_indices") {
    Rng rng(10);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
    for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
    for (int k = 0; k < 100; ++k) {
        const auto idx = rng.sample_indices(20, 6);
        CHECK(idx.size() == 6);
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        CHECK(idx.back() < 20);
    }
    CHECK(rng.sample_indices(5, 5) == IndexSet{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(rng.sample_indices(3, 4), PreconditionError);
}

TEST_CASE("kind names round trip") {
    for (auto k : {EnsembleKind::Gaussian, EnsembleKind::Rademacher, EnsembleKind::Laplace})
        CHECK(parse_ensemble_kind(to_string(k)) == k);
    for (auto a : {AmplitudeLaw::RandomSign, AmplitudeLaw::Gaussian}) CHECK(parse_amplitude_law(to_string(a)) == a);
    CHECK_THROWS_AS(parse_ensemble_kind("bernoulli"), PreconditionError);
}

TEST_CASE("generate_matrix is deterministic") {
    for (auto kind : {EnsembleKind::Gaussian, EnsembleKind::Rademacher, EnsembleKind::Laplace}) {
        const EnsembleSpec spec{kind, 7, 11, 0.3, 99};
        CHECK(generate_matrix(spec) == generate_matrix(spec));
        EnsembleSpec other = spec;
        other.seed = 100;
        CHECK_FALSE(generate_matrix(spec) == generate_matrix(other));
    }
}

TEST_CASE("rademacher entries are plus or minus scale") {
    const Matrix A = generate_matrix(EnsembleSpec{EnsembleKind::Rademacher, 30, 40, 0.25, 3});
    int pos = 0;
    for (Eigen::Index i = 0; i < A.size(); ++i) {
        CHECK_UNARY(A(i) == 0.25 || A(i) == -0.25);
        pos += A(i) > 0;
    }
    CHECK(pos == doctest::Approx(600).epsilon(0.1));
}

TEST_CASE("gaussian column norms concentrate") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double scale = default_scale(2000, 2.0);
        const Matrix A = generate_matrix(EnsembleSpec{EnsembleKind::Gaussian, 2000, 1, scale, seed});
        CHECK(std::abs(A.col(0).norm() - scale * std::sqrt(2000.0)) <= 0.05 * scale * std::sqrt(2000.0));
    }
    CHECK(default_scale(100, 1.0) == doctest::Approx(0.01));
    CHECK(default_scale(100, 2.0) == doctest::Approx(0.1));
}

TEST_CASE("EnsembleSpec validation") {
    CHECK_THROWS_AS((EnsembleSpec{EnsembleKind::Gaussian, 3, 3, 0.0, 1}.validate()), PreconditionError);
    CHECK_THROWS_AS((EnsembleSpec{EnsembleKind::Gaussian, 0, 3, 1.0, 1}.validate()), PreconditionError);
}

TEST_CASE("conditioned dictionaries") {
    const Matrix Q = random_conditioned_B(6, 1.0, 4);
    CHECK((Q.transpose() * Q - Matrix::Identity(6, 6)).norm() < 1e-12);
    for (double kappa : {1.5, 10.0, 1000.0}) {
        const Matrix B = random_conditioned_B(5, kappa, 7);
        const Vector sv = Eigen::JacobiSVD<Matrix>(B).singularValues();
        CHECK(sv.maxCoeff() / sv.minCoeff() == doctest::Approx(kappa).epsilon(1e-10));
        CHECK(sv.maxCoeff() == doctest::Approx(kappa).epsilon(1e-10));
        CHECK(sv.minCoeff() == doctest::Approx(1.0).epsilon(1e-10));
        const auto n = operator_norms(B);
        CHECK(n.norm_B == doctest::Approx(kappa));
        CHECK(n.norm_Binv == doctest::Approx(1.0));
    }
    CHECK(random_conditioned_B(5, 3.0, 7) == random_conditioned_B(5, 3.0, 7));
    CHECK_THROWS_AS(random_conditioned_B(5, 0.5, 7), PreconditionError);
}

TEST_CASE("sparse ground truth") {
    const Matrix B = random_conditioned_B(12, 4.0, 2);
    for (auto law : {AmplitudeLaw::RandomSign, AmplitudeLaw::Gaussian}) {
        for (Eigen::Index s : {1, 5, 12}) {
            const auto t = sparse_ground_truth(12, s, B, law, 11);
            CHECK(static_cast<Eigen::Index>(support(t.w, 0.0).size()) == s);
            CHECK(t.support == support(t.w, 0.0));
            const ProblemInstance inst(Matrix::Identity(1, 12), B, Vector::Zero(1));
            CHECK((inst.apply_Binv(t.x) - t.w).lpNorm<Eigen::Infinity>() <= 1e-10);
            if (law == AmplitudeLaw::RandomSign)
                for (auto j : t.support) CHECK(std::abs(t.w(j)) == 1.0);
        }
    }
    const auto id = sparse_ground_truth(9, 4, Matrix::Identity(9, 9), AmplitudeLaw::Gaussian, 1);
    CHECK(id.x == id.w);
    CHECK_THROWS_AS(sparse_ground_truth(9, 10, Matrix::Identity(9, 9), AmplitudeLaw::Gaussian, 1), PreconditionError);
}

TEST_CASE("calibrated noise hits the ratio") {
    const Matrix A = generate_matrix(EnsembleSpec{EnsembleKind::Gaussian, 20, 30, 0.2, 5});
    const auto truth = sparse_ground_truth(30, 3, Matrix::Identity(30, 30), AmplitudeLaw::RandomSign, 6);
    for (double p : {1.0, 1.5, 2.0}) {
        const auto zero = calibrated_noise(A, truth.x, p, 0.0, 1);
        CHECK(zero.e.norm() == 0.0);
        CHECK((zero.y - A * truth.x).norm() == 0.0);
        for (double ratio : {0.01, 0.1, 0.2, 1.0 / 3.0}) {
            const auto obs = calibrated_noise(A, truth.x, p, ratio, 2);
            const double yn = lp_norm(obs.y, p);
            CHECK(std::abs(lp_norm(obs.e, p) - ratio * yn) <= 1e-10 * yn);
            CHECK((obs.y - A * truth.x - obs.e).norm() <= 1e-14 * obs.y.norm());
        }
    }
    CHECK_THROWS_AS(calibrated_noise(A, truth.x, 2.0, 0.34, 1), PreconditionError);
}

TEST_CASE("calibrated noise agrees with an independent root of the scalar equation") {
    const Matrix A = generate_matrix(EnsembleSpec{EnsembleKind::Laplace, 15, 10, 0.1, 8});
    const auto truth = sparse_ground_truth(10, 2, Matrix::Identity(10, 10), AmplitudeLaw::Gaussian, 9);
    const Vector Ax = A * truth.x;
    for (double p : {1.0, 2.0}) {
        const auto obs = calibrated_noise(A, truth.x, p, 1.0 / 3.0, 4);
        const Vector d = obs.e / obs.e.norm();
        // secant iteration on ||s d||_p - (1/3)||Ax + s d||_p
        auto f = [&](double s) { return lp_norm(s * d, p) - lp_norm(Ax + s * d, p) / 3.0; };
        double a = 0.0, b = lp_norm(Ax, p) / lp_norm(d, p);
        for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * b; ++it) {
            const double c = b - f(b) * (b - a) / (f(b) - f(a));
            a = b;
            b = c;
        }
        CHECK(obs.e.norm() == doctest::Approx(b).epsilon(1e-9));
    }
}

}

#include "lassolab/certificate.hpp"
#include "lassolab/harness.hpp"
#include "lassolab/prox.hpp"
#include "lassolab/rip.hpp"
#include "lassolab/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace lassolab;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Matrix gaussian(std::mt19937_64& g, Eigen::Index m, Eigen::Index n) {
    std::normal_distribution<double> d;
    Matrix A(m, n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = d(g);
    return A;
}

Vector gaussian_vector(std::mt19937_64& g, Eigen::Index n) { return gaussian(g, n, 1).col(0); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Tally {
    long long records = 0;
    long long certified = 0;
    long long failures = 0;
    long long unresolved = 0;
    long long hypothesis_met = 0;
    long long max_support = 0;
    long long min_cap = LLONG_MAX;
};

Tally tally(const ExperimentReport& rep) {
    Tally t;
    for (const auto& r : rep.records) {
        ++t.records;
        if (r.hypothesis_met) ++t.hypothesis_met;
        if (r.check == "unresolved") ++t.unresolved;
        if (!r.certified) continue;
        ++t.certified;
        if (!r.pass || r.check == "violation") ++t.failures;
        t.max_support = std::max(t.max_support, r.support_binv);
        t.min_cap = std::min(t.min_cap, r.sparsity_cap);
    }
    return t;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 g(1001);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    int obj_ok = 0, supp_ok = 0;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const ProblemInstance inst(gaussian(g, 20, 40), gaussian_vector(g, 20));
        const double thr = zero_solution_threshold(ProblemParams{2, 2, 1, 1}, inst);
        const ProblemParams params{2, 2, 1, thr * std::pow(10.0, u(g))};
        const auto ours = solve(params, inst);
        const auto ref = coordinate_descent_lasso(inst, params.lambda);
        const double fo = objective_value(params, inst, ours.z);
        const double fr = objective_value(params, inst, ref.z);
        const double rel = std::abs(fo - fr) / std::abs(fr);
        worst = std::max(worst, rel);
        if (rel <= 1e-8) ++obj_ok;
        if (ours.support == support(ref.z)) ++supp_ok;
    }
    const double secs = seconds_since(t0);
    return {obj_ok == 50 && supp_ok == 50 && secs <= 60.0,
            fmt("objective %d/50 (worst rel %.2e), support %d/50, %.1fs", obj_ok, worst, supp_ok, secs)};
}

Outcome certificate_suite() {
    std::mt19937_64 g(1002);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    int sound = 0;
    for (int k = 0; k < 100; ++k) {
        const ProblemInstance inst(gaussian(g, 20, 40), gaussian_vector(g, 20));
        const double thr = zero_solution_threshold(ProblemParams{2, 2, 1, 1}, inst);
        const ProblemParams params{2, 2, 1, thr * std::pow(10.0, u(g))};
        const auto ref = coordinate_descent_lasso(inst, params.lambda);
        CertificateOptions opts;
        opts.tol = 1e-6;
        if (check_stationarity(params, inst, ref.z, opts).passed) ++sound;
    }
    int rejected = 0, trials = 0;
    while (trials < 100) {
        const ProblemInstance inst(gaussian(g, 20, 40), gaussian_vector(g, 20));
        const double thr = zero_solution_threshold(ProblemParams{2, 2, 1, 1}, inst);
        const ProblemParams params{2, 2, 1, thr * std::pow(10.0, u(g))};
        const auto ref = coordinate_descent_lasso(inst, params.lambda);
        if (ref.z.norm() == 0.0) continue;
        Vector d = gaussian_vector(g, 40);
        d *= 1e-2 * ref.z.norm() / d.norm();
        if (!check_stationarity(params, inst, ref.z + d).passed) ++rejected;
        ++trials;
    }
    return {sound == 100 && rejected >= 95, fmt("oracle outputs certified %d/100, perturbations rejected %d/100", sound, rejected)};
}

json exact_theorem_config(const char* experiment, Eigen::Index m, Eigen::Index N) {
    return json{{"experiment", experiment},
                {"params", json::array({{{"p", 2}, {"q", 2}, {"r", 1}}})},
                {"dims", {{"m", m}, {"N", N}, {"s", 1}}},
                {"kappa", 1.5},
                {"lambda_grid", {{"relative_to", "threshold"}, {"lo", 1e-3}, {"hi", 1.0}, {"points", 20}}},
                {"rip", {{"mode", "exact"}}},
                {"trials", 20},
                {"base_seed", 3}};
}

Outcome theorem1_exact() {
    const auto t0 = std::chrono::steady_clock::now();
    // literal reading: exact constants at order 4 on N = 12
    json lit = exact_theorem_config("thm1", 60, 12);
    lit["rip"]["t"] = 4;
    const auto a = tally(run_experiment(ExperimentConfig::from_json(lit)));
    // the order raised until it reaches the theorem's own t (capped at N)
    const auto b = tally(run_experiment(ExperimentConfig::from_json(exact_theorem_config("thm1", 60, 12))));
    const double secs = seconds_since(t0);
    const bool ok = a.certified > 0 && b.certified > 0 && a.failures == 0 && b.failures == 0 && secs <= 300.0;
    return {ok, fmt("t=4: %lld/%lld certified, %lld over cap, hypothesis met %lld; self-consistent t: %lld/%lld "
                    "certified, %lld over cap, hypothesis met %lld; max support %lld, min cap %lld; %.1fs",
                    a.certified, a.records, a.failures, a.hypothesis_met, b.certified, b.records, b.failures,
                    b.hypothesis_met, std::max(a.max_support, b.max_support), std::min(a.min_cap, b.min_cap), secs)};
}

Outcome theorem2_exact() {
    Tally total;
    long long runs = 0;
    for (double ratio : {0.1, 1.0 / 3.0}) {
        for (bool literal : {true, false}) {
            json j = exact_theorem_config("thm2", 60, 12);
            j["params"] = json::array({{{"p", 2}, {"q", 2}, {"r", 1}}, {{"p", 2}, {"q", 1}, {"r", 1}},
                                       {{"p", 2}, {"q", 2}, {"r", 2}}});
            j["noise_ratio"] = ratio;
            j["lambda_grid"] = {{"relative_to", "lambda_star"}, {"lo", 1.0}, {"hi", 100.0}, {"points", 20}};
            if (literal) j["rip"]["t"] = 4;
            const auto t = tally(run_experiment(ExperimentConfig::from_json(j)));
            total.records += t.records;
            total.certified += t.certified;
            total.failures += t.failures;
            total.hypothesis_met += t.hypothesis_met;
            total.max_support = std::max(total.max_support, t.max_support);
            total.min_cap = std::min(total.min_cap, t.min_cap);
            ++runs;
        }
    }
    return {total.certified > 0 && total.failures == 0,
            fmt("%lld/%lld certified over %lld campaigns, %lld over cap, max support %lld, min cap %lld", total.certified,
                total.records, runs, total.failures, total.max_support, total.min_cap)};
}

Outcome lemma5_paths() {
    const json j{{"experiment", "lemma5"},
                 {"params", json::array({{{"p", 2}, {"q", 2}, {"r", 1}},
                                         {{"p", 2}, {"q", 1}, {"r", 1}},
                                         {{"p", 1}, {"q", 1}, {"r", 1}},
                                         {{"p", 2}, {"q", 2}, {"r", 2}}})},
                 {"dims", {{"m", 20}, {"N", 40}, {"s", 2}}},
                 {"noise_ratio", 0.1},
                 {"trials", 20},
                 {"base_seed", 5}};
    const auto rep = run_experiment(ExperimentConfig::from_json(j));
    long long violations = 0, unresolved = 0, certified = 0;
    for (const auto& r : rep.records) {
        if (r.check == "violation") ++violations;
        if (r.check == "unresolved") ++unresolved;
        if (r.certified) ++certified;
    }
    return {violations == 0 && unresolved == 0,
            fmt("%lld points on 80 paths: %lld certified, %lld violations, %lld unresolved",
                static_cast<long long>(rep.records.size()), certified, violations, unresolved)};
}

Outcome m_sparsity() {
    const json j{{"experiment", "msparsity"},
                 {"params", json::array({{{"p", 2}, {"q", 2}, {"r", 1}},
                                         {{"p", 2}, {"q", 1}, {"r", 1}},
                                         {{"p", 1}, {"q", 1}, {"r", 1}}})},
                 {"dims", {{"m", 10}, {"N", 50}, {"s", 1}}},
                 {"lambda_grid", {{"relative_to", "threshold"}, {"lo", 1e-3}, {"hi", 0.5}, {"points", 8}}},
                 {"trials", 100},
                 {"base_seed", 6}};
    const auto t = tally(run_experiment(ExperimentConfig::from_json(j)));
    return {t.certified > 0 && t.failures == 0,
            fmt("%lld/%lld certified, max support %lld (m = 10), %lld over m", t.certified, t.records, t.max_support,
                t.failures)};
}

Outcome zero_threshold_law() {
    std::mt19937_64 g(1007);
    int ok = 0, total = 0;
    for (double q : {2.0, 1.0}) {
        for (int k = 0; k < 20; ++k) {
            const ProblemInstance inst(gaussian(g, 15, 30), gaussian_vector(g, 15));
            ProblemParams params{2, q, 1, 1};
            const double thr = zero_solution_threshold(params, inst);
            params.lambda = 1.001 * thr;
            const auto above = solve(params, inst);
            params.lambda = 0.9 * thr;
            const auto below = solve(params, inst);
            total += 2;
            if (above.certified && above.z.norm() == 0.0) ++ok;
            if (below.certified && !below.support.empty()) ++ok;
        }
    }
    return {ok == total, fmt("%d/%d solves on the expected side of the threshold", ok, total)};
}

Outcome kernel_properties() {
    std::mt19937_64 g(1008);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int prox_bad = 0, firm_bad = 0, fd_bad = 0, ineq_bad = 0, theta_bad = 0;

    for (double r : {1.0, 1.5, 2.0, 3.0}) {
        for (int k = 0; k < 20; ++k) {
            const Eigen::Index dim = 1 + k % 3;
            const Vector v = gaussian_vector(g, dim);
            const double mu = 0.1 + 0.1 * k;
            const Vector z = prox_l1_power(v, mu, r).z;
            auto f = [&](const Vector& x) { return 0.5 * (x - v).squaredNorm() + mu / r * std::pow(x.lpNorm<1>(), r); };
            const double fz = f(z);
            const double box = v.lpNorm<Eigen::Infinity>();
            for (int s = 0; s < 5000; ++s) {
                Vector x(dim);
                for (Eigen::Index i = 0; i < dim; ++i) x(i) = box * u(g);
                if (f(x) < fz - 1e-6) ++prox_bad;
                for (Eigen::Index i = 0; i < dim; ++i) x(i) = z(i) + 1e-3 * u(g);
                if (f(x) < fz - 1e-6) ++prox_bad;
            }
            const Vector w = gaussian_vector(g, dim);
            const Vector pw = prox_l1_power(w, mu, r).z;
            if ((z - pw).squaredNorm() > (z - pw).dot(v - w) + 1e-10) ++firm_bad;
        }
    }

    for (double p : {1.2, 1.5, 2.0}) {
        for (double q : {1.0, 2.0, 3.0}) {
            const ProblemInstance inst(gaussian(g, 6, 5), gaussian_vector(g, 6));
            const ProblemParams params{p, q, 1, 0};
            const Vector w = gaussian_vector(g, 5);
            const Vector grad = fidelity_subgradient(params, inst, w).g;
            for (Eigen::Index j = 0; j < 5; ++j) {
                Vector a = w, b = w;
                a(j) += 1e-6;
                b(j) -= 1e-6;
                const double fd =
                    (objective_in_coefficients(params, inst, a) - objective_in_coefficients(params, inst, b)) / 2e-6;
                if (std::abs(grad(j) - fd) > 1e-5 * std::max(1.0, std::abs(fd))) ++fd_bad;
            }
        }
    }

    const double pairs[][2] = {{1, 2}, {1, 1.5}, {1.5, 2}};
    for (const auto& pp : pairs) {
        for (int k = 0; k < 10000; ++k) {
            Vector v(10 + k % 40);
            for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n(g) * std::exp(2.0 * n(g));
            if (!embed_inequality_check(v, pp[0], pp[1]).ok) ++ineq_bad;
            const double theta = (k % 3 == 0) ? 0.1 : (k % 3 == 1 ? 0.3 : 0.5);
            if (!stechkin_row_select(v, theta, pp[1], pp[0]).ok) ++ineq_bad;
        }
    }

    for (double c = 1e-3; c <= 1e3; c *= 1.5) {
        const double th = theta_root(c);
        if (std::abs(c * (1 - th) - th * (1 - std::log(th)) - c / 2) > 1e-10) ++theta_bad;
    }

    return {prox_bad + firm_bad + fd_bad + ineq_bad + theta_bad == 0,
            fmt("prox beaten %d, firm nonexpansiveness %d, gradient mismatches %d, inequality failures %d, theta "
                "residuals %d",
                prox_bad, firm_bad, fd_bad, ineq_bad, theta_bad)};
}

Outcome homogeneity() {
    std::mt19937_64 g(1009);
    int ok = 0, total = 0;
    double worst = 0.0;
    for (double qr : {1.0, 2.0}) {
        for (int k = 0; k < 5; ++k) {
            const Matrix A = gaussian(g, 12, 25);
            const Vector y = gaussian_vector(g, 12);
            const ProblemParams params{2, qr, qr, qr == 1.0 ? 0.3 : 0.2};
            const auto base = solve(params, ProblemInstance(A, y));
            for (double c : {0.5, 2.0, 10.0}) {
                const auto scaled = solve(params, ProblemInstance(A, c * y));
                const double rel = (scaled.z - c * base.z).norm() / std::max(c * base.z.norm(), 1e-300);
                worst = std::max(worst, rel);
                ++total;
                if (base.certified && scaled.certified && rel <= 1e-6) ++ok;
            }
        }
    }
    return {ok == total, fmt("%d/%d scaled solves agree (worst rel %.2e)", ok, total, worst)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    json j = exact_theorem_config("thm1", 30, 10);
    j["trials"] = 4;
    j["lambda_grid"]["points"] = 6;
    const auto cfg = ExperimentConfig::from_json(j);
    const auto root = std::filesystem::temp_directory_path() / "lassolab_acceptance";
    std::filesystem::remove_all(root);
    write_report(run_experiment(cfg), (root / "a").string());
    write_report(run_experiment(cfg), (root / "b").string());
    const bool csv = slurp(root / "a" / "records.csv") == slurp(root / "b" / "records.csv");
    const bool sum = slurp(root / "a" / "summary.json") == slurp(root / "b" / "summary.json");
    const bool nonempty = !slurp(root / "a" / "records.csv").empty();
    std::filesystem::remove_all(root);
    return {csv && sum && nonempty, fmt("records.csv %s, summary.json %s", csv ? "identical" : "differs",
                                        sum ? "identical" : "differs")};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"oracle equivalence", oracle_equivalence},
        {"certificate suite", certificate_suite},
        {"sparsity cap, noiseless, exact constants", theorem1_exact},
        {"sparsity cap, noisy, exact constants", theorem2_exact},
        {"residual path monotonicity and limits", lemma5_paths},
        {"m-sparsity", m_sparsity},
        {"zero-threshold law", zero_threshold_law},
        {"kernel properties", kernel_properties},
        {"q = r homogeneity", homogeneity},
        {"determinism", determinism},
    };
    int failed = 0;
    int index = 1;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

#include "lassolab/certificate.hpp"
#include "lassolab/ensembles.hpp"
#include "lassolab/harness.hpp"
#include "lassolab/io.hpp"
#include "lassolab/prox.hpp"
#include "lassolab/rip.hpp"
#include "lassolab/solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace lassolab;
using nlohmann::json;

namespace {

struct ProblemFlags {
    std::string matrix;
    std::string dict;
    std::string obs;
    double p = 2.0;
    double q = 2.0;
    double r = 1.0;
    double lambda = 1.0;
    double eta = kDefaultEta;
    double tol_kkt = 1e-8;
    int max_iters = 20000;
    std::string out;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& f, bool need_obs) {
    cmd->add_option("--matrix", f.matrix, "measurement matrix A (CSV)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--dict", f.dict, "dictionary B (CSV), identity when omitted")->check(CLI::ExistingFile);
    auto* o = cmd->add_option("--obs", f.obs, "observation y (one value per line)")->check(CLI::ExistingFile);
    if (need_obs) o->required();
    cmd->add_option("--p", f.p, "residual norm exponent in [1, 2]");
    cmd->add_option("--q", f.q, "power on the fidelity term");
    cmd->add_option("--r", f.r, "power on the penalty term");
    cmd->add_option("--lambda", f.lambda, "regularization weight");
    cmd->add_option("--eta", f.eta, "relative support threshold");
    cmd->add_option("--tol-kkt", f.tol_kkt, "certificate tolerance");
    cmd->add_option("--max-iters", f.max_iters, "iteration cap");
    cmd->add_option("--out", f.out, "output directory");
}

Matrix load_dict(const ProblemFlags& f, Eigen::Index N) {
    return f.dict.empty() ? Matrix(Matrix::Identity(N, N)) : read_matrix_csv(f.dict);
}

ProblemInstance load_instance(const ProblemFlags& f) {
    Matrix A = read_matrix_csv(f.matrix);
    Matrix B = load_dict(f, A.cols());
    Vector y = read_vector(f.obs);
    return ProblemInstance(std::move(A), std::move(B), std::move(y));
}

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json index_set(const IndexSet& S) { return std::vector<long long>(S.begin(), S.end()); }

json solution_json(const Solution& s) {
    return {{"z", vec(s.z)},
            {"objective", s.objective},
            {"support", index_set(s.support)},
            {"iterations", s.iterations},
            {"kkt_residual", s.kkt_residual},
            {"certified", s.certified}};
}

json certificate_json(const Certificate& c) {
    return {{"nu_lambda", std::isfinite(c.nu_lambda) ? json(c.nu_lambda) : json("inf")},
            {"S_lambda", index_set(c.S_lambda)},
            {"eq_violation", c.eq_violation},
            {"ineq_violation", c.ineq_violation},
            {"dual_violation", c.dual_violation},
            {"scale", c.scale},
            {"kkt_residual", c.kkt_residual()},
            {"passed", c.passed},
            {"variant", to_string(c.variant)},
            {"reason", c.reason}};
}

json rip_json(const RipReport& r) {
    json j = {{"t", r.t},
              {"p", r.p},
              {"alpha", r.alpha},
              {"beta", r.beta},
              {"gamma", std::isfinite(r.gamma) ? json(r.gamma) : json("inf")},
              {"mode", to_string(r.mode)},
              {"trials", r.trials},
              {"supports_enumerated", r.supports_enumerated}};
    if (r.mode == RipMode::Estimated)
        j["bound_direction"] = "alpha is an upper bound, beta a lower bound, gamma optimistic";
    return j;
}

void emit(const json& j, const std::string& out_dir, const std::string& name) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / name, std::ios::binary) << text;
    }
}

SolverOptions solver_opts(const ProblemFlags& f) {
    SolverOptions o;
    o.eta = f.eta;
    o.tol_kkt = f.tol_kkt;
    o.max_iters = f.max_iters;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LASSO-type programs: solve, certify, sparsity bounds and restricted isometry constants"};
    app.require_subcommand(1);
    int exit_code = 0;

    ProblemFlags sf;
    auto* solve_cmd = app.add_subcommand("solve", "minimize the program for one lambda");
    add_problem_flags(solve_cmd, sf, true);
    solve_cmd->callback([&] {
        const ProblemInstance inst = load_instance(sf);
        const Solution s = solve(ProblemParams{sf.p, sf.q, sf.r, sf.lambda}, inst, solver_opts(sf));
        if (!sf.out.empty()) {
            std::filesystem::create_directories(sf.out);
            write_vector((std::filesystem::path(sf.out) / "z.csv").string(), s.z);
        }
        emit(solution_json(s), sf.out, "solution.json");
        if (!s.certified) exit_code = 2;
    });

    ProblemFlags cf;
    std::string z_path;
    auto* certify_cmd = app.add_subcommand("certify", "check the stationarity characterization for a candidate");
    add_problem_flags(certify_cmd, cf, true);
    certify_cmd->add_option("--z", z_path, "candidate z (one value per line)")->required()->check(CLI::ExistingFile);
    certify_cmd->callback([&] {
        const ProblemInstance inst = load_instance(cf);
        CertificateOptions co;
        co.tol = cf.tol_kkt;
        co.eta = cf.eta;
        const Certificate c = check_stationarity(ProblemParams{cf.p, cf.q, cf.r, cf.lambda}, inst, read_vector(z_path), co);
        emit(certificate_json(c), cf.out, "certificate.json");
        if (!c.passed) exit_code = 2;
    });

    ProblemFlags pf;
    double lo = 1e-3;
    double hi = 1.0;
    int per_decade = 25;
    auto* path_cmd = app.add_subcommand("path", "warm-started lambda path on a log grid");
    add_problem_flags(path_cmd, pf, true);
    path_cmd->add_option("--lambda-lo", lo, "smallest lambda");
    path_cmd->add_option("--lambda-hi", hi, "largest lambda");
    path_cmd->add_option("--per-decade", per_decade, "grid points per decade");
    path_cmd->callback([&] {
        const ProblemInstance inst = load_instance(pf);
        const auto grid = log_grid(lo, hi, per_decade);
        const PathResult res = solve_path(ProblemParams{pf.p, pf.q, pf.r, grid.front()}, inst, grid, solver_opts(pf));
        json pts = json::array();
        for (size_t i = 0; i < grid.size(); ++i) {
            const Solution& s = res.solutions[i];
            pts.push_back({{"lambda", grid[i]},
                           {"residual_p", res.residual_p_norms[i]},
                           {"objective", s.objective},
                           {"support_size", s.support.size()},
                           {"kkt_residual", s.kkt_residual},
                           {"certified", s.certified}});
        }
        emit({{"points", pts}}, pf.out, "path.json");
    });

    std::string rip_matrix, rip_dict, rip_mode = "exact", rip_out;
    long long rip_t = 1, rip_trials = 200, rip_budget = kDefaultSupportBudget;
    double rip_p = 2.0;
    std::uint64_t rip_seed = 0;
    auto* rip_cmd = app.add_subcommand("rip", "restricted isometry constants of A with respect to B");
    rip_cmd->add_option("--matrix", rip_matrix, "measurement matrix A (CSV)")->required()->check(CLI::ExistingFile);
    rip_cmd->add_option("--dict", rip_dict, "dictionary B (CSV)")->check(CLI::ExistingFile);
    rip_cmd->add_option("--t", rip_t, "order");
    rip_cmd->add_option("--p", rip_p, "exponent of the measurement norm");
    rip_cmd->add_option("--mode", rip_mode, "exact (p = 2) or estimate")->check(CLI::IsMember({"exact", "estimate"}));
    rip_cmd->add_option("--trials", rip_trials, "sampling trials in estimate mode");
    rip_cmd->add_option("--seed", rip_seed, "seed for estimate mode");
    rip_cmd->add_option("--budget", rip_budget, "support enumeration budget");
    rip_cmd->add_option("--out", rip_out, "output directory");
    rip_cmd->callback([&] {
        const Matrix A = read_matrix_csv(rip_matrix);
        const Matrix B = rip_dict.empty() ? Matrix(Matrix::Identity(A.cols(), A.cols())) : read_matrix_csv(rip_dict);
        if (rip_mode == "exact" && rip_p != 2.0) throw PreconditionError("exact mode needs p = 2");
        const RipReport r = rip_mode == "exact" ? rip_exact_l2(A, B, rip_t, rip_budget)
                                                : rip_estimate(A, B, rip_t, rip_p, rip_trials, rip_seed);
        emit(rip_json(r), rip_out, "rip.json");
    });

    std::string nsp_matrix, nsp_dict, nsp_mode = "exact", nsp_out;
    long long nsp_s = 1, nsp_budget = 100000, nsp_trials = 200;
    std::optional<long long> nsp_t;
    double nsp_p = 2.0, nsp_rho = 1.0;
    std::uint64_t nsp_seed = 0;
    auto* nsp_cmd = app.add_subcommand("nsp", "derive robust null space constants from the RIP and search for violations");
    nsp_cmd->add_option("--matrix", nsp_matrix, "measurement matrix A (CSV)")->required()->check(CLI::ExistingFile);
    nsp_cmd->add_option("--dict", nsp_dict, "dictionary B (CSV)")->check(CLI::ExistingFile);
    nsp_cmd->add_option("--s", nsp_s, "sparsity order");
    nsp_cmd->add_option("--t", nsp_t, "RIP order (default: N)");
    nsp_cmd->add_option("--p", nsp_p, "exponent of the measurement norm");
    nsp_cmd->add_option("--rho", nsp_rho, "rho in (0, 1]");
    nsp_cmd->add_option("--mode", nsp_mode, "exact (p = 2) or estimate")->check(CLI::IsMember({"exact", "estimate"}));
    nsp_cmd->add_option("--trials", nsp_trials, "sampling trials in estimate mode");
    nsp_cmd->add_option("--budget", nsp_budget, "number of candidate vectors");
    nsp_cmd->add_option("--seed", nsp_seed, "seed");
    nsp_cmd->add_option("--out", nsp_out, "output directory");
    nsp_cmd->callback([&] {
        const Matrix A = read_matrix_csv(nsp_matrix);
        const Matrix B = nsp_dict.empty() ? Matrix(Matrix::Identity(A.cols(), A.cols())) : read_matrix_csv(nsp_dict);
        const long long t = nsp_t ? *nsp_t : A.cols();
        if (nsp_mode == "exact" && nsp_p != 2.0) throw PreconditionError("exact mode needs p = 2");
        const RipReport rip = nsp_mode == "exact" ? rip_exact_l2(A, B, t)
                                                  : rip_estimate(A, B, t, nsp_p, nsp_trials, nsp_seed);
        const NspConstants k = nsp_constants_from_rip(rip, operator_norms(B), nsp_rho, nsp_s);
        const auto cx = nsp_falsify(A, B, k.nsp, nsp_p, nsp_budget, nsp_seed);
        json j = {{"rip", rip_json(rip)},
                  {"rho", k.nsp.rho},
                  {"tau", std::isfinite(k.nsp.tau) ? json(k.nsp.tau) : json("inf")},
                  {"s", k.nsp.s},
                  {"t_ceil", k.t_ceil},
                  {"t_floor_plus_one", k.t_floor_plus_one},
                  {"t_required", k.t_required},
                  {"applicable", k.applicable},
                  {"budget", nsp_budget},
                  {"counterexample", nullptr},
                  {"note", "no counterexample does not prove the property"}};
        if (cx) j["counterexample"] = {{"v", vec(cx->v)}, {"S", index_set(cx->S)}, {"margin", cx->margin}, {"candidate", cx->candidate}};
        emit(j, nsp_out, "nsp.json");
    });

    EnsembleSpec gspec;
    std::string gkind = "gaussian", gamp = "sign", gout = "generated";
    std::optional<double> gscale;
    double gkappa = 1.0, gratio = 0.0, gp = 2.0;
    Eigen::Index gs = 0;
    auto* gen_cmd = app.add_subcommand("generate", "seeded matrices, dictionaries, sparse vectors and noise");
    gen_cmd->add_option("--kind", gkind, "gaussian, rademacher or laplace")->check(CLI::IsMember({"gaussian", "rademacher", "laplace"}));
    gen_cmd->add_option("--m", gspec.m, "rows")->required();
    gen_cmd->add_option("--N", gspec.N, "columns")->required();
    gen_cmd->add_option("--scale", gscale, "entry scale (default m^{-1/p})");
    gen_cmd->add_option("--seed", gspec.seed, "seed");
    gen_cmd->add_option("--kappa", gkappa, "condition number of B (1 writes no B)");
    gen_cmd->add_option("--s", gs, "sparsity of B^{-1}x (0 writes no x)");
    gen_cmd->add_option("--amplitude", gamp, "sign or gaussian")->check(CLI::IsMember({"sign", "gaussian"}));
    gen_cmd->add_option("--noise-ratio", gratio, "||e||_p / ||y||_p in [0, 1/3]");
    gen_cmd->add_option("--p", gp, "exponent for scale and noise calibration");
    gen_cmd->add_option("--out", gout, "output directory");
    gen_cmd->callback([&] {
        gspec.kind = parse_ensemble_kind(gkind);
        gspec.scale = gscale ? *gscale : default_scale(gspec.m, gp);
        const Matrix A = generate_matrix(gspec);
        std::filesystem::create_directories(gout);
        const auto at = [&](const char* n) { return (std::filesystem::path(gout) / n).string(); };
        write_matrix_csv(at("A.csv"), A);
        Matrix B = Matrix::Identity(gspec.N, gspec.N);
        if (gkappa != 1.0) {
            B = random_conditioned_B(gspec.N, gkappa, mix_seed(gspec.seed, 1));
            write_matrix_csv(at("B.csv"), B);
        }
        json side = {{"kind", to_string(gspec.kind)},
                     {"m", gspec.m},
                     {"N", gspec.N},
                     {"scale", gspec.scale},
                     {"seed", gspec.seed},
                     {"kappa", gkappa},
                     {"p", gp}};
        if (gs > 0) {
            const SparseTruth truth = sparse_ground_truth(gspec.N, gs, B, parse_amplitude_law(gamp), mix_seed(gspec.seed, 2));
            const NoisyObservation obs = calibrated_noise(A, truth.x, gp, gratio, mix_seed(gspec.seed, 3));
            write_vector(at("x.csv"), truth.x);
            write_vector(at("e.csv"), obs.e);
            write_vector(at("y.csv"), obs.y);
            side["s"] = gs;
            side["amplitude"] = gamp;
            side["noise_ratio"] = gratio;
        }
        std::ofstream(at("spec.json"), std::ios::binary) << side.dump(2) << "\n";
        std::cout << side.dump(2) << "\n";
    });

    std::string exp_name, exp_config, exp_out;
    std::optional<std::uint64_t> exp_seed;
    std::optional<long long> exp_trials;
    std::optional<int> exp_workers;
    std::optional<double> exp_eta, exp_tol;
    auto* exp_cmd = app.add_subcommand("experiment", "run a verification campaign from a JSON config");
    exp_cmd->add_option("name", exp_name, "thm1, thm2, lemma5, msparsity or rip_rate")
        ->required()
        ->check(CLI::IsMember({"thm1", "thm2", "lemma5", "msparsity", "rip_rate"}));
    exp_cmd->add_option("--config", exp_config, "config file")->required()->check(CLI::ExistingFile);
    exp_cmd->add_option("--out", exp_out, "output directory (overrides the config)");
    exp_cmd->add_option("--seed", exp_seed, "base seed");
    exp_cmd->add_option("--trials", exp_trials, "number of trials");
    exp_cmd->add_option("--workers", exp_workers, "worker threads (0: default)");
    exp_cmd->add_option("--eta", exp_eta, "relative support threshold");
    exp_cmd->add_option("--tol-kkt", exp_tol, "certificate tolerance");
    exp_cmd->callback([&] {
        ExperimentConfig c = load_config(exp_config);
        if (to_string(c.experiment) != exp_name)
            throw PreconditionError("config describes " + std::string(to_string(c.experiment)) + ", not " + exp_name);
        if (!exp_out.empty()) c.out_dir = exp_out;
        if (exp_seed) c.base_seed = *exp_seed;
        if (exp_trials) c.trials = *exp_trials;
        if (exp_workers) c.workers = *exp_workers;
        if (exp_eta) c.eta = *exp_eta;
        if (exp_tol) c.tol_kkt = *exp_tol;
        c.validate();
        const ExperimentReport rep = run_experiment(c);
        write_report(rep, c.out_dir);
        std::cout << summary_json(rep);
        if (!rep.all_pass) exit_code = 1;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return exit_code;
}

#pragma once

#include "lassolab/ensembles.hpp"
#include "lassolab/model.hpp"
#include "lassolab/rip.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lassolab {

inline constexpr const char* kVersion = "1.0.0";

enum class ExperimentKind { Thm1, Thm2, Lemma5, MSparsity, RipRate };

const char* to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ParamTuple {
    double p = 2.0;
    double q = 2.0;
    double r = 1.0;
};

/// Log-spaced lambda values lo..hi (inclusive, `points` of them), multiplied
/// by a per-instance reference: 1 ("absolute"), the r = 1 zero-solution
/// threshold of the instance ("threshold"), or lambda* ("lambda_star").
struct LambdaGridSpec {
    std::string relative_to = "threshold";
    double lo = 1e-3;
    double hi = 1.0;
    int points = 20;
};

struct RipConfig {
    /// "auto": exact when p = 2 and the support count fits the budget, else estimated.
    std::string mode = "auto";
    /// Fixed order; when absent the order is raised until it covers the theorem's t.
    std::optional<long long> t;
    long long trials = 200;
    long long budget = kDefaultSupportBudget;
    int polish_steps = 60;
};

struct RipRateConfig {
    std::vector<long long> t_values{1};
    double gamma_target = 2.0;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Thm1;
    std::vector<ParamTuple> params{ParamTuple{}};
    EnsembleKind ensemble = EnsembleKind::Gaussian;
    /// Absent: m^{-1/p} for the tuple's p.
    std::optional<double> scale;
    Eigen::Index m = 80;
    Eigen::Index N = 200;
    Eigen::Index s = 3;
    double kappa = 1.0;
    double noise_ratio = 0.0;
    AmplitudeLaw amplitude = AmplitudeLaw::RandomSign;
    LambdaGridSpec grid;
    long long trials = 10;
    std::uint64_t base_seed = 1;
    std::string out_dir = "out";
    double eta = kDefaultEta;
    double tol_kkt = 1e-8;
    int max_iters = 20000;
    /// 0: OpenMP default.
    int workers = 0;
    /// Additive slack of the lemma5 endpoint check, relative to 1 + ||y||_p.
    double path_tol = 1e-6;
    RipConfig rip;
    RipRateConfig rip_rate;

    /// Throws PreconditionError on any violated precondition.
    void validate() const;
    /// Strict parse: unknown keys and wrongly typed values are errors.
    static ExperimentConfig from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::string& path);

struct TrialRecord {
    long long trial = 0;
    double lambda = 0.0;
    double p = 2.0;
    double q = 2.0;
    double r = 1.0;
    Eigen::Index m = 0;
    Eigen::Index N = 0;
    Eigen::Index s = 0;
    long long support_binv = 0;
    long long support_x = 0;
    long long sparsity_cap = 0;
    double gamma = 1.0;
    std::string gamma_provenance;
    long long rip_t = 0;
    long long theorem_t = 0;
    bool hypothesis_met = false;
    double kappa_B = 1.0;
    double lambda_star = 0.0;
    double residual_p = 0.0;
    double objective = 0.0;
    double kkt_residual = 0.0;
    bool certified = false;
    bool pass = false;
    /// Experiment-specific verdict: "ok", "violation", "unresolved" or "n/a".
    std::string check = "n/a";
    std::string note;
};

struct RipRateRecord {
    long long trial = 0;
    long long t = 1;
    Eigen::Index m = 0;
    Eigen::Index N = 0;
    double p = 2.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = kInf;
    std::string provenance;
    bool success = false;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<TrialRecord> records;
    std::vector<RipRateRecord> rate_records;
    nlohmann::json summary;
    /// Every certified record passes and no check reports a violation.
    bool all_pass = true;
};

ExperimentReport run_thm1(const ExperimentConfig& config);
ExperimentReport run_thm2(const ExperimentConfig& config);
ExperimentReport run_lemma5(const ExperimentConfig& config);
ExperimentReport run_msparsity(const ExperimentConfig& config);
ExperimentReport run_rip_rate(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

/// RFC 4180 CSV with a header row.
std::string records_csv(const ExperimentReport& report);
std::string summary_json(const ExperimentReport& report);
/// Writes records.csv and summary.json into dir (created if missing).
void write_report(const ExperimentReport& report, const std::string& dir);

}  // namespace lassolab

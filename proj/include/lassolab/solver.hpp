#pragma once

#include "lassolab/certificate.hpp"
#include "lassolab/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace lassolab {

enum class StepMode {
    /// Backtracking proximal gradient for p > 1, linearized ADMM for p = 1.
    Automatic,
    /// Proximal gradient with backtracking; falls back to ADMM (p = 2) when the
    /// residual collapses and the step size with it.
    Backtracking,
    /// Proximal subgradient with sigma_k = sigma_0 / sqrt(k), best iterate kept.
    Diminishing,
    /// Linearized ADMM on the split u = y - Mw. Needs p in {1, 2}.
    Admm,
};

struct SolverOptions {
    int max_iters = 20000;
    double tol_kkt = 1e-8;
    double tol_obj = 1e-15;
    StepMode step_mode = StepMode::Automatic;
    bool acceleration = true;
    bool polish = true;
    unsigned long long seed = 0;
    double eta = kDefaultEta;
    /// Iterations between certificate evaluations.
    int check_every = 10;
    /// Called with (iteration, objective) for every accepted backtracking step.
    std::function<void(int, double)> on_accept;

    void validate() const;
};

/// Minimizes the LASSO-type objective in the coefficients w = B^{-1} z and
/// returns z = B w. Non-convergence is reported via certified = false.
Solution solve(const ProblemParams& params, const ProblemInstance& inst, const SolverOptions& opts = {},
               const std::optional<Vector>& warm_start = std::nullopt);

struct PathResult {
    std::vector<double> lambda_grid;
    std::vector<Solution> solutions;
    std::vector<double> residual_p_norms;
};

/// Solves along an increasing lambda grid, warm-starting each point from the previous one.
PathResult solve_path(const ProblemParams& base, const ProblemInstance& inst, const std::vector<double>& lambda_grid,
                      const SolverOptions& opts = {});

/// Logarithmic grid from lo to hi inclusive with the given points per decade.
std::vector<double> log_grid(double lo, double hi, int per_decade = 25);

/// Cyclic coordinate descent for (1/2)||y - Az||_2^2 + lambda ||z||_1 (B = I).
/// Each coordinate update is an exact soft threshold.
Solution coordinate_descent_lasso(const ProblemInstance& inst, double lambda, double eta = kDefaultEta,
                                  long long max_sweeps = 2000000);

/// Power-method estimate of ||M||_{2->2} (fixed start vector, deterministic).
double spectral_norm_estimate(const Matrix& M, int iters = 30);

}  // namespace lassolab

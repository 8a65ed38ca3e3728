// Limit-theorem diagnostics on cross-replica ensembles: L1 law-of-large-
// numbers error curves, weak-approach CLT checks with a frozen witness
// family, normal confidence bounds, Cramer-Rao variance floors and empirical
// Brownian path construction.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mcrelab/stats.hpp"

namespace mcrelab::limits {

// Row-major replica x horizon matrix of Phi(X_k), k = 1..n.
class PartialSumEnsemble {
public:
    PartialSumEnsemble(long long replicas, int horizon);

    long long replicas() const { return replicas_; }
    int horizon() const { return horizon_; }
    double at(long long r, int k) const {  // k in 1..n
        return values_[static_cast<std::size_t>(r) * horizon_ + (k - 1)];
    }
    double& at(long long r, int k) {
        return values_[static_cast<std::size_t>(r) * horizon_ + (k - 1)];
    }

    // Cross-replica mean of Phi(X_k) per k.
    const std::vector<double>& means() const;
    // Cross-replica sample variance of centered S_k per k (1-based index k-1).
    const std::vector<double>& var_curve() const;
    // Centered partial sum S_n for one replica.
    double partial_sum(long long r, int n) const;

private:
    long long replicas_;
    int horizon_;
    std::vector<double> values_;
    mutable std::vector<double> means_, var_curve_;
};

// Builds an ensemble in parallel; fill(r, out) writes Phi(X_1..X_n).
PartialSumEnsemble make_ensemble(long long replicas, int horizon,
                                 const std::function<void(std::int64_t, std::vector<double>&)>& fill);

struct LlnPoint {
    int n = 0;
    double mean_abs = 0.0;  // E^hat | S_n / n |
    double stderr_ = 0.0;
};
struct UintPoint {
    double threshold = 0.0;  // B
    double tail_mean = 0.0;  // sup over the n grid of (1/n) sum_k E[|W_k| 1{|W_k|>=B}]
};
struct LlnReport {
    std::vector<LlnPoint> curve;
    std::vector<UintPoint> uniform_integrability;
};

LlnReport lln_report(const PartialSumEnsemble& ens, const std::vector<int>& n_grid,
                     const std::vector<double>& b_grid);

// The 20 bounded Lipschitz witness functions used by weak_approach_report,
// listed in README.md. Index i in [0, 20).
double witness_function(int i, double x);

struct WeakApproachReport {
    double sigma_hat = 0.0;   // sd of S_n / sqrt(n)
    double ks_stat = 0.0;
    double ks_p = 0.0;
    double max_witness_gap = 0.0;           // max_i |E g_i(T) - E g_i(sigma Z)|
    std::vector<double> witness_gaps;
};

// terminal values = S_n / sqrt(n) across replicas.
WeakApproachReport weak_approach_report(const std::vector<double>& terminal_over_sqrt_n);

// 2 (1 - Phi(a / sigma)).
double confidence_bound(double a, double sigma);

struct CoverageRow {
    double a = 0.0;
    double empirical = 0.0;  // P^hat( |S_n| / sqrt(n) >= a )
    double stderr_ = 0.0;
    double bound = 0.0;
    bool ok = false;  // empirical <= bound + 4 se
};
std::vector<CoverageRow> coverage_check(const std::vector<double>& terminal_over_sqrt_n,
                                        const std::vector<double>& a_values, double sigma);

struct FisherFloorInputs {
    std::vector<double> r_star;        // per-step spectral radius bounds, > 0
    std::vector<double> gradient_sq;   // per-step gradient-norm lower bounds, >= 0
};
double cramer_rao_floor(const FisherFloorInputs& inputs);

struct FcltDiagnostics {
    std::vector<double> t_grid;
    std::vector<int> v_n;                  // v_n(t) per grid point
    std::vector<double> var_b;             // cross-replica Var(B_n(t)) per grid point
    double var_b1 = 0.0;
    double corr_half = 0.0;                // corr(B(1/2), B(1) - B(1/2))
    double ks_b1_stat = 0.0;
    double ks_b1_p = 0.0;
};

struct FcltResult {
    FcltDiagnostics diagnostics;
    // paths[r][i] = B_n(t_grid[i]) for replica r (kept only when requested).
    std::vector<std::vector<double>> paths;
};

// Builds v_n(t) = min{1 <= k <= n : Var(S_k) >= t Var(S_n)} from the pooled
// variance curve, xi_{k,n} = (Phi(X_k) - mean_k)/sqrt(Var(S_n)) and the step
// paths B_n(t). Throws if the variance curve is non-monotone beyond
// `drawdown_tol` (relative) or degenerate.
FcltResult fclt_ensemble(const PartialSumEnsemble& ens, const std::vector<double>& t_grid,
                         bool keep_paths = false, double drawdown_tol = 0.05);

void write_fclt_paths_csv(const FcltResult& result, const std::string& path,
                          int max_paths = 50);

}  // namespace mcrelab::limits

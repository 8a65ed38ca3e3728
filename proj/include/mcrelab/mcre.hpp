// Parametric-kernel machinery for Markov chains in random environments:
// drift verification, iterated drift bounds, long-term contraction rates, the
// two-uniform split sampler with regeneration, coupled-chain simulation and
// total-variation bound curves. State space is scalar here; splitting is only
// defined for dimension one.
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mcrelab/process.hpp"

namespace mcrelab {

struct ParametricKernel {
    // Inverse cdf of Q(y, x, .): monotone in u, exact sampler.
    std::function<double(double y, double x, double u)> quantile;
    // cdf z -> Q(y, x, (-inf, z]).
    std::function<double(double y, double x, double z)> cdf;
    // Optional density w.r.t. the model's reference measure.
    std::function<double(double y, double x, double z)> density;
    // Support bracket for numeric pseudoinverses.
    std::function<std::pair<double, double>(double y, double x)> support;
};

struct DriftData {
    std::function<double(double)> V;      // Lyapunov function, >= 0
    std::function<double(double)> gamma;  // > 0
    std::function<double(double)> K;      // >= 1
};

struct MinorizationSpec {
    double r = 0.0;        // radius parameter, R(y) = 2 K(y) / (r gamma(y))
    double beta_bar = 0.0; // in [0, 1)
    std::function<double(double y)> R;
    std::function<double(double y, double u)> kappa_quantile;
    std::function<double(double y, double z)> kappa_cdf;
    // Set when kappa(y, .) is a point mass; enables the analytic residual.
    std::optional<double> kappa_point;
};

struct SplitSampler {
    ParametricKernel kernel;
    DriftData drift;
    MinorizationSpec minor;
};

struct SplitResult {
    double state = 0.0;
    bool regenerated = false;
    bool in_small_set = false;
};

// One split-sampler step consuming two independent uniforms: u1 decides the
// regeneration coin inside the small set, u2 picks the quantile. The marginal
// law of the output is Q(y, x, .) in every branch.
SplitResult split_step(const SplitSampler& s, double y, double x, double u1, double u2);

// Residual-kernel quantile (Q - (1-beta) kappa)/beta, bisected to 1e-12 when
// no analytic shortcut applies.
double residual_quantile(const SplitSampler& s, double y, double x, double u);

struct DriftCheckCell {
    double y = 0.0, x = 0.0;
    double estimate = 0.0, stderr_ = 0.0, bound = 0.0;
    bool violation = false;  // estimate > bound + 4 se
};
struct DriftReport {
    std::vector<DriftCheckCell> cells;
    int violations = 0;
};

DriftReport drift_verify(const ParametricKernel& kernel, const DriftData& drift,
                         const std::vector<double>& y_grid, const std::vector<double>& x_grid,
                         long long replicas, std::uint64_t master_seed,
                         std::uint64_t stream_salt = 0x11);

// V0 prod gamma + sum_r K_r prod_{j>r} gamma_j, empty inputs give V0.
double iterated_drift_bound(const std::vector<double>& gamma_path,
                            const std::vector<double>& k_path, double v0);

struct ContractivityReport {
    int n_max = 0;
    std::vector<long long> j_values;
    // root[j][n-1] = E^{1/n}[ K(Y_j) prod_{k=1..n} gamma(Y_{k+j}) ]
    std::vector<std::vector<double>> root;
    std::vector<double> sup_root;  // per n
    bool exact = false;            // transfer-matrix evaluation was available
};

ContractivityReport contractivity_rate(const EnvironmentSpec& spec, const DriftData& drift,
                                       int n_max, int j_max, long long replicas,
                                       std::uint64_t master_seed,
                                       std::uint64_t stream_salt = 0x12);

struct CouplingRecord {
    long long tau = -1;  // -1 while censored
    bool censored = true;
    std::vector<long long> small_set_visits;  // sigma_k until coupling
};

struct CouplingTail {
    int horizon = 0;
    long long replicas = 0;
    std::vector<double> p_tau_gt;  // index n = 0..horizon
    std::vector<double> stderr_;   // binomial se per n
    double censor_rate = 0.0;
};

struct CoupleOptions {
    int horizon = 100;
    long long replicas = 1000;
    std::uint64_t master_seed = 1;
    std::uint64_t stream_salt = 0x20;
    bool record_visits = true;
    // Checkpoints at which both chains' states are collected across replicas.
    std::vector<int> checkpoints;
};

struct CoupleResult {
    std::vector<CouplingRecord> records;
    CouplingTail tail;
    // checkpoint_states[c] = (chain1 states, chain2 states) at checkpoints[c].
    std::vector<std::pair<std::vector<double>, std::vector<double>>> checkpoint_states;
};

// Per-replica inputs: env values for t = 0..horizon and the two starting
// states. Produced by a caller-supplied function so initial laws may depend
// on the environment (stationary constructions need that).
struct CoupleInputs {
    std::vector<EnvValue> env;
    double x1 = 0.0;
    double x2 = 0.0;
};
using CoupleInputFn =
    std::function<CoupleInputs(std::int64_t, RngStream& env_rng, RngStream& init_rng)>;

// Evolves two chains through the split sampler with shared (u1, u2) noise and
// a shared environment path per replica. Coalescence is permanent; this is
// asserted every step after tau.
CoupleResult couple_chains(const SplitSampler& s, const CoupleInputFn& inputs,
                           const CoupleOptions& opts);
CoupleResult couple_chains(const SplitSampler& s, const EnvironmentSpec& env_spec,
                           double x1, const std::function<double(std::int64_t, RngStream&)>& x2_init,
                           const CoupleOptions& opts);

struct TailFit {
    double c1 = 0.0, c2 = 0.0;
    double rss = 0.0;        // residual sum of squares on the fit grid (log scale)
    int points = 0;
};

// Least squares of log p(n) on n^exponent over {n in [n_lo, n_hi] : 0 < p < 1}.
TailFit fit_tail(const CouplingTail& tail, double exponent, int n_lo, int n_hi);
double tail_fit_value(const TailFit& fit, double exponent, double n);

void write_coupling_tail_csv(const CouplingTail& tail, const TailFit& sqrt_fit,
                             const std::string& path);

}  // namespace mcrelab

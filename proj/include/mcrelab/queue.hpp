// Single-server FIFO queue with weakly dependent service times:
// waiting times follow W_{n+1} = (W_n + S_n - Z_{n+1})_+ with i.i.d.
// inter-arrival times Z independent of the service process S. Provides
// assumption verification, exponential-rate and drift coefficients,
// transition densities, Fisher variance floors, the backward stationary
// construction and coupling experiments against the stationary chain.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcrelab/mcre.hpp"
#include "mcrelab/process.hpp"

namespace mcrelab::queue {

struct ArrivalLaw {
    std::string name;
    std::function<double(double)> quantile;       // inverse cdf
    std::function<double(double)> cdf;
    std::function<double(double)> survival;       // P(Z > z), exact in the deep tail
    std::function<double(double)> density;        // may be null (atoms)
    std::function<double(double)> density_deriv;  // may be null, numeric fallback
    std::function<double(double)> mgf_neg;        // t -> E exp(-t Z), analytic if set
    double mean = 0.0;
    double second_moment = 0.0;
    double upper_support = std::numeric_limits<double>::infinity();
};

ArrivalLaw exponential_arrivals(double rate);
ArrivalLaw deterministic_arrivals(double value);

struct QueueModel {
    EnvironmentSpec service;  // values in [0, M]
    double service_bound = 0.0;  // M
    ArrivalLaw arrivals;
    std::vector<double> t_grid;  // candidate exponential tilts
};

void validate_model(const QueueModel& model);
// Exact mean service when the spec is finite, MC estimate otherwise.
double service_mean(const QueueModel& model, long long replicas = 100000,
                    std::uint64_t seed = 7);

struct WaitPath {
    std::vector<double> w;  // W_0..W_n, W_0 = 0
    std::vector<double> s;  // S_0..S_{n-1}
    std::vector<double> z;  // Z_1..Z_n
    std::uint64_t master_seed = 0;
    std::uint64_t env_stream = 0, noise_stream = 0;
};

WaitPath simulate_queue(const QueueModel& model, long long n, RngStream& env_rng,
                        RngStream& arrival_rng);

struct LambdaEstimate {
    double t = 0.0;
    double value = 0.0;   // Lambda^hat(t)
    double stderr_ = 0.0; // batch-replicate standard error
    int argmax_j = 0;
};

// max over j <= j_max of (1/n) log E^hat exp(t sum_{k=0..n} (S_{k+j} - Z_{k+j+1})),
// log-sum-exp stable, SE via replica batching.
LambdaEstimate lambda_rate(const QueueModel& model, double t, int n, int j_max,
                           long long replicas, std::uint64_t seed);

struct QueueAssumptionReport {
    bool subcritical = false;
    double subcritical_margin = 0.0;  // E Z - limsup E S
    bool bounded_service = false;
    bool arrivals_square_integrable = false;
    std::vector<LambdaEstimate> lambda_grid;
    double t_bar = 0.0;               // 0 when no grid point qualifies
    bool lambda_negative = false;     // some t with Lambda + 2 SE < 0
    double gamma_bar = 0.0;           // exp(Lambda(t_bar))
    double r = 0.0;                   // minorization radius parameter
    double tau_threshold = 0.0;       // M + 4 / (gamma_bar^{-1/2} - 1)
    double p_z_tail = 0.0;            // P(Z >= tau_threshold)
    bool minorization = false;        // p_z_tail > 0
    double small_set_radius = 0.0;    // log(1 + 2/r) / t_bar, in w-space
    double beta_bar = 0.0;
    bool all_green = false;
    std::string first_failure;        // empty when all green
};

QueueAssumptionReport assumption_report(const QueueModel& model, long long replicas,
                                        std::uint64_t seed, double r_override = 0.0);

// gamma(s) = K(s) = E exp(t (s - Z)), analytic through the arrival mgf when
// available, quadrature to 1e-10 otherwise.
struct DriftCoeffs {
    double t = 0.0;
    std::function<double(double)> gamma;
    std::function<double(double)> K;
};
DriftCoeffs queue_drift_coeffs(const QueueModel& model, double t);

// Density of the Lindley kernel w.r.t. nu = delta_0 + Lebesgue.
double transition_density(const QueueModel& model, double s, double w, double z);
double log_likelihood(const QueueModel& model, const std::vector<double>& s_path,
                      const std::vector<double>& w_path);

// r* = sup_z f^2 / P(Z > z) + int f'^2 / f. Analytic for exponential
// arrivals, otherwise quadrature with grid-refined sup and a Richardson-style
// agreement check. Throws when the integral diverges.
double fisher_radius(const QueueModel& model);

struct VarianceFloorResult {
    double floor = 0.0;
    double empirical_var = 0.0;
    double var_stderr = 0.0;
    double p_s_gt_z = 0.0;  // inf_k P(S_k > Z_1)
    bool ok = false;        // empirical >= floor - 4 se
};
VarianceFloorResult variance_floor(const QueueModel& model, int n, long long replicas,
                                   std::uint64_t seed);

struct LoynesSample {
    double w0 = 0.0;
    bool argmax_at_boundary = false;
};

// W_0' = max(0, max_j sum_{k=1..j} xi_{-k}) truncated at `depth`, with
// xi_{-k} = S_{-k} - Z_{-k+1}. The service path must hold indices
// -depth..-1 (oldest first, length depth).
LoynesSample loynes_from_path(const std::vector<double>& service_past,
                              const ArrivalLaw& arrivals, RngStream& z_rng);

struct LoynesBatch {
    std::vector<double> w0;
    double boundary_hit_rate = 0.0;
};
LoynesBatch loynes_stationary(const QueueModel& model, int depth, long long samples,
                              std::uint64_t seed);

struct BorovkovResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
};
BorovkovResult borovkov_rate(const QueueModel& model, int n, long long replicas,
                             std::uint64_t seed, int depth = 1000);

// The Lindley kernel Q(s, w, .) = law((w + s - Z)_+) with inverse-cdf
// sampling and the atom at zero handled exactly.
ParametricKernel queue_kernel(const QueueModel& model);
// Drift data (V, gamma, K) at tilt t.
DriftData queue_drift(const QueueModel& model, double t);

// The split-sampler assembled from the queue kernel with kappa = delta_0 and
// the coefficients t_bar, gamma_bar taken from an assumption report.
SplitSampler make_queue_splitter(const QueueModel& model,
                                 const QueueAssumptionReport& report,
                                 double beta_override = 0.0);

struct QueueCouplingOptions {
    int horizon = 100;
    long long replicas = 10000;
    std::uint64_t master_seed = 1;
    int loynes_depth = 1000;
    std::vector<int> checkpoints;   // collect (W_n, W*_n) samples here
    double beta_override = 0.0;     // optional beta_bar override
    double r_override = 0.0;        // optional minorization radius override
};

struct QueueCouplingResult {
    QueueAssumptionReport assumptions;
    CouplingTail tail;
    TailFit fit_sqrt;      // c1 exp(-c2 n^{1/2}), fitted on the lower half
    TailFit fit_cbrt;      // c1 exp(-c2 n^{1/3})
    bool sqrt_fit_better = false;  // rss comparison on the fit grid
    std::vector<int> checkpoints;
    // (chain from 0, stationary chain) samples per checkpoint.
    std::vector<std::pair<std::vector<double>, std::vector<double>>> checkpoint_states;
};

QueueCouplingResult queue_coupling_experiment(const QueueModel& model,
                                              const QueueCouplingOptions& opts);

struct TvCheckpoint {
    int n = 0;
    double tv = 0.0;        // plug-in half-L1 histogram distance
    double bound = 0.0;     // 2 P^hat(tau > n)
    double stderr_ = 0.0;
    bool ok = false;        // tv <= bound + 4 se
};
std::vector<TvCheckpoint> tv_bound_report(const QueueCouplingResult& result, int bins = 40);

}  // namespace mcrelab::queue

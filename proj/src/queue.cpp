#include "mcrelab/queue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcrelab/errors.hpp"
#include "mcrelab/parallel.hpp"
#include "mcrelab/stats.hpp"

namespace mcrelab::queue {

namespace {
constexpr std::uint64_t kSaltSim = 0x100;
constexpr std::uint64_t kSaltLambda = 0x200;
constexpr std::uint64_t kSaltLoynes = 0x300;
constexpr std::uint64_t kSaltBorovkov = 0x400;
constexpr std::uint64_t kSaltCoupling = 0x500;
constexpr std::uint64_t kSaltFloor = 0x600;
}  // namespace

ArrivalLaw exponential_arrivals(double rate) {
    if (rate <= 0.0) throw std::invalid_argument("exponential_arrivals: rate must be > 0");
    ArrivalLaw law;
    law.name = "exponential";
    law.quantile = [rate](double p) { return -std::log1p(-p) / rate; };
    law.cdf = [rate](double z) { return z <= 0.0 ? 0.0 : -std::expm1(-rate * z); };
    law.survival = [rate](double z) { return z <= 0.0 ? 1.0 : std::exp(-rate * z); };
    law.density = [rate](double z) { return z < 0.0 ? 0.0 : rate * std::exp(-rate * z); };
    law.density_deriv = [rate](double z) {
        return z < 0.0 ? 0.0 : -rate * rate * std::exp(-rate * z);
    };
    law.mgf_neg = [rate](double t) { return rate / (rate + t); };
    law.mean = 1.0 / rate;
    law.second_moment = 2.0 / (rate * rate);
    return law;
}

ArrivalLaw deterministic_arrivals(double value) {
    if (value < 0.0) throw std::invalid_argument("deterministic_arrivals: negative value");
    ArrivalLaw law;
    law.name = "deterministic";
    law.quantile = [value](double) { return value; };
    law.cdf = [value](double z) { return z >= value ? 1.0 : 0.0; };
    law.survival = [value](double z) { return z < value ? 1.0 : 0.0; };
    law.mgf_neg = [value](double t) { return std::exp(-t * value); };
    law.mean = value;
    law.second_moment = value * value;
    law.upper_support = value;
    return law;
}

void validate_model(const QueueModel& model) {
    validate_spec(model.service);
    if (!(model.service_bound > 0.0))
        throw std::invalid_argument("queue model: service bound must be positive");
    if (!model.arrivals.quantile || !model.arrivals.cdf || !model.arrivals.survival)
        throw std::invalid_argument(
            "queue model: arrival law needs quantile, cdf and survival accessors");
}

double service_mean(const QueueModel& model, long long replicas, std::uint64_t seed) {
    if (is_finite_alphabet(model.service) &&
        !std::holds_alternative<ScriptedSpec>(model.service.variant)) {
        const WindowChain wc = window_chain(model.service);
        double m = 0.0;
        for (std::size_t i = 0; i < wc.initial.size(); ++i) m += wc.initial[i] * wc.value[i];
        return m;
    }
    RngStream g = derive_stream(seed, kSaltSim);
    const auto env = gen_environment(model.service, 0, replicas - 1, g);
    double m = 0.0;
    for (const auto& e : env) m += e.value;
    return m / static_cast<double>(replicas);
}

WaitPath simulate_queue(const QueueModel& model, long long n, RngStream& env_rng,
                        RngStream& arrival_rng) {
    if (n < 1) throw std::invalid_argument("simulate_queue: need n >= 1");
    validate_model(model);
    WaitPath path;
    const auto env = gen_environment(model.service, 0, n - 1, env_rng);
    path.s.resize(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) path.s[static_cast<std::size_t>(k)] = env[static_cast<std::size_t>(k)].value;
    path.z.resize(static_cast<std::size_t>(n));
    for (auto& z : path.z) z = model.arrivals.quantile(arrival_rng.next_uniform());
    path.w.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (long long k = 0; k < n; ++k) {
        const double next = path.w[static_cast<std::size_t>(k)] + path.s[static_cast<std::size_t>(k)] -
                            path.z[static_cast<std::size_t>(k)];
        path.w[static_cast<std::size_t>(k) + 1] = next > 0.0 ? next : 0.0;
    }
    return path;
}

LambdaEstimate lambda_rate(const QueueModel& model, double t, int n, int j_max,
                           long long replicas, std::uint64_t seed) {
    if (t <= 0.0) throw std::invalid_argument("lambda_rate: t must be > 0");
    if (n < 1 || j_max < 0 || replicas < 20)
        throw std::invalid_argument("lambda_rate: bad grid or too few replicas");
    const int horizon = j_max + n;  // S indices 0..horizon, Z indices 1..horizon+1
    const int J = j_max + 1;
    // exponents[j][rep] = t * sum_{k=0..n} (S_{k+j} - Z_{k+j+1})
    std::vector<std::vector<double>> exponents(
        static_cast<std::size_t>(J), std::vector<double>(static_cast<std::size_t>(replicas)));
    parallel_for(replicas, [&](std::int64_t rep) {
        const std::uint64_t base = kSaltLambda + 2 * static_cast<std::uint64_t>(rep);
        RngStream env_rng = derive_stream(seed, base);
        RngStream z_rng = derive_stream(seed, base + 1);
        const auto env = gen_environment(model.service, 0, horizon, env_rng);
        std::vector<double> xi(static_cast<std::size_t>(horizon) + 1);
        for (int i = 0; i <= horizon; ++i)
            xi[static_cast<std::size_t>(i)] =
                env[static_cast<std::size_t>(i)].value -
                model.arrivals.quantile(z_rng.next_uniform());
        double acc = 0.0;
        for (int k = 0; k <= n; ++k) acc += xi[static_cast<std::size_t>(k)];
        exponents[0][static_cast<std::size_t>(rep)] = t * acc;
        for (int j = 1; j <= j_max; ++j) {
            acc += xi[static_cast<std::size_t>(j + n)] - xi[static_cast<std::size_t>(j - 1)];
            exponents[static_cast<std::size_t>(j)][static_cast<std::size_t>(rep)] = t * acc;
        }
    });
    LambdaEstimate best;
    best.t = t;
    best.value = -std::numeric_limits<double>::infinity();
    const int batches = 20;
    for (int j = 0; j < J; ++j) {
        const auto& ex = exponents[static_cast<std::size_t>(j)];
        const double value = stats::log_mean_exp(ex) / n;
        if (value > best.value) {
            std::vector<double> batch_vals;
            const long long per = (replicas + batches - 1) / batches;
            for (int b = 0; b < batches; ++b) {
                const long long lo = b * per, hi = std::min<long long>(replicas, lo + per);
                if (hi <= lo) break;
                std::span<const double> sp(ex.data() + lo, static_cast<std::size_t>(hi - lo));
                batch_vals.push_back(stats::log_mean_exp(sp) / n);
            }
            best.value = value;
            best.argmax_j = j;
            best.stderr_ = std::sqrt(stats::variance(batch_vals) /
                                     static_cast<double>(batch_vals.size()));
        }
    }
    return best;
}

namespace {

// Pessimistic proxy for limsup_n E[S_n]: exact per-index means over a window
// for finite chains, plain mean otherwise.
double limsup_service_mean(const QueueModel& model, long long replicas, std::uint64_t seed) {
    if (is_finite_alphabet(model.service) &&
        !std::holds_alternative<ScriptedSpec>(model.service.variant)) {
        const WindowChain wc = window_chain(model.service);
        std::vector<double> law = wc.initial;
        double worst = 0.0;
        for (int step = 0; step <= 64; ++step) {
            double m = 0.0;
            for (std::size_t i = 0; i < law.size(); ++i) m += law[i] * wc.value[i];
            worst = std::max(worst, m);
            std::vector<double> nxt(law.size(), 0.0);
            for (std::size_t a = 0; a < law.size(); ++a) {
                if (law[a] == 0.0) continue;
                for (std::size_t b = 0; b < law.size(); ++b)
                    nxt[b] += law[a] * wc.transition[a][b];
            }
            law = std::move(nxt);
        }
        return worst;
    }
    return service_mean(model, replicas, seed);
}

}  // namespace

QueueAssumptionReport assumption_report(const QueueModel& model, long long replicas,
                                        std::uint64_t seed, double r_override) {
    validate_model(model);
    QueueAssumptionReport rep;

    const double es = limsup_service_mean(model, replicas, seed);
    rep.subcritical_margin = model.arrivals.mean - es;
    rep.subcritical = rep.subcritical_margin > 0.0;

    if (is_finite_alphabet(model.service)) {
        const auto alpha = alphabet_values(model.service);
        rep.bounded_service = alpha.front() >= -1e-12 &&
                              alpha.back() <= model.service_bound + 1e-12;
    } else {
        rep.bounded_service = std::isfinite(model.service_bound) &&
                              std::get<IidSpec>(model.service.variant)
                                      .quantile(1.0 - 1e-12) <= model.service_bound + 1e-9;
    }
    rep.arrivals_square_integrable = std::isfinite(model.arrivals.second_moment);

    const int lambda_n = 48, lambda_jmax = 4;
    const long long lambda_reps = std::max<long long>(2000, replicas / 4);
    for (double t : model.t_grid)
        rep.lambda_grid.push_back(lambda_rate(model, t, lambda_n, lambda_jmax, lambda_reps, seed));
    for (const auto& le : rep.lambda_grid) {
        if (le.value + 2.0 * le.stderr_ < 0.0) {
            rep.t_bar = le.t;
            rep.lambda_negative = true;
            rep.gamma_bar = std::exp(le.value);
            break;
        }
    }

    if (rep.lambda_negative) {
        rep.r = r_override > 0.0 ? r_override : 0.5 * (1.0 / rep.gamma_bar - 1.0);
        if (rep.r >= 1.0 / rep.gamma_bar - 1.0)
            throw std::invalid_argument("assumption_report: r must satisfy r < 1/gamma_bar - 1");
        const double root = 1.0 / std::sqrt(rep.gamma_bar) - 1.0;
        rep.tau_threshold = model.service_bound + 4.0 / root;
        rep.p_z_tail = model.arrivals.survival(rep.tau_threshold);
        rep.minorization = rep.p_z_tail > 0.0;
        rep.small_set_radius = std::log1p(2.0 / rep.r) / rep.t_bar;
        const double p_small = model.arrivals.cdf(model.service_bound + rep.small_set_radius);
        rep.beta_bar = 0.5 * (1.0 + p_small);
        // The split construction needs mass beyond the small set too.
        rep.minorization = rep.minorization && p_small < 1.0;
    }

    if (!rep.subcritical)
        rep.first_failure = "subcritical";
    else if (!rep.bounded_service)
        rep.first_failure = "bounded-service";
    else if (!rep.arrivals_square_integrable)
        rep.first_failure = "arrivals-square-integrable";
    else if (!rep.lambda_negative)
        rep.first_failure = "lambda-negative";
    else if (!rep.minorization)
        rep.first_failure = "minorization";
    rep.all_green = rep.first_failure.empty();
    return rep;
}

DriftCoeffs queue_drift_coeffs(const QueueModel& model, double t) {
    if (t <= 0.0) throw std::invalid_argument("queue_drift_coeffs: t must be > 0");
    double mgf;
    if (model.arrivals.mgf_neg) {
        mgf = model.arrivals.mgf_neg(t);
    } else {
        if (!model.arrivals.density)
            throw std::invalid_argument("queue_drift_coeffs: no mgf and no density");
        const double hi = model.arrivals.quantile(1.0 - 1e-14);
        mgf = stats::integrate(
            [&](double z) { return std::exp(-t * z) * model.arrivals.density(z); }, 0.0,
            hi, 1e-12);
    }
    if (!std::isfinite(mgf) || mgf <= 0.0)
        throw std::invalid_argument("queue_drift_coeffs: divergent arrival mgf");
    DriftCoeffs coeffs;
    coeffs.t = t;
    auto fn = [t, mgf](double s) { return std::exp(t * s) * mgf; };
    coeffs.gamma = fn;
    coeffs.K = fn;
    return coeffs;
}

double transition_density(const QueueModel& model, double s, double w, double z) {
    if (s < 0.0 || w < 0.0 || z < 0.0)
        throw std::invalid_argument("transition_density: negative input");
    if (!model.arrivals.density)
        throw std::invalid_argument("transition_density: arrival law has no density");
    if (z == 0.0) return model.arrivals.survival(w + s);
    const double arg = w + s - z;
    return arg < 0.0 ? 0.0 : model.arrivals.density(arg);
}

double log_likelihood(const QueueModel& model, const std::vector<double>& s_path,
                      const std::vector<double>& w_path) {
    if (w_path.size() != s_path.size() + 1)
        throw std::invalid_argument("log_likelihood: need one more waiting time than services");
    double ll = 0.0;
    for (std::size_t k = 0; k < s_path.size(); ++k) {
        const double p = transition_density(model, s_path[k], w_path[k], w_path[k + 1]);
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        ll += std::log(p);
    }
    return ll;
}

double fisher_radius(const QueueModel& model) {
    const auto& arr = model.arrivals;
    if (arr.name == "exponential") {
        const double rate = 1.0 / arr.mean;
        return 2.0 * rate * rate;  // sup term rate^2 at z = 0 plus integral rate^2
    }
    if (!arr.density)
        throw std::invalid_argument("fisher_radius: arrival law has no density");
    const double z_hi = arr.quantile(1.0 - 1e-10);
    auto deriv = arr.density_deriv
                     ? arr.density_deriv
                     : std::function<double(double)>([&](double z) {
                           const double h = 1e-6 * (1.0 + std::abs(z));
                           return (arr.density(z + h) - arr.density(std::max(0.0, z - h))) /
                                  (z - h < 0.0 ? h : 2.0 * h);
                       });
    auto sup_on_grid = [&](int points) {
        double sup = 0.0;
        for (int i = 0; i <= points; ++i) {
            const double z = z_hi * i / points;
            const double tail = arr.survival(z);
            if (tail <= 1e-300) continue;
            sup = std::max(sup, arr.density(z) * arr.density(z) / tail);
        }
        return sup;
    };
    const double sup_coarse = sup_on_grid(1 << 11);
    const double sup_fine = sup_on_grid(1 << 13);
    if (std::abs(sup_fine - sup_coarse) > 1e-6 * (1.0 + sup_fine))
        throw std::runtime_error("fisher_radius: sup refinement did not stabilize");
    auto integrand = [&](double z) {
        const double f = arr.density(z);
        if (f <= 1e-300) return 0.0;
        const double d = deriv(z);
        return d * d / f;
    };
    const double head = stats::integrate(integrand, 0.0, z_hi / 2.0, 1e-10);
    const double tailpiece = stats::integrate(integrand, z_hi / 2.0, z_hi, 1e-10);
    if (tailpiece > 0.2 * (head + tailpiece) + 1e-9)
        throw std::runtime_error("fisher_radius: Fisher integral appears divergent");
    return sup_fine + head + tailpiece;
}

VarianceFloorResult variance_floor(const QueueModel& model, int n, long long replicas,
                                   std::uint64_t seed) {
    if (n < 1 || replicas < 4) throw std::invalid_argument("variance_floor: bad arguments");
    VarianceFloorResult out;
    const double r_star = fisher_radius(model);
    // inf_k P(S_k > Z_1); k-independent for the stationary families we ship.
    if (is_finite_alphabet(model.service) &&
        !std::holds_alternative<ScriptedSpec>(model.service.variant)) {
        const WindowChain wc = window_chain(model.service);
        double p = 0.0;
        for (std::size_t i = 0; i < wc.initial.size(); ++i)
            p += wc.initial[i] * model.arrivals.cdf(wc.value[i]);
        out.p_s_gt_z = p;
    } else {
        RngStream g = derive_stream(seed, kSaltFloor);
        const long long m = 200000;
        const auto env = gen_environment(model.service, 0, m - 1, g);
        double p = 0.0;
        for (const auto& e : env) p += model.arrivals.cdf(e.value);
        out.p_s_gt_z = p / static_cast<double>(m);
    }
    out.floor = static_cast<double>(n) * out.p_s_gt_z / r_star;

    std::vector<double> sums(static_cast<std::size_t>(replicas));
    parallel_for(replicas, [&](std::int64_t rep) {
        const std::uint64_t base = kSaltFloor + 1 + 2 * static_cast<std::uint64_t>(rep);
        RngStream env_rng = derive_stream(seed, base);
        RngStream z_rng = derive_stream(seed, base + 1);
        const auto path = simulate_queue(model, n, env_rng, z_rng);
        double s = 0.0;
        for (int k = 1; k <= n; ++k) s += path.w[static_cast<std::size_t>(k)];
        sums[static_cast<std::size_t>(rep)] = s;
    });
    out.empirical_var = stats::variance(sums);
    out.var_stderr = stats::variance_stderr(sums);
    out.ok = out.empirical_var >= out.floor - 4.0 * out.var_stderr;
    return out;
}

LoynesSample loynes_from_path(const std::vector<double>& service_past,
                              const ArrivalLaw& arrivals, RngStream& z_rng) {
    LoynesSample out;
    const std::size_t depth = service_past.size();
    double y = 0.0, best = 0.0;
    std::size_t argmax = 0;
    for (std::size_t k = 1; k <= depth; ++k) {
        y += service_past[depth - k] - arrivals.quantile(z_rng.next_uniform());
        if (y > best) {
            best = y;
            argmax = k;
        }
    }
    out.w0 = best;
    out.argmax_at_boundary = argmax == depth;
    return out;
}

LoynesBatch loynes_stationary(const QueueModel& model, int depth, long long samples,
                              std::uint64_t seed) {
    if (depth < 1 || samples < 1) throw std::invalid_argument("loynes_stationary: bad arguments");
    validate_model(model);
    if (service_mean(model) >= model.arrivals.mean)
        throw std::invalid_argument("loynes_stationary: supercritical model rejected");
    LoynesBatch batch;
    batch.w0.resize(static_cast<std::size_t>(samples));
    std::vector<char> boundary(static_cast<std::size_t>(samples), 0);
    parallel_for(samples, [&](std::int64_t i) {
        const std::uint64_t base = kSaltLoynes + 2 * static_cast<std::uint64_t>(i);
        RngStream env_rng = derive_stream(seed, base);
        RngStream z_rng = derive_stream(seed, base + 1);
        const auto env = gen_environment(model.service, -depth, depth - 1, env_rng);
        std::vector<double> past(static_cast<std::size_t>(depth));
        for (int k = 0; k < depth; ++k) past[static_cast<std::size_t>(k)] = env[static_cast<std::size_t>(k)].value;
        const auto sample = loynes_from_path(past, model.arrivals, z_rng);
        batch.w0[static_cast<std::size_t>(i)] = sample.w0;
        boundary[static_cast<std::size_t>(i)] = sample.argmax_at_boundary ? 1 : 0;
    });
    long long hits = 0;
    for (char c : boundary) hits += c;
    batch.boundary_hit_rate = static_cast<double>(hits) / static_cast<double>(samples);
    return batch;
}

BorovkovResult borovkov_rate(const QueueModel& model, int n, long long replicas,
                             std::uint64_t seed, int depth) {
    if (n < 1 || replicas < 1) throw std::invalid_argument("borovkov_rate: bad arguments");
    validate_model(model);
    std::vector<char> hits(static_cast<std::size_t>(replicas), 0);
    parallel_for(replicas, [&](std::int64_t rep) {
        const std::uint64_t base = kSaltBorovkov + 3 * static_cast<std::uint64_t>(rep);
        RngStream env_rng = derive_stream(seed, base);
        RngStream zpast_rng = derive_stream(seed, base + 1);
        RngStream zfwd_rng = derive_stream(seed, base + 2);
        // One environment stream covering indices -depth..n-1 keeps the joint
        // law of past and forward services right.
        const auto env = gen_environment(model.service, -depth, depth + n - 1, env_rng);
        std::vector<double> past(static_cast<std::size_t>(depth));
        for (int k = 0; k < depth; ++k) past[static_cast<std::size_t>(k)] = env[static_cast<std::size_t>(k)].value;
        const double w0p = loynes_from_path(past, model.arrivals, zpast_rng).w0;
        std::vector<double> xi(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j)
            xi[static_cast<std::size_t>(j)] = env[static_cast<std::size_t>(depth + j)].value -
                                              model.arrivals.quantile(zfwd_rng.next_uniform());
        const double w1 = std::max(0.0, xi[0]);
        const double level = std::max(w1, w0p + xi[0]);
        double run = 0.0, lowest = std::numeric_limits<double>::infinity();
        for (int k = 1; k < n; ++k) {
            run += xi[static_cast<std::size_t>(k)];
            lowest = std::min(lowest, run);
        }
        hits[static_cast<std::size_t>(rep)] = lowest > level ? 1 : 0;  // inf over empty set = +inf
    });
    long long count = 0;
    for (char c : hits) count += c;
    BorovkovResult out;
    out.estimate = static_cast<double>(count) / static_cast<double>(replicas);
    out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(replicas));
    return out;
}

ParametricKernel queue_kernel(const QueueModel& model) {
    const ArrivalLaw arr = model.arrivals;
    ParametricKernel kernel;
    kernel.quantile = [arr](double y, double x, double u) {
        const double reach = x + y;
        const double atom = arr.survival(reach);
        if (u <= atom) return 0.0;
        return std::max(0.0, reach - arr.quantile(1.0 - u));
    };
    kernel.cdf = [arr](double y, double x, double z) {
        if (z < 0.0) return 0.0;
        return 1.0 - arr.cdf(x + y - z);
    };
    if (model.arrivals.density) {
        const QueueModel m = model;
        kernel.density = [m](double y, double x, double z) {
            return transition_density(m, y, x, z);
        };
    }
    kernel.support = [](double y, double x) { return std::make_pair(0.0, x + y); };
    return kernel;
}

DriftData queue_drift(const QueueModel& model, double t) {
    const auto coeffs = queue_drift_coeffs(model, t);
    DriftData drift;
    drift.V = [t](double w) { return std::expm1(t * w); };
    drift.gamma = coeffs.gamma;
    drift.K = coeffs.K;
    return drift;
}

SplitSampler make_queue_splitter(const QueueModel& model,
                                 const QueueAssumptionReport& report,
                                 double beta_override) {
    if (!report.all_green)
        throw std::invalid_argument("make_queue_splitter: assumption report is red: " +
                                    report.first_failure);
    const double r = report.r;
    const double beta = beta_override > 0.0 ? beta_override : report.beta_bar;
    const double p_small = model.arrivals.cdf(model.service_bound + report.small_set_radius);
    if (!(beta > p_small && beta < 1.0))
        throw std::invalid_argument("make_queue_splitter: beta_bar outside (P(Z < M + tau), 1)");

    SplitSampler s;
    s.kernel = queue_kernel(model);
    s.drift = queue_drift(model, report.t_bar);
    s.minor.r = r;
    s.minor.beta_bar = beta;
    s.minor.R = [r](double) { return 2.0 / r; };  // K = gamma cancels
    s.minor.kappa_point = 0.0;
    s.minor.kappa_quantile = [](double, double) { return 0.0; };
    s.minor.kappa_cdf = [](double, double z) { return z >= 0.0 ? 1.0 : 0.0; };
    return s;
}

QueueCouplingResult queue_coupling_experiment(const QueueModel& model,
                                              const QueueCouplingOptions& opts) {
    QueueCouplingResult result;
    result.assumptions =
        assumption_report(model, std::max<long long>(opts.replicas / 10, 4000),
                          opts.master_seed, opts.r_override);
    if (!result.assumptions.all_green)
        throw AssumptionError("queue_coupling_experiment: assumption failed: " +
                              result.assumptions.first_failure);
    const SplitSampler splitter =
        make_queue_splitter(model, result.assumptions, opts.beta_override);

    const int depth = opts.loynes_depth;
    const ArrivalLaw arr = model.arrivals;
    const EnvironmentSpec service = model.service;
    auto inputs = [&, depth](std::int64_t, RngStream& env_rng, RngStream& init_rng) {
        CoupleInputs in;
        const auto env = gen_environment(service, -depth, depth + opts.horizon, env_rng);
        std::vector<double> past(static_cast<std::size_t>(depth));
        for (int k = 0; k < depth; ++k)
            past[static_cast<std::size_t>(k)] = env[static_cast<std::size_t>(k)].value;
        in.env.assign(env.begin() + depth, env.end());
        in.x1 = 0.0;
        in.x2 = loynes_from_path(past, arr, init_rng).w0;
        return in;
    };
    CoupleOptions copts;
    copts.horizon = opts.horizon;
    copts.replicas = opts.replicas;
    copts.master_seed = opts.master_seed;
    copts.stream_salt = kSaltCoupling;
    copts.checkpoints = opts.checkpoints;
    const CoupleResult coupled = couple_chains(splitter, inputs, copts);

    result.tail = coupled.tail;
    result.checkpoints = opts.checkpoints;
    std::sort(result.checkpoints.begin(), result.checkpoints.end());
    result.checkpoint_states = coupled.checkpoint_states;
    const int fit_hi = opts.horizon / 2;
    result.fit_sqrt = fit_tail(result.tail, 0.5, 1, fit_hi);
    result.fit_cbrt = fit_tail(result.tail, 1.0 / 3.0, 1, fit_hi);
    result.sqrt_fit_better = result.fit_sqrt.rss <= result.fit_cbrt.rss;
    return result;
}

std::vector<TvCheckpoint> tv_bound_report(const QueueCouplingResult& result, int bins) {
    std::vector<TvCheckpoint> rows;
    for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
        const int n = result.checkpoints[c];
        const auto& w = result.checkpoint_states[c].first;
        const auto& ws = result.checkpoint_states[c].second;
        double hi = 1e-9;
        for (double v : w) hi = std::max(hi, v);
        for (double v : ws) hi = std::max(hi, v);
        const auto h1 = stats::make_histogram(w, 0.0, hi * (1.0 + 1e-12), bins);
        const auto h2 = stats::make_histogram(ws, 0.0, hi * (1.0 + 1e-12), bins);
        TvCheckpoint row;
        row.n = n;
        row.tv = stats::tv_distance(h1, h2);
        const double p = result.tail.p_tau_gt[static_cast<std::size_t>(n)];
        const double se_p = result.tail.stderr_[static_cast<std::size_t>(n)];
        row.bound = 2.0 * p;
        double var_tv = 0.0;
        const double r1 = static_cast<double>(w.size()), r2 = static_cast<double>(ws.size());
        for (std::size_t i = 0; i < h1.mass.size(); ++i)
            var_tv += h1.mass[i] * (1.0 - h1.mass[i]) / r1 + h2.mass[i] * (1.0 - h2.mass[i]) / r2;
        row.stderr_ = std::sqrt(4.0 * se_p * se_p + 0.25 * var_tv);
        row.ok = row.tv <= row.bound + 4.0 * row.stderr_;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mcrelab::queue

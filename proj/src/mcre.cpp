#include "mcrelab/mcre.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcrelab/csv.hpp"
#include "mcrelab/errors.hpp"
#include "mcrelab/parallel.hpp"
#include "mcrelab/stats.hpp"

namespace mcrelab {

double residual_quantile(const SplitSampler& s, double y, double x, double u) {
    const double beta = s.minor.beta_bar;
    if (beta <= 0.0)
        throw std::logic_error("residual_quantile: degenerate branch, residual never sampled");
    if (s.minor.kappa_point) {
        // kappa = point mass at p0. For z >= p0 the residual cdf is
        // (Q_cdf(z) - (1-beta))/beta, so the quantile is the Q-quantile at
        // (1-beta) + beta u; below p0 it is the Q-quantile at beta u.
        const double p0 = *s.minor.kappa_point;
        const double lifted = (1.0 - beta) + beta * u;
        const double candidate = s.kernel.quantile(y, x, std::min(lifted, 1.0));
        if (candidate >= p0) return candidate;
        return s.kernel.quantile(y, x, beta * u);
    }
    if (!s.kernel.cdf || !s.minor.kappa_cdf)
        throw std::invalid_argument("residual_quantile: cdf accessors unavailable");
    auto res_cdf = [&](double z) {
        return (s.kernel.cdf(y, x, z) - (1.0 - beta) * s.minor.kappa_cdf(y, z)) / beta;
    };
    double lo, hi;
    if (s.kernel.support) {
        auto br = s.kernel.support(y, x);
        lo = br.first;
        hi = br.second;
    } else {
        lo = x - 1.0;
        hi = x + 1.0;
        for (int it = 0; it < 200 && res_cdf(lo) > 0.0; ++it) lo = x + 2.0 * (lo - x);
        for (int it = 0; it < 200 && res_cdf(hi) < u; ++it) hi = x + 2.0 * (hi - x);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(hi) + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (res_cdf(mid) >= u)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

SplitResult split_step(const SplitSampler& s, double y, double x, double u1, double u2) {
    SplitResult out;
    const double R = s.minor.R ? s.minor.R(y)
                               : 2.0 * s.drift.K(y) / (s.minor.r * s.drift.gamma(y));
    out.in_small_set = s.drift.V(x) <= R;
    if (!out.in_small_set) {
        out.state = s.kernel.quantile(y, x, u2);
        return out;
    }
    if (u1 >= s.minor.beta_bar) {
        out.state = s.minor.kappa_point ? *s.minor.kappa_point
                                        : s.minor.kappa_quantile(y, u2);
        out.regenerated = true;
        return out;
    }
    out.state = residual_quantile(s, y, x, u2);
    return out;
}

DriftReport drift_verify(const ParametricKernel& kernel, const DriftData& drift,
                         const std::vector<double>& y_grid, const std::vector<double>& x_grid,
                         long long replicas, std::uint64_t master_seed,
                         std::uint64_t stream_salt) {
    if (replicas < 2) throw std::invalid_argument("drift_verify: need replicas >= 2");
    DriftReport report;
    report.cells.resize(y_grid.size() * x_grid.size());
    parallel_for(static_cast<std::int64_t>(report.cells.size()), [&](std::int64_t cell) {
        const std::size_t yi = static_cast<std::size_t>(cell) / x_grid.size();
        const std::size_t xi = static_cast<std::size_t>(cell) % x_grid.size();
        const double y = y_grid[yi], x = x_grid[xi];
        RngStream g = derive_stream(master_seed, stream_salt + static_cast<std::uint64_t>(cell));
        double sum = 0.0, sumsq = 0.0;
        for (long long rep = 0; rep < replicas; ++rep) {
            const double v = drift.V(kernel.quantile(y, x, g.next_uniform()));
            sum += v;
            sumsq += v * v;
        }
        const double n = static_cast<double>(replicas);
        DriftCheckCell& c = report.cells[static_cast<std::size_t>(cell)];
        c.y = y;
        c.x = x;
        c.estimate = sum / n;
        const double var = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
        c.stderr_ = std::sqrt(var / n);
        c.bound = drift.gamma(y) * drift.V(x) + drift.K(y);
        c.violation = c.estimate > c.bound + 4.0 * c.stderr_;
    });
    for (const auto& c : report.cells) report.violations += c.violation ? 1 : 0;
    return report;
}

double iterated_drift_bound(const std::vector<double>& gamma_path,
                            const std::vector<double>& k_path, double v0) {
    if (gamma_path.size() != k_path.size())
        throw std::invalid_argument("iterated_drift_bound: length mismatch");
    const std::size_t L = gamma_path.size();
    // suffix[r] = prod_{j > r} gamma_j, suffix[L-1] = 1.
    double bound = 0.0;
    double suffix = 1.0;
    for (std::size_t i = L; i-- > 0;) {
        bound += k_path[i] * suffix;
        suffix *= gamma_path[i];
    }
    return v0 * suffix + bound;
}

ContractivityReport contractivity_rate(const EnvironmentSpec& spec, const DriftData& drift,
                                       int n_max, int j_max, long long replicas,
                                       std::uint64_t master_seed, std::uint64_t stream_salt) {
    if (n_max < 1 || j_max < 0) throw std::invalid_argument("contractivity_rate: bad grid");
    ContractivityReport rep;
    rep.n_max = n_max;
    for (int j = 0; j <= j_max; ++j) rep.j_values.push_back(j);
    rep.root.assign(static_cast<std::size_t>(j_max) + 1,
                    std::vector<double>(static_cast<std::size_t>(n_max), 0.0));
    rep.sup_root.assign(static_cast<std::size_t>(n_max), 0.0);

    const bool exact = is_finite_alphabet(spec) &&
                       !std::holds_alternative<ScriptedSpec>(spec.variant);
    rep.exact = exact;
    if (exact) {
        const WindowChain wc = window_chain(spec);
        const std::size_t S = wc.initial.size();
        // M[s][s'] = P[s][s'] * gamma(value(s')).
        std::vector<std::vector<double>> M(S, std::vector<double>(S, 0.0));
        for (std::size_t a = 0; a < S; ++a)
            for (std::size_t b = 0; b < S; ++b)
                M[a][b] = wc.transition[a][b] * drift.gamma(wc.value[b]);
        // law at j: initial * P^j.
        std::vector<double> law = wc.initial;
        for (int j = 0; j <= j_max; ++j) {
            if (j > 0) {
                std::vector<double> nxt(S, 0.0);
                for (std::size_t a = 0; a < S; ++a) {
                    if (law[a] == 0.0) continue;
                    for (std::size_t b = 0; b < S; ++b) nxt[b] += law[a] * wc.transition[a][b];
                }
                law = std::move(nxt);
            }
            // weights[s] = law_j(s) * K(value(s)), then advance with M.
            std::vector<double> w(S);
            for (std::size_t a = 0; a < S; ++a) w[a] = law[a] * drift.K(wc.value[a]);
            for (int n = 1; n <= n_max; ++n) {
                std::vector<double> nxt(S, 0.0);
                for (std::size_t a = 0; a < S; ++a) {
                    if (w[a] == 0.0) continue;
                    for (std::size_t b = 0; b < S; ++b) nxt[b] += w[a] * M[a][b];
                }
                w = std::move(nxt);
                double e = 0.0;
                for (double v : w) e += v;
                rep.root[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)] =
                    std::pow(e, 1.0 / n);
            }
        }
    } else {
        if (replicas < 2)
            throw std::invalid_argument("contractivity_rate: need replicas for MC evaluation");
        // sums[j][n-1] accumulates K(Y_j) prod gamma across replicas. The
        // reduction grid is fixed so results do not depend on thread count.
        std::vector<std::vector<double>> sums(
            static_cast<std::size_t>(j_max) + 1,
            std::vector<double>(static_cast<std::size_t>(n_max), 0.0));
        const long long blocks = std::min<long long>(replicas, 256);
        std::vector<std::vector<std::vector<double>>> partial(
            static_cast<std::size_t>(blocks), sums);
        const long long per = (replicas + blocks - 1) / blocks;
        parallel_for(blocks, [&](std::int64_t w) {
            auto& acc = partial[static_cast<std::size_t>(w)];
            const long long lo = w * per, hi = std::min<long long>(replicas, lo + per);
            for (long long repi = lo; repi < hi; ++repi) {
                RngStream g = derive_stream(master_seed,
                                            stream_salt + static_cast<std::uint64_t>(repi));
                const auto env = gen_environment(spec, 0, j_max + n_max, g);
                for (int j = 0; j <= j_max; ++j) {
                    double prod = drift.K(env[static_cast<std::size_t>(j)].value);
                    for (int n = 1; n <= n_max; ++n) {
                        prod *= drift.gamma(env[static_cast<std::size_t>(j + n)].value);
                        acc[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)] += prod;
                    }
                }
            }
        });
        for (const auto& acc : partial)
            for (std::size_t j = 0; j < sums.size(); ++j)
                for (std::size_t n = 0; n < sums[j].size(); ++n) sums[j][n] += acc[j][n];
        for (int j = 0; j <= j_max; ++j)
            for (int n = 1; n <= n_max; ++n)
                rep.root[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)] =
                    std::pow(sums[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)] /
                                 static_cast<double>(replicas),
                             1.0 / n);
    }
    for (int n = 1; n <= n_max; ++n) {
        double sup = 0.0;
        for (int j = 0; j <= j_max; ++j)
            sup = std::max(sup,
                           rep.root[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)]);
        rep.sup_root[static_cast<std::size_t>(n - 1)] = sup;
    }
    return rep;
}

CoupleResult couple_chains(const SplitSampler& s, const CoupleInputFn& inputs,
                           const CoupleOptions& opts) {
    if (opts.horizon < 1 || opts.replicas < 1)
        throw std::invalid_argument("couple_chains: bad options");
    CoupleResult result;
    result.records.resize(static_cast<std::size_t>(opts.replicas));
    std::vector<int> cps = opts.checkpoints;
    std::sort(cps.begin(), cps.end());
    result.checkpoint_states.assign(
        cps.size(), {std::vector<double>(static_cast<std::size_t>(opts.replicas)),
                     std::vector<double>(static_cast<std::size_t>(opts.replicas))});

    // Channels per replica: 0 env, 1 init, 2 coin (u1), 3 quantile (u2).
    constexpr std::uint64_t kChannels = 4;
    parallel_for(opts.replicas, [&](std::int64_t rep) {
        const std::uint64_t base = opts.stream_salt + kChannels * static_cast<std::uint64_t>(rep);
        RngStream env_rng = derive_stream(opts.master_seed, base + 0);
        RngStream init_rng = derive_stream(opts.master_seed, base + 1);
        RngStream coin_rng = derive_stream(opts.master_seed, base + 2);
        RngStream quant_rng = derive_stream(opts.master_seed, base + 3);

        const CoupleInputs in = inputs(rep, env_rng, init_rng);
        if (static_cast<int>(in.env.size()) < opts.horizon)
            throw std::invalid_argument("couple_chains: env path shorter than horizon");
        const auto& env = in.env;
        double z1 = in.x1;
        double z2 = in.x2;
        CouplingRecord& rec = result.records[static_cast<std::size_t>(rep)];
        rec.small_set_visits.clear();
        if (z1 == z2) {
            rec.tau = 0;
            rec.censored = false;
        }
        std::size_t cp_idx = 0;
        while (cp_idx < cps.size() && cps[cp_idx] == 0) {
            result.checkpoint_states[cp_idx].first[static_cast<std::size_t>(rep)] = z1;
            result.checkpoint_states[cp_idx].second[static_cast<std::size_t>(rep)] = z2;
            ++cp_idx;
        }
        for (int t = 0; t < opts.horizon; ++t) {
            const double y = env[static_cast<std::size_t>(t)].value;
            const double u1 = coin_rng.next_uniform();
            const double u2 = quant_rng.next_uniform();
            if (opts.record_visits && rec.censored) {
                const double R = s.minor.R ? s.minor.R(y)
                                           : 2.0 * s.drift.K(y) / (s.minor.r * s.drift.gamma(y));
                if (std::max(s.drift.V(z1), s.drift.V(z2)) <= R)
                    rec.small_set_visits.push_back(t);
            }
            const bool was_equal = (z1 == z2);
            const SplitResult r1 = split_step(s, y, z1, u1, u2);
            const SplitResult r2 = split_step(s, y, z2, u1, u2);
            z1 = r1.state;
            z2 = r2.state;
            if (was_equal && z1 != z2)
                throw CheckError("couple_chains: coalescence was not permanent");
            // Joint regeneration pins both chains to the same kappa quantile.
            if (r1.regenerated && r2.regenerated && z1 != z2)
                throw CheckError("couple_chains: regeneration did not coalesce the chains");
            if (rec.censored && z1 == z2) {
                rec.tau = t + 1;
                rec.censored = false;
            }
            while (cp_idx < cps.size() && cps[cp_idx] == t + 1) {
                result.checkpoint_states[cp_idx].first[static_cast<std::size_t>(rep)] = z1;
                result.checkpoint_states[cp_idx].second[static_cast<std::size_t>(rep)] = z2;
                ++cp_idx;
            }
        }
    });

    CouplingTail& tail = result.tail;
    tail.horizon = opts.horizon;
    tail.replicas = opts.replicas;
    tail.p_tau_gt.assign(static_cast<std::size_t>(opts.horizon) + 1, 0.0);
    tail.stderr_.assign(static_cast<std::size_t>(opts.horizon) + 1, 0.0);
    long long censored = 0;
    std::vector<long long> exceed(static_cast<std::size_t>(opts.horizon) + 1, 0);
    for (const auto& rec : result.records) {
        const long long t = rec.censored ? opts.horizon + 1 : rec.tau;
        censored += rec.censored ? 1 : 0;
        // tau > n for all n < t.
        for (int n = 0; n <= opts.horizon; ++n)
            if (t > n) ++exceed[static_cast<std::size_t>(n)];
    }
    for (int n = 0; n <= opts.horizon; ++n) {
        const double p = static_cast<double>(exceed[static_cast<std::size_t>(n)]) /
                         static_cast<double>(opts.replicas);
        tail.p_tau_gt[static_cast<std::size_t>(n)] = p;
        tail.stderr_[static_cast<std::size_t>(n)] =
            std::sqrt(p * (1.0 - p) / static_cast<double>(opts.replicas));
    }
    tail.censor_rate = static_cast<double>(censored) / static_cast<double>(opts.replicas);
    return result;
}

CoupleResult couple_chains(const SplitSampler& s, const EnvironmentSpec& env_spec,
                           double x1, const std::function<double(std::int64_t, RngStream&)>& x2_init,
                           const CoupleOptions& opts) {
    auto inputs = [&](std::int64_t rep, RngStream& env_rng, RngStream& init_rng) {
        CoupleInputs in;
        in.env = gen_environment(env_spec, 0, opts.horizon, env_rng);
        in.x1 = x1;
        in.x2 = x2_init(rep, init_rng);
        return in;
    };
    return couple_chains(s, inputs, opts);
}

TailFit fit_tail(const CouplingTail& tail, double exponent, int n_lo, int n_hi) {
    std::vector<double> xs, ys;
    for (int n = std::max(1, n_lo); n <= std::min(n_hi, tail.horizon); ++n) {
        const double p = tail.p_tau_gt[static_cast<std::size_t>(n)];
        if (p > 0.0 && p < 1.0) {
            xs.push_back(std::pow(static_cast<double>(n), exponent));
            ys.push_back(std::log(p));
        }
    }
    if (xs.size() < 2) throw std::invalid_argument("fit_tail: not enough positive tail points");
    const auto fit = stats::least_squares(xs, ys);
    TailFit out;
    out.c1 = std::exp(fit.intercept);
    out.c2 = -fit.slope;
    out.rss = fit.rss;
    out.points = static_cast<int>(xs.size());
    return out;
}

double tail_fit_value(const TailFit& fit, double exponent, double n) {
    return fit.c1 * std::exp(-fit.c2 * std::pow(n, exponent));
}

void write_coupling_tail_csv(const CouplingTail& tail, const TailFit& sqrt_fit,
                             const std::string& path) {
    CsvWriter csv(path, {"n", "p_tau_gt_n", "stderr", "bound_fit"});
    for (int n = 0; n <= tail.horizon; ++n)
        csv.row({static_cast<std::int64_t>(n), tail.p_tau_gt[static_cast<std::size_t>(n)],
                 tail.stderr_[static_cast<std::size_t>(n)],
                 tail_fit_value(sqrt_fit, 0.5, static_cast<double>(std::max(n, 1)))});
    csv.close();
}

}  // namespace mcrelab

#include "mcrelab/felsmann.hpp"

#include <cmath>
#include <stdexcept>

#include "mcrelab/errors.hpp"
#include "mcrelab/parallel.hpp"
#include "mcrelab/process.hpp"

namespace mcrelab::felsmann {

Sequences felsmann_exact(const FelsmannParams& params, int n_max) {
    if (n_max < 1) throw std::invalid_argument("felsmann_exact: need n_max >= 1");
    if (params.epsilon < 0.0 || params.epsilon >= 0.25)
        throw std::invalid_argument("felsmann_exact: epsilon outside [0, 1/4)");
    const double g0 = params.gamma0 + params.epsilon;
    const double g1 = params.gamma1 + params.epsilon;
    const double g2 = params.gamma2 + params.epsilon;
    Sequences seq;
    seq.b.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    seq.c.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    seq.a.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    seq.b[0] = seq.c[0] = 0.5;
    seq.a[0] = 1.0;
    for (int n = 0; n < n_max; ++n) {
        const std::size_t i = static_cast<std::size_t>(n);
        seq.b[i + 1] = 0.5 * (g0 * seq.b[i] + g1 * seq.c[i]);
        seq.c[i + 1] = 0.5 * (g1 * seq.b[i] + g2 * seq.c[i]);
        seq.a[i + 1] = seq.b[i + 1] + seq.c[i + 1];
    }
    return seq;
}

Report felsmann_report(double epsilon, int n_max, long long replicas,
                       std::uint64_t master_seed) {
    if (!(epsilon >= 0.0 && epsilon < 0.25))
        throw std::invalid_argument("felsmann_report: epsilon outside [0, 1/4)");
    if (n_max < 1 || replicas < 2)
        throw std::invalid_argument("felsmann_report: bad arguments");

    FelsmannParams params;
    params.epsilon = epsilon;
    Report rep;
    rep.epsilon = epsilon;
    rep.replicas = replicas;
    rep.mean_gamma = 0.75 + epsilon;  // P(Y=0) = 1/4, gamma values (3,0,0)+eps
    const Sequences seq = felsmann_exact(params, n_max);
    rep.exact_a = seq.a;
    rep.root_lower_envelope.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int n = 1; n <= n_max; ++n)
        rep.root_lower_envelope[static_cast<std::size_t>(n)] =
            1.5 * std::pow(2.0, -1.0 / n);

    // Moving-sum environment with fair-bit base, through the shared engine.
    EnvironmentSpec spec;
    spec.variant = MovingSumSpec{1, FiniteLaw{{0.0, 1.0}, {0.5, 0.5}}};
    auto gamma_eps = [&](double y) {
        if (y < 0.5) return 3.0 + epsilon;
        return epsilon;
    };

    // Reduction runs over a fixed block grid so the summation order (and
    // hence every output byte) does not depend on the worker count.
    const long long blocks = std::min<long long>(replicas, 256);
    std::vector<std::vector<double>> sum(static_cast<std::size_t>(blocks),
                                         std::vector<double>(static_cast<std::size_t>(n_max) + 1, 0.0));
    std::vector<std::vector<double>> sumsq = sum;
    const long long per = (replicas + blocks - 1) / blocks;
    parallel_for(blocks, [&](std::int64_t w) {
        auto& s1 = sum[static_cast<std::size_t>(w)];
        auto& s2 = sumsq[static_cast<std::size_t>(w)];
        const long long lo = w * per, hi = std::min<long long>(replicas, lo + per);
        for (long long r = lo; r < hi; ++r) {
            RngStream g = derive_stream(master_seed, 0x700 + static_cast<std::uint64_t>(r));
            // Y_1..Y_n; the index-0 slot of the generated path plays Y_1.
            const auto env = gen_environment(spec, 1, n_max - 1, g);
            double prod = 1.0;
            for (int n = 1; n <= n_max; ++n) {
                prod *= gamma_eps(env[static_cast<std::size_t>(n - 1)].value);
                s1[static_cast<std::size_t>(n)] += prod;
                s2[static_cast<std::size_t>(n)] += prod * prod;
            }
        }
    });
    rep.mc_mean.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    rep.mc_se.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    rep.mc_mean[0] = 1.0;
    const double R = static_cast<double>(replicas);
    for (int n = 1; n <= n_max; ++n) {
        double s1 = 0.0, s2 = 0.0;
        for (long long w = 0; w < blocks; ++w) {
            s1 += sum[static_cast<std::size_t>(w)][static_cast<std::size_t>(n)];
            s2 += sumsq[static_cast<std::size_t>(w)][static_cast<std::size_t>(n)];
        }
        const double m = s1 / R;
        rep.mc_mean[static_cast<std::size_t>(n)] = m;
        rep.mc_se[static_cast<std::size_t>(n)] =
            std::sqrt(std::max(0.0, (s2 / R - m * m) / (R - 1.0)));
    }

    // Long-term contraction fails: n-th roots stay above the envelope even
    // though the one-step mean is below one.
    for (int n = 1; n <= n_max; ++n) {
        const double root = std::pow(rep.exact_a[static_cast<std::size_t>(n)], 1.0 / n);
        if (root + 1e-12 < rep.root_lower_envelope[static_cast<std::size_t>(n)])
            throw CheckError("felsmann_report: n-th root fell below the exact envelope");
    }
    return rep;
}

}  // namespace mcrelab::felsmann

#include "mcrelab/toy_chain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mcrelab::toy {

namespace {

struct NoisePartition {
    std::vector<double> mass;      // interval masses
    // next[i][x][y] = successor state when u falls in interval i.
    std::vector<std::array<std::array<int, 2>, 2>> next;
};

NoisePartition make_partition(const ThresholdChainSpec& spec) {
    std::vector<double> cuts{0.0, 1.0};
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) cuts.push_back(spec.p[x][y]);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    NoisePartition part;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        if (hi <= lo) continue;
        part.mass.push_back(hi - lo);
        std::array<std::array<int, 2>, 2> nx{};
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) nx[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] =
                hi <= spec.p[x][y] ? 1 : 0;  // intervals never straddle a threshold
        part.next.push_back(nx);
    }
    return part;
}

void validate(const ThresholdChainSpec& spec) {
    if (spec.horizon < 1 || spec.horizon > 12)
        throw std::invalid_argument("toy chain: horizon outside [1,12]");
    if (spec.transition.size() != 2 || spec.transition[0].size() != 2 ||
        spec.transition[1].size() != 2)
        throw std::invalid_argument("toy chain: transition must be 2x2");
    for (const auto& row : spec.transition) {
        if (std::abs(row[0] + row[1] - 1.0) > 1e-12)
            throw std::invalid_argument("toy chain: transition rows must sum to 1");
    }
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            if (spec.p[x][y] < 0.0 || spec.p[x][y] > 1.0)
                throw std::invalid_argument("toy chain: thresholds must lie in [0,1]");
    if (spec.x0 != 0 && spec.x0 != 1) throw std::invalid_argument("toy chain: x0 must be 0 or 1");
}

}  // namespace

std::vector<double> stationary_law(const std::vector<std::vector<double>>& t) {
    // Two-state chain: pi_0 = t10 / (t01 + t10).
    const double t01 = t[0][1], t10 = t[1][0];
    if (t01 + t10 <= 0.0) return {0.5, 0.5};
    return {t10 / (t01 + t10), t01 / (t01 + t10)};
}

std::vector<double> exact_path_law(const ThresholdChainSpec& spec) {
    validate(spec);
    const int H = spec.horizon;
    const NoisePartition part = make_partition(spec);
    const auto pi = stationary_law(spec.transition);
    std::vector<double> law(static_cast<std::size_t>(1) << (H + 1), 0.0);

    // Walk environment paths and noise interval tuples recursively; the
    // response path is deterministic given both.
    struct Walker {
        const ThresholdChainSpec& spec;
        const NoisePartition& part;
        std::vector<double>& law;
        int H;

        void env_then_noise(int t, int y, double prob, int x, std::size_t bits) {
            if (prob == 0.0) return;
            if (t == H) {
                law[bits] += prob;
                return;
            }
            // One noise interval moves X, then the environment steps.
            for (std::size_t i = 0; i < part.mass.size(); ++i) {
                const int xn = part.next[i][static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
                const std::size_t nbits = bits | (static_cast<std::size_t>(xn) << (t + 1));
                for (int yn = 0; yn < 2; ++yn)
                    env_then_noise(t + 1, yn,
                                   prob * part.mass[i] *
                                       spec.transition[static_cast<std::size_t>(y)]
                                                      [static_cast<std::size_t>(yn)],
                                   xn, nbits);
            }
        }
    };

    Walker walker{spec, part, law, H};
    const std::size_t bits0 = static_cast<std::size_t>(spec.x0);
    for (int y = 0; y < 2; ++y)
        walker.env_then_noise(0, y, pi[static_cast<std::size_t>(y)], spec.x0, bits0);
    return law;
}

double exact_alpha_x(const ThresholdChainSpec& spec, const std::vector<double>& path_law,
                     int n) {
    const int H = spec.horizon;
    if (n < 1 || n > H) throw std::invalid_argument("exact_alpha_x: gap outside horizon");
    double best = 0.0;
    for (int j = 0; j + n <= H; ++j) {
        const int past_bits = j + 1;
        const int fut_bits = H - (j + n) + 1;
        BlockLaw block;
        block.past_atoms = 1 << past_bits;
        block.future_atoms = 1 << fut_bits;
        block.joint.assign(static_cast<std::size_t>(block.past_atoms) * block.future_atoms, 0.0);
        for (std::size_t bits = 0; bits < path_law.size(); ++bits) {
            const double p = path_law[bits];
            if (p == 0.0) continue;
            const std::size_t past = bits & ((static_cast<std::size_t>(1) << past_bits) - 1);
            const std::size_t fut = (bits >> (j + n)) & ((static_cast<std::size_t>(1) << fut_bits) - 1);
            block.joint[past * static_cast<std::size_t>(block.future_atoms) + fut] += p;
        }
        block.j = j;
        block.gap = n;
        best = std::max(best, alpha_finite_exact(block, 22, 1 << 14));
    }
    return best;
}

std::vector<double> exact_coalescence_bound(const ThresholdChainSpec& spec) {
    validate(spec);
    const int H = spec.horizon;
    const NoisePartition part = make_partition(spec);
    const auto pi = stationary_law(spec.transition);

    // law_j[x][y]: joint law of (X_j, Y_j) along the real chain.
    std::vector<std::array<std::array<double, 2>, 2>> law_j(static_cast<std::size_t>(H) + 1);
    for (auto& m : law_j) m = {{{0.0, 0.0}, {0.0, 0.0}}};
    for (int y = 0; y < 2; ++y)
        law_j[0][static_cast<std::size_t>(spec.x0)][static_cast<std::size_t>(y)] =
            pi[static_cast<std::size_t>(y)];
    for (int t = 0; t < H; ++t)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                const double p = law_j[static_cast<std::size_t>(t)][static_cast<std::size_t>(x)]
                                      [static_cast<std::size_t>(y)];
                if (p == 0.0) continue;
                for (std::size_t i = 0; i < part.mass.size(); ++i) {
                    const int xn = part.next[i][static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
                    for (int yn = 0; yn < 2; ++yn)
                        law_j[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(xn)]
                             [static_cast<std::size_t>(yn)] +=
                            p * part.mass[i] *
                            spec.transition[static_cast<std::size_t>(y)][static_cast<std::size_t>(yn)];
                }
            }

    // For each restart j, evolve the pair (continued chain, anchored chain)
    // under shared noise and environment; track P(differ) per lag.
    std::vector<double> b(static_cast<std::size_t>(H) + 1, 0.0);
    for (int j = 0; j <= H; ++j) {
        // pair[z1][z2][y]
        std::array<std::array<std::array<double, 2>, 2>, 2> pair{};
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                pair[static_cast<std::size_t>(x)][static_cast<std::size_t>(spec.x0)]
                    [static_cast<std::size_t>(y)] +=
                    law_j[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)]
                         [static_cast<std::size_t>(y)];
        for (int k = 1; k <= H; ++k) {
            std::array<std::array<std::array<double, 2>, 2>, 2> next{};
            for (int z1 = 0; z1 < 2; ++z1)
                for (int z2 = 0; z2 < 2; ++z2)
                    for (int y = 0; y < 2; ++y) {
                        const double p = pair[static_cast<std::size_t>(z1)]
                                             [static_cast<std::size_t>(z2)]
                                             [static_cast<std::size_t>(y)];
                        if (p == 0.0) continue;
                        for (std::size_t i = 0; i < part.mass.size(); ++i) {
                            const int n1 = part.next[i][static_cast<std::size_t>(z1)]
                                                    [static_cast<std::size_t>(y)];
                            const int n2 = part.next[i][static_cast<std::size_t>(z2)]
                                                    [static_cast<std::size_t>(y)];
                            for (int yn = 0; yn < 2; ++yn)
                                next[static_cast<std::size_t>(n1)][static_cast<std::size_t>(n2)]
                                    [static_cast<std::size_t>(yn)] +=
                                    p * part.mass[i] *
                                    spec.transition[static_cast<std::size_t>(y)]
                                                   [static_cast<std::size_t>(yn)];
                        }
                    }
            pair = next;
            double differ = 0.0;
            for (int y = 0; y < 2; ++y) {
                differ += pair[0][1][static_cast<std::size_t>(y)];
                differ += pair[1][0][static_cast<std::size_t>(y)];
            }
            b[static_cast<std::size_t>(k)] = std::max(b[static_cast<std::size_t>(k)], differ);
        }
    }
    return b;
}

TransferCheckReport transfer_soundness_check(const ThresholdChainSpec& spec) {
    validate(spec);
    const int H = spec.horizon;
    TransferCheckReport rep;

    const auto path_law = exact_path_law(spec);
    rep.alpha_x.assign(static_cast<std::size_t>(H) + 1, 0.0);
    for (int n = 1; n <= H; ++n)
        rep.alpha_x[static_cast<std::size_t>(n)] = exact_alpha_x(spec, path_law, n);

    // Environment alpha: exact through the pair reduction for Markov chains;
    // with the stationary initial law the coefficient does not depend on j.
    EnvironmentSpec env;
    env.variant = FiniteMarkovSpec{{0.0, 1.0}, spec.transition, stationary_law(spec.transition)};
    rep.alpha_env.assign(static_cast<std::size_t>(H) + 2, 0.0);
    for (int gap = 1; gap <= H + 1; ++gap) {
        const BlockLaw law = exact_block_law(env, 0, gap, 1, 1);
        rep.alpha_env[static_cast<std::size_t>(gap)] =
            alpha_finite_exact(law, 22, 1 << 14);
    }

    rep.b = exact_coalescence_bound(spec);

    for (int n = 2; n <= H; ++n)
        for (int r = 0; r <= n - 1; ++r) {
            TransferCheckRow row;
            row.n = n;
            row.r = r;
            row.alpha_x = rep.alpha_x[static_cast<std::size_t>(n)];
            row.alpha_env = rep.alpha_env[static_cast<std::size_t>(r) + 1];
            row.b = rep.b[static_cast<std::size_t>(n - r)];
            row.bound = row.alpha_env + row.b;
            row.ok = row.alpha_x <= row.bound + 1e-12;
            if (!row.ok) ++rep.violations;
            rep.rows.push_back(row);
        }
    return rep;
}

}  // namespace mcrelab::toy

#include "mcrelab/mixing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "mcrelab/csv.hpp"
#include "mcrelab/errors.hpp"

namespace mcrelab {

void validate_block_law(const BlockLaw& law) {
    if (law.past_atoms <= 0 || law.future_atoms <= 0)
        throw std::invalid_argument("block law: empty side");
    if (law.joint.size() !=
        static_cast<std::size_t>(law.past_atoms) * static_cast<std::size_t>(law.future_atoms))
        throw std::invalid_argument("block law: joint size mismatch");
    double s = 0.0;
    for (double p : law.joint) {
        if (p < -1e-15) throw std::invalid_argument("block law: negative mass");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("block law: joint mass does not sum to 1");
}

namespace {

struct PrunedLaw {
    int P = 0, F = 0;
    std::vector<double> joint;  // P x F
    std::vector<double> pp, pf;
};

PrunedLaw prune(const BlockLaw& law) {
    std::vector<double> pp(static_cast<std::size_t>(law.past_atoms), 0.0);
    std::vector<double> pf(static_cast<std::size_t>(law.future_atoms), 0.0);
    for (int a = 0; a < law.past_atoms; ++a)
        for (int b = 0; b < law.future_atoms; ++b) {
            const double v =
                law.joint[static_cast<std::size_t>(a) * law.future_atoms + b];
            pp[static_cast<std::size_t>(a)] += v;
            pf[static_cast<std::size_t>(b)] += v;
        }
    std::vector<int> keep_p, keep_f;
    for (int a = 0; a < law.past_atoms; ++a)
        if (pp[static_cast<std::size_t>(a)] > 0.0) keep_p.push_back(a);
    for (int b = 0; b < law.future_atoms; ++b)
        if (pf[static_cast<std::size_t>(b)] > 0.0) keep_f.push_back(b);
    PrunedLaw out;
    out.P = static_cast<int>(keep_p.size());
    out.F = static_cast<int>(keep_f.size());
    out.joint.resize(static_cast<std::size_t>(out.P) * out.F);
    out.pp.resize(static_cast<std::size_t>(out.P));
    out.pf.resize(static_cast<std::size_t>(out.F));
    for (int i = 0; i < out.P; ++i) {
        out.pp[static_cast<std::size_t>(i)] = pp[static_cast<std::size_t>(keep_p[i])];
        for (int j = 0; j < out.F; ++j)
            out.joint[static_cast<std::size_t>(i) * out.F + j] =
                law.joint[static_cast<std::size_t>(keep_p[i]) * law.future_atoms + keep_f[j]];
    }
    for (int j = 0; j < out.F; ++j)
        out.pf[static_cast<std::size_t>(j)] = pf[static_cast<std::size_t>(keep_f[j])];
    return out;
}

// Enumerate subsets H of the "small" side; for each H the optimal G is read
// off from the signs of P(a n H) - P(a)P(H).
double alpha_on(const PrunedLaw& law, bool enumerate_future) {
    const int S = enumerate_future ? law.F : law.P;  // enumerated side size
    const int L = enumerate_future ? law.P : law.F;  // linear side size
    const auto& ps = enumerate_future ? law.pf : law.pp;
    const auto& pl = enumerate_future ? law.pp : law.pf;
    auto joint_at = [&](int l, int s) {
        return enumerate_future ? law.joint[static_cast<std::size_t>(l) * law.F + s]
                                : law.joint[static_cast<std::size_t>(s) * law.F + l];
    };
    std::vector<double> d(static_cast<std::size_t>(L), 0.0);
    double ph = 0.0;
    double best = 0.0;
    const std::uint64_t total = 1ULL << S;
    std::uint64_t prev = 0;
    for (std::uint64_t g = 1; g < total; ++g) {
        // Gray-code walk: exactly one atom enters or leaves H per step.
        const std::uint64_t cur = g ^ (g >> 1);
        const std::uint64_t diff = cur ^ prev;
        const int bit = std::countr_zero(diff);
        const double sign = (cur & diff) ? 1.0 : -1.0;
        ph += sign * ps[static_cast<std::size_t>(bit)];
        for (int l = 0; l < L; ++l) d[static_cast<std::size_t>(l)] += sign * joint_at(l, bit);
        prev = cur;
        double pos = 0.0;
        for (int l = 0; l < L; ++l) {
            const double v = d[static_cast<std::size_t>(l)] - pl[static_cast<std::size_t>(l)] * ph;
            if (v > 0.0) pos += v;
        }
        best = std::max(best, pos);
    }
    return best;
}

}  // namespace

double alpha_finite_exact(const BlockLaw& law, int max_atoms_enumerated,
                          int max_atoms_linear) {
    validate_block_law(law);
    const PrunedLaw p = prune(law);
    if (p.P == 0 || p.F == 0) return 0.0;
    const bool enumerate_future = p.F <= p.P;
    const int small = enumerate_future ? p.F : p.P;
    const int large = enumerate_future ? p.P : p.F;
    if (small > max_atoms_enumerated)
        throw std::invalid_argument("alpha_finite_exact: atom-count limit exceeded");
    if (large > max_atoms_linear)
        throw std::invalid_argument("alpha_finite_exact: atom-count limit exceeded");
    const double a = alpha_on(p, enumerate_future);
    if (a > 0.25 + 1e-12)
        throw std::logic_error("alpha_finite_exact: value above 1/4");
    return std::min(a, 0.25);
}

namespace {

std::vector<std::vector<double>> matrix_power(const std::vector<std::vector<double>>& m,
                                              long long e) {
    const std::size_t k = m.size();
    std::vector<std::vector<double>> acc(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) acc[i][i] = 1.0;
    std::vector<std::vector<double>> base = m;
    while (e > 0) {
        if (e & 1) {
            std::vector<std::vector<double>> next(k, std::vector<double>(k, 0.0));
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t l = 0; l < k; ++l) {
                    const double v = acc[i][l];
                    if (v == 0.0) continue;
                    for (std::size_t j = 0; j < k; ++j) next[i][j] += v * base[l][j];
                }
            acc = std::move(next);
        }
        std::vector<std::vector<double>> sq(k, std::vector<double>(k, 0.0));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t l = 0; l < k; ++l) {
                const double v = base[i][l];
                if (v == 0.0) continue;
                for (std::size_t j = 0; j < k; ++j) sq[i][j] += v * base[l][j];
            }
        base = std::move(sq);
        e >>= 1;
    }
    return acc;
}

// Joint block law for a finite Markov chain (used directly for markov specs
// and for anything reducible to a window chain).
BlockLaw markov_block_law(const WindowChain& wc, int alphabet_size, long long j, int gap,
                          int past_len, int future_len) {
    const long long t0 = std::max(0LL, j - past_len + 1);
    const int p = static_cast<int>(j - t0 + 1);
    const int q = future_len;
    const std::size_t S = wc.initial.size();

    std::vector<double> law_t0 = wc.initial;
    if (t0 > 0) {
        const auto pw = matrix_power(wc.transition, t0);
        std::vector<double> nxt(S, 0.0);
        for (std::size_t a = 0; a < S; ++a)
            for (std::size_t b = 0; b < S; ++b) nxt[b] += wc.initial[a] * pw[a][b];
        law_t0 = std::move(nxt);
    }

    auto atoms_count = [&](int len) {
        std::size_t c = 1;
        for (int i = 0; i < len; ++i) c *= static_cast<std::size_t>(alphabet_size);
        return c;
    };
    const std::size_t P = atoms_count(p), F = atoms_count(q);

    BlockLaw out;
    out.past_atoms = static_cast<int>(P);
    out.future_atoms = static_cast<int>(F);
    out.joint.assign(P * F, 0.0);
    out.j = j;
    out.gap = gap;
    out.past_len = p;
    out.future_len = q;

    const auto gap_pw = matrix_power(wc.transition, gap);

    // mass[s] = probability of reaching window state s at the end of the past
    // block along a given symbol tuple; tuples are walked recursively.
    struct Walker {
        const WindowChain& wc;
        const std::vector<std::vector<double>>& gap_pw;
        BlockLaw& out;
        int alphabet_size, p, q;
        std::size_t F;

        void past(int depth, std::size_t atom, const std::vector<double>& mass) {
            if (depth == p) {
                // Bridge the gap, then expand the future block.
                const std::size_t S = mass.size();
                std::vector<double> bridged(S, 0.0);
                for (std::size_t a = 0; a < S; ++a) {
                    if (mass[a] == 0.0) continue;
                    for (std::size_t b = 0; b < S; ++b) bridged[b] += mass[a] * gap_pw[a][b];
                }
                future(0, atom, 0, bridged);
                return;
            }
            const std::size_t S = mass.size();
            for (int sym = 0; sym < alphabet_size; ++sym) {
                std::vector<double> nxt(S, 0.0);
                double tot = 0.0;
                if (depth == 0) {
                    for (std::size_t s = 0; s < S; ++s)
                        if (wc.symbol[s] == sym) {
                            nxt[s] = mass[s];
                            tot += mass[s];
                        }
                } else {
                    for (std::size_t a = 0; a < S; ++a) {
                        if (mass[a] == 0.0) continue;
                        for (std::size_t b = 0; b < S; ++b) {
                            if (wc.symbol[b] != sym) continue;
                            const double v = mass[a] * wc.transition[a][b];
                            nxt[b] += v;
                            tot += v;
                        }
                    }
                }
                if (tot == 0.0) continue;
                past(depth + 1, atom * static_cast<std::size_t>(alphabet_size) +
                                    static_cast<std::size_t>(sym),
                     nxt);
            }
        }

        void future(int depth, std::size_t past_atom, std::size_t atom,
                    const std::vector<double>& mass) {
            if (depth == q) {
                double tot = 0.0;
                for (double v : mass) tot += v;
                out.joint[past_atom * F + atom] += tot;
                return;
            }
            const std::size_t S = mass.size();
            for (int sym = 0; sym < alphabet_size; ++sym) {
                std::vector<double> nxt(S, 0.0);
                double tot = 0.0;
                if (depth == 0) {
                    for (std::size_t s = 0; s < S; ++s)
                        if (wc.symbol[s] == sym) {
                            nxt[s] = mass[s];
                            tot += mass[s];
                        }
                } else {
                    for (std::size_t a = 0; a < S; ++a) {
                        if (mass[a] == 0.0) continue;
                        for (std::size_t b = 0; b < S; ++b) {
                            if (wc.symbol[b] != sym) continue;
                            const double v = mass[a] * wc.transition[a][b];
                            nxt[b] += v;
                            tot += v;
                        }
                    }
                }
                if (tot == 0.0) continue;
                future(depth + 1, past_atom,
                       atom * static_cast<std::size_t>(alphabet_size) +
                           static_cast<std::size_t>(sym),
                       nxt);
            }
        }
    };

    Walker walker{wc, gap_pw, out, alphabet_size, p, q, F};
    walker.past(0, 0, law_t0);
    return out;
}

BlockLaw product_block_law(const FiniteLaw& marginal, long long j, int gap, int past_len,
                           int future_len) {
    // Independent coordinates: the joint factorizes over every time slice.
    const long long t0 = std::max(0LL, j - past_len + 1);
    const int p = static_cast<int>(j - t0 + 1);
    const int q = future_len;
    const int k = static_cast<int>(marginal.values.size());
    auto block = [&](int len) {
        std::size_t atoms = 1;
        for (int i = 0; i < len; ++i) atoms *= static_cast<std::size_t>(k);
        std::vector<double> mass(atoms, 1.0);
        for (std::size_t a = 0; a < atoms; ++a) {
            std::size_t rem = a;
            for (int i = 0; i < len; ++i) {
                mass[a] *= marginal.probs[rem % static_cast<std::size_t>(k)];
                rem /= static_cast<std::size_t>(k);
            }
        }
        return mass;
    };
    const auto mp = block(p), mf = block(q);
    BlockLaw out;
    out.past_atoms = static_cast<int>(mp.size());
    out.future_atoms = static_cast<int>(mf.size());
    out.joint.resize(mp.size() * mf.size());
    for (std::size_t a = 0; a < mp.size(); ++a)
        for (std::size_t b = 0; b < mf.size(); ++b)
            out.joint[a * mf.size() + b] = mp[a] * mf[b];
    out.j = j;
    out.gap = gap;
    out.past_len = p;
    out.future_len = q;
    return out;
}

}  // namespace

BlockLaw exact_block_law(const EnvironmentSpec& spec, long long j, int gap, int past_len,
                         int future_len) {
    if (gap < 1 || past_len < 1 || future_len < 1 || j < 0)
        throw std::invalid_argument("exact_block_law: bad block geometry");
    if (!is_finite_alphabet(spec))
        throw std::invalid_argument("exact_block_law: spec has no finite alphabet");
    validate_spec(spec);
    const int alpha_size = static_cast<int>(alphabet_values(spec).size());
    if (const auto* iid = std::get_if<IidSpec>(&spec.variant))
        return product_block_law(*iid->law, j, gap, past_len, future_len);
    if (const auto* sc = std::get_if<ScriptedSpec>(&spec.variant)) {
        (void)sc;
        // Scripted laws are independent across time; alpha is structurally 0,
        // and for simplicity block laws use the per-index product with the
        // global alphabet. Only used by tests.
        throw std::invalid_argument("exact_block_law: scripted specs not supported");
    }
    const WindowChain wc = window_chain(spec);
    return markov_block_law(wc, alpha_size, j, gap, past_len, future_len);
}

std::string provenance_name(AlphaProvenance p) {
    switch (p) {
        case AlphaProvenance::Exact: return "exact";
        case AlphaProvenance::LowerBoundFiniteBlocks: return "lower-bound-finite-blocks";
        case AlphaProvenance::TransferBound: return "transfer-bound";
    }
    return "?";
}

DependenceTable alpha_table(const EnvironmentSpec& spec, int max_gap, int block_len,
                            const std::vector<long long>& j_range, int max_atoms_enumerated,
                            int max_atoms_linear) {
    if (max_gap < 1 || block_len < 1 || j_range.empty())
        throw std::invalid_argument("alpha_table: bad arguments");
    if (!is_finite_alphabet(spec))
        throw std::invalid_argument("alpha_table: spec has no finite alphabet");
    validate_spec(spec);

    const bool iid = std::holds_alternative<IidSpec>(spec.variant) ||
                     std::holds_alternative<ScriptedSpec>(spec.variant);
    const auto* ms = std::get_if<MovingSumSpec>(&spec.variant);
    const bool markov = std::holds_alternative<FiniteMarkovSpec>(spec.variant);

    DependenceTable table;
    table.j_values = j_range;
    table.max_gap = max_gap;
    table.alpha.assign(j_range.size(), std::vector<double>(static_cast<std::size_t>(max_gap), 0.0));
    table.sup_alpha.assign(static_cast<std::size_t>(max_gap), 0.0);
    table.provenance.assign(static_cast<std::size_t>(max_gap),
                            AlphaProvenance::LowerBoundFiniteBlocks);

    for (int n = 1; n <= max_gap; ++n) {
        const std::size_t ni = static_cast<std::size_t>(n - 1);
        if (iid || (ms && n > ms->order)) {
            // Structural independence across the gap.
            table.provenance[ni] = AlphaProvenance::Exact;
            continue;  // zeros already in place
        }
        // For Markov chains alpha depends only on the pair (Y_j, Y_{j+n});
        // finite blocks therefore reproduce the exact value.
        table.provenance[ni] =
            markov ? AlphaProvenance::Exact : AlphaProvenance::LowerBoundFiniteBlocks;
        for (std::size_t ji = 0; ji < j_range.size(); ++ji) {
            const BlockLaw law = exact_block_law(spec, j_range[ji], n, block_len, block_len);
            const double a = alpha_finite_exact(law, max_atoms_enumerated, max_atoms_linear);
            table.alpha[ji][ni] = a;
            table.sup_alpha[ni] = std::max(table.sup_alpha[ni], a);
        }
    }
    return table;
}

double cesaro_mixing(const DependenceTable& table, int n) {
    if (n < 1 || n > table.max_gap)
        throw std::invalid_argument("cesaro_mixing: insufficient table coverage");
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += table.sup_alpha[static_cast<std::size_t>(k - 1)];
    return s / static_cast<double>(n);
}

double transfer_bound(const DependenceTable& alpha_env, const CouplingBoundSeq& b, int n,
                      int r) {
    if (r < 0) r = n / 2;
    if (n <= b.N) throw std::invalid_argument("transfer_bound: need n > N");
    if (r > n - b.N) throw std::invalid_argument("transfer_bound: r out of range");
    const int gap = r + 1;
    if (gap > alpha_env.max_gap)
        throw std::invalid_argument("transfer_bound: alpha table too short");
    const int lag = n - r;
    if (lag >= static_cast<int>(b.b.size()))
        throw std::invalid_argument("transfer_bound: coupling bound sequence too short");
    return alpha_env.sup_alpha[static_cast<std::size_t>(gap - 1)] +
           b.b[static_cast<std::size_t>(lag)];
}

std::pair<double, double> sigma_composition_check(const BlockLaw& law_a1_b1,
                                                  const BlockLaw& independent_pair_law) {
    validate_block_law(law_a1_b1);
    validate_block_law(independent_pair_law);
    // The second pair must be internally independent.
    {
        const auto& l = independent_pair_law;
        std::vector<double> pp(static_cast<std::size_t>(l.past_atoms), 0.0);
        std::vector<double> pf(static_cast<std::size_t>(l.future_atoms), 0.0);
        for (int a = 0; a < l.past_atoms; ++a)
            for (int f = 0; f < l.future_atoms; ++f) {
                const double v = l.joint[static_cast<std::size_t>(a) * l.future_atoms + f];
                pp[static_cast<std::size_t>(a)] += v;
                pf[static_cast<std::size_t>(f)] += v;
            }
        for (int a = 0; a < l.past_atoms; ++a)
            for (int f = 0; f < l.future_atoms; ++f) {
                const double v = l.joint[static_cast<std::size_t>(a) * l.future_atoms + f];
                if (std::abs(v - pp[static_cast<std::size_t>(a)] * pf[static_cast<std::size_t>(f)]) >
                    1e-10)
                    throw std::invalid_argument(
                        "sigma_composition_check: supplied pair is not internally independent");
            }
    }
    // Compose: atoms of (A1 v A2) x (B1 v B2) with the pairs independent of
    // each other, so the joint is a tensor product.
    const BlockLaw& l1 = law_a1_b1;
    const BlockLaw& l2 = independent_pair_law;
    BlockLaw composed;
    composed.past_atoms = l1.past_atoms * l2.past_atoms;
    composed.future_atoms = l1.future_atoms * l2.future_atoms;
    composed.joint.assign(
        static_cast<std::size_t>(composed.past_atoms) * composed.future_atoms, 0.0);
    for (int a1 = 0; a1 < l1.past_atoms; ++a1)
        for (int b1 = 0; b1 < l1.future_atoms; ++b1)
            for (int a2 = 0; a2 < l2.past_atoms; ++a2)
                for (int b2 = 0; b2 < l2.future_atoms; ++b2) {
                    const std::size_t a =
                        static_cast<std::size_t>(a1) * l2.past_atoms + a2;
                    const std::size_t bb =
                        static_cast<std::size_t>(b1) * l2.future_atoms + b2;
                    composed.joint[a * composed.future_atoms + bb] =
                        l1.joint[static_cast<std::size_t>(a1) * l1.future_atoms + b1] *
                        l2.joint[static_cast<std::size_t>(a2) * l2.future_atoms + b2];
                }
    const double lhs = alpha_finite_exact(composed, 22, 1 << 14);
    const double rhs = alpha_finite_exact(l1, 22, 1 << 14);
    if (std::abs(lhs - rhs) > 1e-12)
        throw CheckError("sigma_composition_check: composition equality violated");
    return {lhs, rhs};
}

void write_dependence_table_csv(const DependenceTable& table, const std::string& path) {
    CsvWriter csv(path, {"j", "n", "alpha", "provenance"});
    for (std::size_t ji = 0; ji < table.j_values.size(); ++ji)
        for (int n = 1; n <= table.max_gap; ++n)
            csv.row({static_cast<std::int64_t>(table.j_values[ji]),
                     static_cast<std::int64_t>(n),
                     table.alpha[ji][static_cast<std::size_t>(n - 1)],
                     provenance_name(table.provenance[static_cast<std::size_t>(n - 1)])});
    csv.close();
}

}  // namespace mcrelab

#include "mcrelab/process.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mcrelab/csv.hpp"

namespace mcrelab {

namespace {
constexpr double kProbTol = 1e-12;

void check_prob_vector(const std::vector<double>& p, const char* what) {
    double s = 0.0;
    for (double v : p) {
        if (v < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
        s += v;
    }
    if (std::abs(s - 1.0) > kProbTol)
        throw std::invalid_argument(std::string(what) + ": probabilities do not sum to 1");
}
}  // namespace

NoisePath make_noise_path(std::uint64_t master_seed, std::uint64_t stream_id,
                          std::size_t length) {
    NoisePath p;
    p.master_seed = master_seed;
    p.stream_id = stream_id;
    RngStream g = derive_stream(master_seed, stream_id);
    p.values.resize(length);
    for (auto& v : p.values) v = g.next_uniform();
    return p;
}

void validate_law(const FiniteLaw& law) {
    if (law.values.size() != law.probs.size() || law.values.empty())
        throw std::invalid_argument("finite law: values/probs size mismatch");
    for (double v : law.values)
        if (!std::isfinite(v)) throw std::invalid_argument("finite law: non-finite value");
    check_prob_vector(law.probs, "finite law");
}

int sample_symbol(const FiniteLaw& law, double u) {
    double acc = 0.0;
    const int n = static_cast<int>(law.probs.size());
    for (int i = 0; i < n; ++i) {
        acc += law.probs[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    return n - 1;
}

void validate_spec(const EnvironmentSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidSpec>) {
                const bool finite = s.law.has_value();
                const bool cont = static_cast<bool>(s.quantile);
                if (finite == cont)
                    throw std::invalid_argument("iid spec: exactly one of law/quantile required");
                if (finite) validate_law(*s.law);
            } else if constexpr (std::is_same_v<T, FiniteMarkovSpec>) {
                const std::size_t k = s.alphabet.size();
                if (k == 0) throw std::invalid_argument("markov spec: empty alphabet");
                if (s.transition.size() != k)
                    throw std::invalid_argument("markov spec: transition size mismatch");
                for (const auto& row : s.transition) {
                    if (row.size() != k)
                        throw std::invalid_argument("markov spec: transition row size mismatch");
                    check_prob_vector(row, "markov transition row");
                }
                if (s.initial.size() != k)
                    throw std::invalid_argument("markov spec: initial law size mismatch");
                check_prob_vector(s.initial, "markov initial law");
            } else if constexpr (std::is_same_v<T, MovingSumSpec>) {
                if (s.order < 1) throw std::invalid_argument("moving sum: order must be >= 1");
                validate_law(s.base);
            } else if constexpr (std::is_same_v<T, ScriptedSpec>) {
                if (s.laws.empty()) throw std::invalid_argument("scripted spec: empty script");
                for (const auto& l : s.laws) validate_law(l);
            }
        },
        spec.variant);
}

bool is_finite_alphabet(const EnvironmentSpec& spec) {
    return std::visit(
        [](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidSpec>) return s.law.has_value();
            return true;
        },
        spec.variant);
}

namespace {

// All window sums of m+1 base values, deduplicated with a relative tolerance.
std::vector<double> moving_sum_alphabet(const MovingSumSpec& ms) {
    std::vector<double> sums{0.0};
    for (int i = 0; i <= ms.order; ++i) {
        std::vector<double> next;
        next.reserve(sums.size() * ms.base.values.size());
        for (double v : ms.base.values)
            for (double s : sums) next.push_back(s + v);
        sums = std::move(next);
    }
    std::sort(sums.begin(), sums.end());
    std::vector<double> out;
    for (double v : sums) {
        if (out.empty() || v - out.back() > 1e-12 * (1.0 + std::abs(v))) out.push_back(v);
    }
    return out;
}

int lookup_value(const std::vector<double>& sorted, double v) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), v - 1e-9);
    if (it == sorted.end()) return static_cast<int>(sorted.size()) - 1;
    return static_cast<int>(it - sorted.begin());
}

}  // namespace

std::vector<double> alphabet_values(const EnvironmentSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::vector<double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidSpec>) {
                if (!s.law) throw std::invalid_argument("alphabet_values: continuous iid spec");
                return s.law->values;
            } else if constexpr (std::is_same_v<T, FiniteMarkovSpec>) {
                return s.alphabet;
            } else if constexpr (std::is_same_v<T, MovingSumSpec>) {
                return moving_sum_alphabet(s);
            } else {
                std::vector<double> vals;
                for (const auto& l : s.laws)
                    for (double v : l.values) vals.push_back(v);
                std::sort(vals.begin(), vals.end());
                vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
                return vals;
            }
        },
        spec.variant);
}

std::uint64_t spec_hash(const EnvironmentSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&os](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidSpec>) {
                os << "iid";
                if (s.law) {
                    for (std::size_t i = 0; i < s.law->values.size(); ++i)
                        os << ';' << s.law->values[i] << ':' << s.law->probs[i];
                } else {
                    os << ";continuous";
                }
            } else if constexpr (std::is_same_v<T, FiniteMarkovSpec>) {
                os << "markov";
                for (double v : s.alphabet) os << ';' << v;
                for (const auto& row : s.transition)
                    for (double v : row) os << ',' << v;
                for (double v : s.initial) os << '|' << v;
            } else if constexpr (std::is_same_v<T, MovingSumSpec>) {
                os << "movingsum;" << s.order;
                for (std::size_t i = 0; i < s.base.values.size(); ++i)
                    os << ';' << s.base.values[i] << ':' << s.base.probs[i];
            } else {
                os << "scripted;" << s.first_index;
                for (const auto& l : s.laws) {
                    os << '|';
                    for (std::size_t i = 0; i < l.values.size(); ++i)
                        os << ';' << l.values[i] << ':' << l.probs[i];
                }
            }
        },
        spec.variant);
    const std::string str = os.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : str) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

WindowChain window_chain(const EnvironmentSpec& spec) {
    validate_spec(spec);
    WindowChain wc;
    if (const auto* mk = std::get_if<FiniteMarkovSpec>(&spec.variant)) {
        wc.transition = mk->transition;
        wc.initial = mk->initial;
        wc.value = mk->alphabet;
        wc.symbol.resize(mk->alphabet.size());
        for (std::size_t i = 0; i < wc.symbol.size(); ++i) wc.symbol[i] = static_cast<int>(i);
        return wc;
    }
    if (const auto* iid = std::get_if<IidSpec>(&spec.variant)) {
        if (!iid->law) throw std::invalid_argument("window_chain: continuous iid spec");
        const auto& law = *iid->law;
        const std::size_t k = law.values.size();
        wc.transition.assign(k, law.probs);
        wc.initial = law.probs;
        wc.value = law.values;
        wc.symbol.resize(k);
        for (std::size_t i = 0; i < k; ++i) wc.symbol[i] = static_cast<int>(i);
        return wc;
    }
    const auto* ms = std::get_if<MovingSumSpec>(&spec.variant);
    if (!ms) throw std::invalid_argument("window_chain: scripted specs are not Markov");
    // State = tuple of the last m+1 base symbols (oldest first), mixed radix.
    const int k = static_cast<int>(ms->base.values.size());
    const int w = ms->order + 1;
    std::size_t states = 1;
    for (int i = 0; i < w; ++i) states *= static_cast<std::size_t>(k);
    const auto alpha = moving_sum_alphabet(*ms);
    wc.transition.assign(states, std::vector<double>(states, 0.0));
    wc.initial.assign(states, 0.0);
    wc.value.assign(states, 0.0);
    wc.symbol.assign(states, 0);
    std::size_t radix_top = states / static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < states; ++s) {
        double sum = 0.0, p0 = 1.0;
        // Oldest symbol is the most significant digit; accumulate in a fixed
        // order so generated values match the alphabet construction exactly.
        std::size_t digits = s;
        std::vector<int> tuple(static_cast<std::size_t>(w));
        for (int i = w - 1; i >= 0; --i) {
            tuple[static_cast<std::size_t>(i)] = static_cast<int>(digits % k);
            digits /= static_cast<std::size_t>(k);
        }
        for (int i = 0; i < w; ++i) {
            sum += ms->base.values[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
            p0 *= ms->base.probs[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
        }
        wc.value[s] = sum;
        wc.symbol[s] = lookup_value(alpha, sum);
        wc.initial[s] = p0;
        // Shift window and append a fresh base draw.
        const std::size_t shifted = (s % radix_top) * static_cast<std::size_t>(k);
        for (int z = 0; z < k; ++z)
            wc.transition[s][shifted + static_cast<std::size_t>(z)] =
                ms->base.probs[static_cast<std::size_t>(z)];
    }
    return wc;
}

std::vector<EnvValue> gen_environment(const EnvironmentSpec& spec, long long start,
                                      long long horizon, RngStream& rng) {
    if (horizon < 0) throw std::invalid_argument("gen_environment: horizon must be >= 0");
    validate_spec(spec);
    std::vector<EnvValue> out(static_cast<std::size_t>(horizon) + 1);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidSpec>) {
                if (s.law) {
                    for (auto& e : out) {
                        const int sym = sample_symbol(*s.law, rng.next_uniform());
                        e = EnvValue{s.law->values[static_cast<std::size_t>(sym)], sym};
                    }
                } else {
                    for (auto& e : out) e = EnvValue{s.quantile(rng.next_uniform()), -1};
                }
            } else if constexpr (std::is_same_v<T, FiniteMarkovSpec>) {
                FiniteLaw init{s.alphabet, s.initial};
                int sym = sample_symbol(init, rng.next_uniform());
                out[0] = EnvValue{s.alphabet[static_cast<std::size_t>(sym)], sym};
                for (std::size_t i = 1; i < out.size(); ++i) {
                    FiniteLaw row{s.alphabet, s.transition[static_cast<std::size_t>(sym)]};
                    sym = sample_symbol(row, rng.next_uniform());
                    out[i] = EnvValue{s.alphabet[static_cast<std::size_t>(sym)], sym};
                }
            } else if constexpr (std::is_same_v<T, MovingSumSpec>) {
                const auto alpha = moving_sum_alphabet(s);
                const int w = s.order + 1;
                std::vector<double> window(static_cast<std::size_t>(w));
                for (auto& v : window)
                    v = s.base.values[static_cast<std::size_t>(
                        sample_symbol(s.base, rng.next_uniform()))];
                auto window_sum = [&]() {
                    double acc = 0.0;
                    for (double v : window) acc += v;  // oldest first
                    return acc;
                };
                for (std::size_t i = 0; i < out.size(); ++i) {
                    if (i > 0) {
                        window.erase(window.begin());
                        window.push_back(s.base.values[static_cast<std::size_t>(
                            sample_symbol(s.base, rng.next_uniform()))]);
                    }
                    const double y = window_sum();
                    out[i] = EnvValue{y, lookup_value(alpha, y)};
                }
            } else if constexpr (std::is_same_v<T, ScriptedSpec>) {
                for (std::size_t i = 0; i < out.size(); ++i) {
                    const long long idx = start + static_cast<long long>(i) - s.first_index;
                    if (idx < 0 || idx >= static_cast<long long>(s.laws.size()))
                        throw std::invalid_argument("scripted spec: index outside script");
                    const auto& law = s.laws[static_cast<std::size_t>(idx)];
                    const int sym = sample_symbol(law, rng.next_uniform());
                    out[i] = EnvValue{law.values[static_cast<std::size_t>(sym)], sym};
                }
            }
        },
        spec.variant);
    return out;
}

namespace {
void check_state(const StateValue& x, bool nonneg) {
    for (double v : x) {
        if (!std::isfinite(v)) throw std::runtime_error("state has non-finite component");
        if (nonneg && v < 0.0) throw std::runtime_error("negative state in a nonnegative model");
    }
}
}  // namespace

Trajectory iterate(const IterationMap& map, const StateValue& x0,
                   const std::vector<EnvValue>& env, const NoisePath& noise) {
    if (env.empty()) throw std::invalid_argument("iterate: empty environment");
    const std::size_t horizon = env.size() - 1;
    if (noise.values.size() < horizon + 1)
        throw std::invalid_argument("iterate: noise path shorter than horizon");
    Trajectory traj;
    traj.env = env;
    traj.master_seed = noise.master_seed;
    traj.stream_ids = {noise.stream_id};
    traj.states.reserve(horizon + 1);
    traj.states.push_back(x0);
    check_state(x0, map.nonnegative_state);
    for (std::size_t t = 0; t < horizon; ++t) {
        StateValue next = map.update(traj.states[t], env[t], noise.values[t + 1]);
        check_state(next, map.nonnegative_state);
        traj.states.push_back(std::move(next));
    }
    return traj;
}

Trajectory anchored_window(const IterationMap& map, const StateValue& anchor,
                           long long s, const std::vector<EnvValue>& env,
                           const NoisePath& noise) {
    if (s < 0) throw std::invalid_argument("anchored_window: s must be >= 0");
    const long long horizon = static_cast<long long>(env.size()) - 1;
    if (s > horizon) throw std::invalid_argument("anchored_window: s beyond horizon");
    if (noise.values.size() < env.size())
        throw std::invalid_argument("anchored_window: noise path shorter than horizon");
    Trajectory traj;
    traj.start_index = s;
    traj.master_seed = noise.master_seed;
    traj.stream_ids = {noise.stream_id};
    traj.states.push_back(anchor);
    traj.env.assign(env.begin() + s, env.end());
    for (long long t = s; t < horizon; ++t) {
        StateValue next = map.update(traj.states.back(), env[static_cast<std::size_t>(t)],
                                     noise.values[static_cast<std::size_t>(t) + 1]);
        check_state(next, map.nonnegative_state);
        traj.states.push_back(std::move(next));
    }
    return traj;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& csv_path,
                          const std::string& meta_path, std::uint64_t spec_hash_value) {
    const std::size_t d = traj.states.empty() ? 0 : traj.states.front().size();
    std::vector<std::string> header{"t"};
    for (std::size_t i = 0; i < d; ++i) header.push_back("state_" + std::to_string(i));
    header.push_back("env");
    CsvWriter csv(csv_path, header);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        std::vector<CsvCell> cells;
        cells.emplace_back(static_cast<std::int64_t>(traj.start_index + static_cast<long long>(i)));
        for (double v : traj.states[i]) cells.emplace_back(v);
        cells.emplace_back(i < traj.env.size() ? traj.env[i].value : 0.0);
        csv.row(cells);
    }
    csv.close();
    std::ofstream meta(meta_path);
    if (!meta) throw std::runtime_error("cannot open for writing: " + meta_path);
    meta << "{\"master_seed\": " << traj.master_seed << ", \"stream_id\": "
         << (traj.stream_ids.empty() ? 0 : traj.stream_ids[0])
         << ", \"spec_hash\": " << spec_hash_value << "}\n";
}

}  // namespace mcrelab

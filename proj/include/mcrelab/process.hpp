// Simulation engine for random iterations driven by an exogenous covariate
// sequence and uniform noise:
//
//   X_{t+1} = f(X_t, Y_t, u_{t+1}),   u_t iid uniform on [0,1].
//
// Everything is deterministic given (master_seed, stream_id) pairs.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mcrelab/rng.hpp"

namespace mcrelab {

using StateValue = std::vector<double>;

inline StateValue scalar_state(double x) { return StateValue{x}; }

// Dual representation: always carries a real value; finite-alphabet
// environments additionally carry the symbol index into their alphabet.
struct EnvValue {
    double value = 0.0;
    std::int32_t symbol = -1;
};

struct NoisePath {
    std::vector<double> values;  // entries in [0,1)
    std::uint64_t stream_id = 0;
    std::uint64_t master_seed = 0;
};

NoisePath make_noise_path(std::uint64_t master_seed, std::uint64_t stream_id,
                          std::size_t length);

// Discrete law given by atoms. Probabilities must sum to 1 within 1e-12.
struct FiniteLaw {
    std::vector<double> values;
    std::vector<double> probs;
};

void validate_law(const FiniteLaw& law);
int sample_symbol(const FiniteLaw& law, double u);

struct IidSpec {
    // Exactly one of the two is active: a finite law, or a continuous law
    // given by its quantile function.
    std::optional<FiniteLaw> law;
    std::function<double(double)> quantile;
};

struct FiniteMarkovSpec {
    std::vector<double> alphabet;
    std::vector<std::vector<double>> transition;  // row-stochastic
    std::vector<double> initial;                  // law of the first generated index
};

// Y_n = sum of base draws with indices n-m .. n (m+1 terms).
struct MovingSumSpec {
    int order = 1;  // m >= 1
    FiniteLaw base;
};

// Independent, explicitly non-stationary: index i uses laws[i - first_index].
struct ScriptedSpec {
    std::vector<FiniteLaw> laws;
    long long first_index = 0;
};

struct EnvironmentSpec {
    std::variant<IidSpec, FiniteMarkovSpec, MovingSumSpec, ScriptedSpec> variant;
};

void validate_spec(const EnvironmentSpec& spec);
bool is_finite_alphabet(const EnvironmentSpec& spec);
// Alphabet of a finite spec; for MovingSum this is the deduplicated set of
// window sums in ascending order.
std::vector<double> alphabet_values(const EnvironmentSpec& spec);
// Stable content hash used in trajectory metadata.
std::uint64_t spec_hash(const EnvironmentSpec& spec);

// Finite-state Markov representation of a finite spec (used for exact
// computations): MovingSum becomes the chain of base windows with a value map.
struct WindowChain {
    std::vector<std::vector<double>> transition;
    std::vector<double> initial;
    std::vector<double> value;    // mapped env value per state
    std::vector<int> symbol;      // alphabet index per state
};
WindowChain window_chain(const EnvironmentSpec& spec);

// Generates env values for time indices start .. start+horizon (inclusive).
std::vector<EnvValue> gen_environment(const EnvironmentSpec& spec, long long start,
                                      long long horizon, RngStream& rng);

struct IterationMap {
    std::function<StateValue(const StateValue&, const EnvValue&, double)> update;
    bool nonnegative_state = false;
};

struct Trajectory {
    std::vector<StateValue> states;  // index t - start_index
    std::vector<EnvValue> env;
    long long start_index = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> stream_ids;
};

// states[t+1] = f(states[t], env[t], noise[t+1]); env and noise must cover
// indices 0..horizon and 1..horizon respectively.
Trajectory iterate(const IterationMap& map, const StateValue& x0,
                   const std::vector<EnvValue>& env, const NoisePath& noise);

// Anchored window Z^x_{s,t}: equals the anchor for t <= s, then iterates with
// the same env/noise entries as the reference chain. Returned trajectory
// covers t in [s, horizon], horizon = env length - 1.
Trajectory anchored_window(const IterationMap& map, const StateValue& anchor,
                           long long s, const std::vector<EnvValue>& env,
                           const NoisePath& noise);

void write_trajectory_csv(const Trajectory& traj, const std::string& csv_path,
                          const std::string& meta_path, std::uint64_t spec_hash_value);

}  // namespace mcrelab

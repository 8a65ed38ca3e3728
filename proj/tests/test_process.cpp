#include <doctest.h>

#include <fstream>
#include <stdexcept>

#include <cmath>
#include <map>
#include <vector>

#include "mcrelab/process.hpp"

using namespace mcrelab;

namespace {

EnvironmentSpec iid_point_mass(double v) {
    EnvironmentSpec spec;
    spec.variant = IidSpec{FiniteLaw{{v}, {1.0}}, nullptr};
    return spec;
}

EnvironmentSpec moving_sum_fair_bit() {
    EnvironmentSpec spec;
    spec.variant = MovingSumSpec{1, FiniteLaw{{0.0, 1.0}, {0.5, 0.5}}};
    return spec;
}

}  // namespace

TEST_CASE("iid point mass environment is constant") {
    RngStream g = derive_stream(1, 0);
    const auto env = gen_environment(iid_point_mass(1.0), 0, 3, g);
    REQUIRE(env.size() == 4);
    for (const auto& e : env) CHECK(e.value == 1.0);
}

TEST_CASE("moving-sum marginals match the base convolution") {
    RngStream g = derive_stream(2, 0);
    const long long n = 1000000;
    const auto env = gen_environment(moving_sum_fair_bit(), 0, n - 1, g);
    std::map<int, long long> counts;
    for (const auto& e : env) ++counts[e.symbol];
    const double p0 = static_cast<double>(counts[0]) / n;
    const double p1 = static_cast<double>(counts[1]) / n;
    const double p2 = static_cast<double>(counts[2]) / n;
    // P(Y=0) = P(Y=2) = 1/4, P(Y=1) = 1/2; three standard errors.
    const double se_quarter = std::sqrt(0.25 * 0.75 / n);
    const double se_half = std::sqrt(0.5 * 0.5 / n);
    CHECK(std::abs(p0 - 0.25) < 3 * se_quarter * 2);  // adjacent sums correlate, widen
    CHECK(std::abs(p1 - 0.5) < 3 * se_half * 2);
    CHECK(std::abs(p2 - 0.25) < 3 * se_quarter * 2);
}

TEST_CASE("deterministic two-state markov alternates") {
    EnvironmentSpec spec;
    spec.variant = FiniteMarkovSpec{{0.0, 1.0}, {{0.0, 1.0}, {1.0, 0.0}}, {1.0, 0.0}};
    RngStream g = derive_stream(3, 0);
    const auto env = gen_environment(spec, 0, 5, g);
    for (std::size_t i = 0; i < env.size(); ++i)
        CHECK(env[i].symbol == static_cast<int>(i % 2));
}

TEST_CASE("malformed specs are rejected") {
    EnvironmentSpec bad_rows;
    bad_rows.variant = FiniteMarkovSpec{{0.0, 1.0}, {{0.5, 0.6}, {0.5, 0.5}}, {1.0, 0.0}};
    CHECK_THROWS_AS(validate_spec(bad_rows), std::invalid_argument);
    EnvironmentSpec bad_init;
    bad_init.variant = FiniteMarkovSpec{{0.0, 1.0}, {{0.5, 0.5}, {0.5, 0.5}}, {0.9, 0.0}};
    CHECK_THROWS_AS(validate_spec(bad_init), std::invalid_argument);
    EnvironmentSpec bad_order;
    bad_order.variant = MovingSumSpec{0, FiniteLaw{{0.0}, {1.0}}};
    CHECK_THROWS_AS(validate_spec(bad_order), std::invalid_argument);
}

TEST_CASE("iterate: constant, accumulating and Lindley maps") {
    IterationMap zero{[](const StateValue&, const EnvValue&, double) { return scalar_state(0.0); },
                      false};
    const auto env = [] {
        RngStream g = derive_stream(4, 0);
        return gen_environment(iid_point_mass(0.5), 0, 10, g);
    }();
    const auto noise = make_noise_path(4, 1, 11);
    const auto traj = iterate(zero, scalar_state(7.0), env, noise);
    REQUIRE(traj.states.size() == 11);
    CHECK(traj.states[0][0] == 7.0);
    for (std::size_t t = 1; t < traj.states.size(); ++t) CHECK(traj.states[t][0] == 0.0);

    IterationMap accumulate{
        [](const StateValue& x, const EnvValue& y, double) { return scalar_state(x[0] + y.value); },
        false};
    std::vector<EnvValue> env123{{1.0, -1}, {2.0, -1}, {3.0, -1}, {0.0, -1}};
    const auto noise4 = make_noise_path(4, 2, 4);
    const auto acc = iterate(accumulate, scalar_state(0.0), env123, noise4);
    CHECK(acc.states[0][0] == 0.0);
    CHECK(acc.states[1][0] == 1.0);
    CHECK(acc.states[2][0] == 3.0);
    CHECK(acc.states[3][0] == 6.0);

    // Lindley with zero service and nonnegative noise term is nonincreasing.
    IterationMap lindley{[](const StateValue& w, const EnvValue& s, double u) {
                             return scalar_state(std::max(0.0, w[0] + s.value - u));
                         },
                         true};
    RngStream gl = derive_stream(4, 3);
    const auto zero_service = gen_environment(iid_point_mass(0.0), 0, 20, gl);
    const auto wt = iterate(lindley, scalar_state(3.0), zero_service, make_noise_path(4, 4, 21));
    for (std::size_t t = 1; t < wt.states.size(); ++t)
        CHECK(wt.states[t][0] <= wt.states[t - 1][0]);
}

TEST_CASE("anchored window reproduces the reference tail under shared noise") {
    IterationMap map{[](const StateValue& x, const EnvValue& y, double u) {
                         return scalar_state(0.7 * x[0] + y.value + 0.1 * u);
                     },
                     false};
    RngStream g = derive_stream(5, 0);
    const auto env = gen_environment(moving_sum_fair_bit(), 0, 30, g);
    const auto noise = make_noise_path(5, 1, 31);
    const auto ref = iterate(map, scalar_state(2.0), env, noise);

    SUBCASE("s = horizon gives a single element") {
        const auto w = anchored_window(map, scalar_state(9.0), 30, env, noise);
        REQUIRE(w.states.size() == 1);
        CHECK(w.states[0][0] == 9.0);
    }
    SUBCASE("anchoring at X_s reproduces the tail exactly") {
        const long long s = 13;
        const auto w = anchored_window(map, ref.states[s], s, env, noise);
        for (std::size_t i = 0; i < w.states.size(); ++i)
            CHECK(w.states[i][0] == ref.states[s + i][0]);
    }
    SUBCASE("contractive map halves the anchor gap each step") {
        IterationMap half{[](const StateValue& x, const EnvValue&, double) {
                              return scalar_state(0.5 * x[0]);
                          },
                          false};
        const auto a = anchored_window(half, scalar_state(0.0), 0, env, noise);
        const auto b = anchored_window(half, scalar_state(8.0), 0, env, noise);
        for (std::size_t i = 0; i < a.states.size(); ++i)
            CHECK(std::abs(b.states[i][0] - a.states[i][0]) ==
                  doctest::Approx(8.0 * std::pow(0.5, static_cast<double>(i))));
    }
}

TEST_CASE("replaying identical seeds reproduces trajectories bit for bit") {
    IterationMap map{[](const StateValue& x, const EnvValue& y, double u) {
                         return scalar_state(std::max(0.0, x[0] + y.value - 2.0 * u));
                     },
                     true};
    for (int round = 0; round < 2; ++round) {
        RngStream g1 = derive_stream(77, 0);
        RngStream g2 = derive_stream(77, 0);
        const auto e1 = gen_environment(moving_sum_fair_bit(), 0, 50, g1);
        const auto e2 = gen_environment(moving_sum_fair_bit(), 0, 50, g2);
        const auto n1 = make_noise_path(77, 1, 51);
        const auto n2 = make_noise_path(77, 1, 51);
        const auto t1 = iterate(map, scalar_state(0.0), e1, n1);
        const auto t2 = iterate(map, scalar_state(0.0), e2, n2);
        for (std::size_t i = 0; i < t1.states.size(); ++i)
            CHECK(t1.states[i][0] == t2.states[i][0]);
    }
}

TEST_CASE("moving-sum blocks separated by more than the order are independent") {
    // Exact joint check through the window chain: P(Y_0 = a, Y_2 = b) should
    // factor for order 1.
    const auto spec = moving_sum_fair_bit();
    const WindowChain wc = window_chain(spec);
    const std::size_t S = wc.initial.size();
    // two-step transition
    std::vector<std::vector<double>> p2(S, std::vector<double>(S, 0.0));
    for (std::size_t a = 0; a < S; ++a)
        for (std::size_t m = 0; m < S; ++m)
            for (std::size_t b = 0; b < S; ++b)
                p2[a][b] += wc.transition[a][m] * wc.transition[m][b];
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> marg0, marg2;
    for (std::size_t a = 0; a < S; ++a)
        for (std::size_t b = 0; b < S; ++b) {
            const double p = wc.initial[a] * p2[a][b];
            joint[{wc.symbol[a], wc.symbol[b]}] += p;
            marg0[wc.symbol[a]] += p;
        }
    for (std::size_t b = 0; b < S; ++b) {
        double mass = 0.0;
        for (std::size_t a = 0; a < S; ++a) mass += wc.initial[a] * p2[a][b];
        marg2[wc.symbol[b]] += mass;
    }
    for (const auto& [key, p] : joint)
        CHECK(p == doctest::Approx(marg0[key.first] * marg2[key.second]).epsilon(1e-12));
}

TEST_CASE("nonnegative state space is enforced") {
    IterationMap bad{[](const StateValue& x, const EnvValue&, double) {
                         return scalar_state(x[0] - 1.0);
                     },
                     true};
    const auto env = [] {
        RngStream g = derive_stream(6, 0);
        return gen_environment(iid_point_mass(0.0), 0, 3, g);
    }();
    CHECK_THROWS_AS(iterate(bad, scalar_state(0.5), env, make_noise_path(6, 1, 4)),
                    std::runtime_error);
}

TEST_CASE("scripted spec draws from the per-index law") {
    ScriptedSpec sc;
    sc.first_index = 0;
    sc.laws = {FiniteLaw{{5.0}, {1.0}}, FiniteLaw{{6.0}, {1.0}}, FiniteLaw{{7.0}, {1.0}}};
    EnvironmentSpec spec;
    spec.variant = sc;
    RngStream g = derive_stream(8, 0);
    const auto env = gen_environment(spec, 0, 2, g);
    CHECK(env[0].value == 5.0);
    CHECK(env[1].value == 6.0);
    CHECK(env[2].value == 7.0);
    RngStream g2 = derive_stream(8, 1);
    CHECK_THROWS_AS(gen_environment(spec, 0, 5, g2), std::invalid_argument);
}

TEST_CASE("trajectory csv dump and sidecar metadata") {
    IterationMap map{[](const StateValue& x, const EnvValue& y, double u) {
                         return scalar_state(std::max(0.0, x[0] + y.value - u));
                     },
                     true};
    EnvironmentSpec spec;
    spec.variant = MovingSumSpec{1, FiniteLaw{{0.0, 1.0}, {0.5, 0.5}}};
    RngStream g = derive_stream(9, 0);
    const auto env = gen_environment(spec, 0, 5, g);
    const auto traj = iterate(map, scalar_state(0.0), env, make_noise_path(9, 1, 6));
    const std::string csv = "/tmp/mcrelab_traj_test.csv";
    const std::string meta = "/tmp/mcrelab_traj_test.json";
    write_trajectory_csv(traj, csv, meta, spec_hash(spec));
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,state_0,env");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);  // states 0..5
    std::ifstream jm(meta);
    std::string meta_body((std::istreambuf_iterator<char>(jm)), std::istreambuf_iterator<char>());
    CHECK(meta_body.find("master_seed") != std::string::npos);
    CHECK(meta_body.find("spec_hash") != std::string::npos);
    std::remove(csv.c_str());
    std::remove(meta.c_str());
}

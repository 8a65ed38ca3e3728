// Mean one-step contraction without long-term contraction: the two-state
// moving-sum environment Y_n = Z_n + Z_{n-1} over fair bits, with gamma
// supported on {0, 1, 2}. The product expectations a_n follow an exact
// two-dimensional linear recursion.
#pragma once

#include <cstdint>
#include <vector>

namespace mcrelab::felsmann {

struct FelsmannParams {
    double gamma0 = 3.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double epsilon = 0.0;  // in [0, 1/4)
};

struct Sequences {
    std::vector<double> a;  // a[n] = E prod_{k=1..n} gamma(Y_k), n = 0..n_max
    std::vector<double> b;
    std::vector<double> c;
};

// b_{n+1} = (g0 b_n + g1 c_n)/2, c_{n+1} = (g1 b_n + g2 c_n)/2 with
// b_0 = c_0 = 1/2 and g_i = gamma_i + epsilon; a_n = b_n + c_n.
Sequences felsmann_exact(const FelsmannParams& params, int n_max);

struct Report {
    double epsilon = 0.0;
    double mean_gamma = 0.0;                  // E gamma_eps(Y_0) = 3/4 + eps
    std::vector<double> exact_a;              // exact recursion values
    std::vector<double> root_lower_envelope;  // (3/2) 2^{-1/n} per n >= 1
    std::vector<double> mc_mean;              // MC estimate of a_n
    std::vector<double> mc_se;
    long long replicas = 0;
};

// Monte Carlo cross-check runs the moving-sum environment through the
// simulation engine; asserts the n-th roots of a_n dominate the envelope.
Report felsmann_report(double epsilon, int n_max, long long replicas,
                       std::uint64_t master_seed);

}  // namespace mcrelab::felsmann

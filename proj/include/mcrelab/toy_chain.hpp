// Fully enumerable binary threshold chain in a two-state Markov environment:
//
//   X_{t+1} = 1{ u_{t+1} < p(X_t, Y_t) },   X_0 fixed.
//
// Noise enters through finitely many thresholds, so path laws, response
// dependence coefficients and no-coalescence probabilities are all exact
// finite sums. Used to check the mixing transfer bound without Monte Carlo.
#pragma once

#include <vector>

#include "mcrelab/mixing.hpp"
#include "mcrelab/process.hpp"

namespace mcrelab::toy {

struct ThresholdChainSpec {
    std::vector<std::vector<double>> transition{{0.8, 0.2}, {0.3, 0.7}};
    // p[x][y] = P(next state = 1 | X = x, Y = y).
    double p[2][2] = {{0.15, 0.6}, {0.4, 0.9}};
    int x0 = 0;
    int horizon = 5;
};

struct TransferCheckRow {
    int n = 0;
    int r = 0;
    double alpha_x = 0.0;    // exact response coefficient within the horizon
    double alpha_env = 0.0;  // exact environment coefficient at gap r+1
    double b = 0.0;          // exact no-coalescence bound at lag n-r
    double bound = 0.0;      // alpha_env + b
    bool ok = false;
};

struct TransferCheckReport {
    std::vector<double> alpha_x;    // index n, exact (max over block splits)
    std::vector<double> alpha_env;  // index gap, exact pair coefficient
    std::vector<double> b;          // index lag, max over restart indices
    std::vector<TransferCheckRow> rows;
    int violations = 0;
};

// Stationary law of the environment transition matrix.
std::vector<double> stationary_law(const std::vector<std::vector<double>>& transition);

// Exact joint law of the full response path (X_0..X_H) as 2^{H+1} atom
// masses, by enumeration over environment paths and noise intervals.
std::vector<double> exact_path_law(const ThresholdChainSpec& spec);

// Exact alpha between (X_0..X_j) and (X_{j+n}..X_H), maximized over j.
double exact_alpha_x(const ThresholdChainSpec& spec, const std::vector<double>& path_law,
                     int n);

// Exact sup over restart indices j of P(Z^{X_j}_{j,j+k} != Z^{x0}_{j,j+k}).
std::vector<double> exact_coalescence_bound(const ThresholdChainSpec& spec);

TransferCheckReport transfer_soundness_check(const ThresholdChainSpec& spec);

}  // namespace mcrelab::toy

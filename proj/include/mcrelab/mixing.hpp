// Exact alpha-dependence computation on finite block laws, dependence tables
// for finite-alphabet environments, Cesaro weak-mixing sums, and the
// environment-to-response transfer bound.
#pragma once

#include <string>
#include <vector>

#include "mcrelab/process.hpp"

namespace mcrelab {

// Joint law of a past block and a future block over finite atom sets.
// joint is row-major: joint[p * future_atoms + f].
struct BlockLaw {
    int past_atoms = 0;
    int future_atoms = 0;
    std::vector<double> joint;
    // Metadata (informational).
    long long j = 0;
    int gap = 0;
    int past_len = 0;
    int future_len = 0;
};

void validate_block_law(const BlockLaw& law);

// sup over unions of atoms G (past), H (future) of |P(G n H) - P(G)P(H)|.
// Exact: subsets are enumerated on the smaller side; for a fixed H the
// maximizing G is the union of atoms with positive P(a n H) - P(a)P(H).
// Zero-probability atoms are pruned first. Throws if the enumerated side has
// more than `max_atoms_enumerated` atoms or the other side more than
// `max_atoms_linear` after pruning.
double alpha_finite_exact(const BlockLaw& law, int max_atoms_enumerated = 12,
                          int max_atoms_linear = 4096);

enum class AlphaProvenance { Exact, LowerBoundFiniteBlocks, TransferBound };
std::string provenance_name(AlphaProvenance p);

struct DependenceTable {
    std::vector<long long> j_values;
    int max_gap = 0;
    // alpha[j_index][n-1] for gaps n = 1..max_gap.
    std::vector<std::vector<double>> alpha;
    std::vector<double> sup_alpha;                // per gap
    std::vector<AlphaProvenance> provenance;      // per gap
};

// Exact joint law of blocks (Y_{j-p+1..j}) x (Y_{j+n..j+n+q-1}) for a finite
// spec. Past blocks reaching below index 0 are truncated at 0.
BlockLaw exact_block_law(const EnvironmentSpec& spec, long long j, int gap, int past_len,
                         int future_len);

// Fills alpha[j][n] by exact enumeration on length-block_len blocks.
// Structural zeros (iid, scripted, MovingSum with gap > order) and
// finite-Markov values are flagged Exact; other values are lower bounds.
DependenceTable alpha_table(const EnvironmentSpec& spec, int max_gap, int block_len,
                            const std::vector<long long>& j_range,
                            int max_atoms_enumerated = 12, int max_atoms_linear = 4096);

// (1/n) sum_{k=1..n} sup_alpha[k].
double cesaro_mixing(const DependenceTable& table, int n);

struct CouplingBoundSeq {
    std::vector<double> b;  // b[n] for n = 0..len-1 (b[0] unused)
    int N = 0;              // bound valid for n >= N
};

// alpha^Y(r+1) + b(n-r); default policy r = floor(n/2) when r < 0 is passed.
double transfer_bound(const DependenceTable& alpha_env, const CouplingBoundSeq& b, int n,
                      int r);

// Computes alpha(A1 v A2, B1 v B2) and alpha(A1, B1) exactly, where the
// second pair is independent of the first and internally independent. The two
// values agree within 1e-12; a violation throws.
std::pair<double, double> sigma_composition_check(const BlockLaw& law_a1_b1,
                                                  const BlockLaw& independent_pair_law);

void write_dependence_table_csv(const DependenceTable& table, const std::string& path);

}  // namespace mcrelab

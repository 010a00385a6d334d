#pragma once

#include <vector>

#include "sfrf/strategy.hpp"

namespace sfrf {

// Null model for how often a single feature wins node optimizations in a
// forest in which every feature is irrelevant: each node picks its split
// feature uniformly from the candidate subset in force at that node.
//
// F  total features, F_n  candidate subset size, T  trees,
// K  average internal (split) node count per tree — a real number, since it
// is typically measured from a trained forest.
struct NullModelParams {
    int total_features = 0;       // F
    int subset_size = 0;          // F_n
    int num_trees = 0;            // T
    double avg_internal_nodes = 0.0;  // K
    Strategy strategy = Strategy::PerNode;

    void validate() const;  // throws std::invalid_argument

    // Total number of split decisions the model accounts for; selection
    // counts live in [0, node_budget]. Under per-node sampling the budget is
    // round(T*K); under per-tree sampling each tree contributes round(K)
    // nodes, so the budget is T*round(K).
    long long node_budget() const;
};

// Integer partition of k: parts in nonincreasing order, each >= 1.
struct Partition {
    std::vector<int> parts;

    int value() const;  // sum of parts
    // multiplicities()[v] = number of parts equal to v, for v in [0, value()].
    std::vector<int> multiplicities() const;
};

// Partition enumeration is exponential; p(60) is already ~1e6.
inline constexpr int kPartitionCap = 60;

// All partitions of k (1 <= k <= kPartitionCap) in deterministic
// lexicographically-descending order. Throws std::length_error above the cap.
std::vector<Partition> enumerate_partitions(int k);

// Per-node subsampling: every node draws a fresh subset, so a fixed feature
// wins any given node with probability 1/F independently. Selection counts
// are Binomial(round(T*K), 1/F).
double strategy1_pmf(const NullModelParams& params, int k);

// Probability that a fixed feature lands in a per-tree candidate subset.
// The hypergeometric ratio C(F-1, F_n-1) / C(F, F_n) collapses to F_n / F.
double per_tree_inclusion_prob(int total_features, int subset_size);

// Per-tree subsampling, single tree: with the feature in the subset its win
// count over round(K) nodes is Binomial(round(K), 1/F_n); missing the subset
// forces count 0.
double strategy2_per_tree_pmf(const NullModelParams& params, int xi);

// Per-tree subsampling, whole forest, via integer partitions of k: each
// partition assigns per-tree win counts and a multinomial coefficient counts
// the tree orderings. Exact but exponential in k (see kPartitionCap).
double strategy2_pmf_partitions(const NullModelParams& params, int k);

// Same distribution via T-fold convolution of the single-tree pmf. Returns
// pmf values for k = 0..k_max. Truncation at k_max is exact for the prefix:
// convolution never moves mass downward.
std::vector<double> strategy2_pmf_convolution(const NullModelParams& params,
                                              int k_max);

// P(count > kappa) under the configured strategy, clamped to [0, 1].
double tail_prob(const NullModelParams& params, int kappa);

// Expected number of null features exceeding kappa: tail_prob * F.
double expected_false_positives(const NullModelParams& params, int kappa);

struct ThresholdDecision {
    double alpha = 0.0;     // requested bound on tail_prob
    long long kappa_star = 0;
    double tail_prob = 0.0;  // achieved P(count > kappa_star)
    double expected_fp = 0.0;
};

// Smallest kappa in [0, node_budget) with tail_prob <= alpha. Features whose
// selection count strictly exceeds kappa_star are declared relevant. Throws
// std::runtime_error if no kappa in range qualifies.
ThresholdDecision solve_threshold(const NullModelParams& params, double alpha);

}  // namespace sfrf

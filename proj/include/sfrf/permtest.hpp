#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfrf/dataset.hpp"
#include "sfrf/forest.hpp"

namespace sfrf {

struct PermTestResult {
    std::vector<int> observed_counts;   // per feature, unpermuted forest
    std::vector<double> p_values;       // per feature, add-one smoothed
    int num_permutations = 0;           // B
    std::vector<std::string> warnings;
};

// Seed streams for permutation b, derived from the forest seed so the whole
// test is reproducible from one number.
std::uint64_t perm_shuffle_seed(std::uint64_t master, int permutation_index);
std::uint64_t perm_forest_seed(std::uint64_t master, int permutation_index);

// Trains one forest on the data as-is, then B forests on label-permuted
// copies, and reports p[f] = (1 + #{b : count_b[f] >= observed[f]}) / (B + 1).
// If requested_alpha > 0 and even the smallest attainable p-value 1/(B+1)
// exceeds it, a warning is recorded.
PermTestResult permutation_pvalues(const Dataset& data,
                                   const ForestConfig& config, int B,
                                   double requested_alpha = 0.0,
                                   int num_threads = 1);

// Features with p <= alpha, sorted.
std::vector<int> mark_relevant(const PermTestResult& result, double alpha);

}  // namespace sfrf

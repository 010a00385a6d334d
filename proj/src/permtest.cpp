#include "sfrf/permtest.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "sfrf/parallel.hpp"
#include "sfrf/rng.hpp"

namespace sfrf {

std::uint64_t perm_shuffle_seed(std::uint64_t master, int permutation_index) {
    return derive_seed(derive_seed(master, 0x5B75FFu), permutation_index);
}

std::uint64_t perm_forest_seed(std::uint64_t master, int permutation_index) {
    return derive_seed(derive_seed(master, 0xF03E57u), permutation_index);
}

PermTestResult permutation_pvalues(const Dataset& data,
                                   const ForestConfig& config, int B,
                                   double requested_alpha, int num_threads) {
    if (B < 1) throw std::invalid_argument("permtest: need at least one permutation");
    config.validate();
    data.validate();

    PermTestResult result;
    result.num_permutations = B;
    result.observed_counts =
        train_forest(config, data, num_threads).selection_counts;

    const int F = data.feature_count;
    std::vector<int> exceed(F, 0);
    std::vector<std::vector<int>> perm_counts(B);
    parallel_for(B, num_threads, [&](int b) {
        Dataset permuted = data;
        std::mt19937_64 shuffle_rng(perm_shuffle_seed(config.rng_seed, b));
        std::shuffle(permuted.labels.begin(), permuted.labels.end(), shuffle_rng);
        ForestConfig cfg = config;
        cfg.rng_seed = perm_forest_seed(config.rng_seed, b);
        perm_counts[b] = train_forest(cfg, permuted, 1).selection_counts;
    });
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            if (perm_counts[b][f] >= result.observed_counts[f]) ++exceed[f];

    result.p_values.resize(F);
    for (int f = 0; f < F; ++f)
        result.p_values[f] = static_cast<double>(1 + exceed[f]) / (B + 1);

    if (requested_alpha > 0.0 && 1.0 / (B + 1) > requested_alpha)
        result.warnings.push_back(
            "smallest attainable p-value 1/(B+1) = " +
            std::to_string(1.0 / (B + 1)) + " exceeds requested alpha " +
            std::to_string(requested_alpha) + "; increase permutations");
    return result;
}

std::vector<int> mark_relevant(const PermTestResult& result, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("permtest: alpha must be in (0, 1]");
    std::vector<int> selected;
    for (int f = 0; f < static_cast<int>(result.p_values.size()); ++f)
        if (result.p_values[f] <= alpha) selected.push_back(f);
    return selected;
}

}  // namespace sfrf

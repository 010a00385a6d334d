#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfrf/dataset.hpp"
#include "sfrf/strategy.hpp"

namespace sfrf {

struct ForestConfig {
    int num_trees = 0;
    int subset_size = 0;  // candidate features per draw
    Strategy strategy = Strategy::PerNode;
    double bagging_ratio = 0.5;     // fraction of samples per tree, (0, 1]
    int min_samples_to_split = 5;
    int max_depth = 0;              // 0 = unlimited
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct Stump {
    int feature = -1;
    double threshold = 0.0;  // route sample left iff value < threshold
};

struct TreeNode {
    Stump split;        // valid only for internal nodes
    int left = -1;      // child indices; -1 for leaves
    int right = -1;
    int class_counts[2] = {0, 0};  // training samples reaching this node
    bool is_leaf() const { return left < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;   // preorder, root at 0; empty if never grown
    std::vector<int> subset;       // per-tree candidate features (per-tree mode)
    int internal_node_count = 0;
};

struct TrainedForest {
    std::vector<Tree> trees;
    std::vector<int> selection_counts;      // per feature, summed over trees
    std::vector<int> internal_node_counts;  // per tree
    double avg_internal_nodes = 0.0;        // measured K
    int feature_count = 0;
};

// Impurity decrease of a binary split, by label lists. Both children must be
// nonempty and partition the parent. Always >= 0.
double gini_gain(const std::vector<int>& parent_labels,
                 const std::vector<int>& left_labels,
                 const std::vector<int>& right_labels);

struct SplitCandidate {
    Stump stump;
    double gain = 0.0;
};

// Best stump over the candidate features, thresholds taken midway between
// consecutive distinct sorted values. Ties break toward the lowest feature
// index, then the smallest threshold. Returns nullopt when no split has
// positive gain.
std::optional<SplitCandidate> optimize_node(std::span<const int> samples,
                                            std::span<const int> candidate_features,
                                            const Dataset& data);

// Grows config.num_trees CART-style trees on bootstrap-free bags
// (ceil(bagging_ratio * S) samples drawn without replacement) and tallies how
// often each feature wins a node optimization. Each tree consumes its own RNG
// stream derived from rng_seed, so results are independent of num_threads.
// Unlike the standalone optimize_node, exact gain ties between features are
// broken uniformly at random from the tree's stream: a fixed preference order
// would skew selection counts away from the uniform-winner null.
TrainedForest train_forest(const ForestConfig& config, const Dataset& data,
                           int num_threads = 1);

// Majority vote over trees; each tree votes its leaf's majority class.
// Throws std::runtime_error for an empty forest.
int predict(const TrainedForest& forest, std::span<const double> sample);

}  // namespace sfrf

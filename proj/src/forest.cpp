#include "sfrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sfrf/parallel.hpp"
#include "sfrf/rng.hpp"

namespace sfrf {

void ForestConfig::validate() const {
    if (num_trees < 0) throw std::invalid_argument("forest: negative tree count");
    if (subset_size < 1) throw std::invalid_argument("forest: subset size must be >= 1");
    if (!(bagging_ratio > 0.0) || bagging_ratio > 1.0)
        throw std::invalid_argument("forest: bagging ratio must be in (0, 1]");
    if (min_samples_to_split < 2)
        throw std::invalid_argument("forest: min samples to split must be >= 2");
    if (max_depth < 0) throw std::invalid_argument("forest: negative max depth");
}

namespace {

inline double gini_from_counts(double c0, double c1) {
    double n = c0 + c1;
    if (n <= 0.0) return 0.0;
    double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

// Impurity decrease when (l0, l1) of the parent's (n0, n1) go left.
inline double gain_from_counts(int n0, int n1, int l0, int l1) {
    double n = n0 + n1;
    double nl = l0 + l1, nr = n - nl;
    return gini_from_counts(n0, n1) -
           (nl / n) * gini_from_counts(l0, l1) -
           (nr / n) * gini_from_counts(n0 - l0, n1 - l1);
}

void count_labels(const std::vector<int>& labels, int& c0, int& c1) {
    c0 = c1 = 0;
    for (int y : labels) {
        if (y == 0)
            ++c0;
        else if (y == 1)
            ++c1;
        else
            throw std::invalid_argument("gini_gain: labels must be 0 or 1");
    }
}

}  // namespace

double gini_gain(const std::vector<int>& parent_labels,
                 const std::vector<int>& left_labels,
                 const std::vector<int>& right_labels) {
    if (left_labels.empty() || right_labels.empty())
        throw std::invalid_argument("gini_gain: both children must be nonempty");
    if (left_labels.size() + right_labels.size() != parent_labels.size())
        throw std::invalid_argument("gini_gain: children must partition the parent");
    int n0, n1, l0, l1, r0, r1;
    count_labels(parent_labels, n0, n1);
    count_labels(left_labels, l0, l1);
    count_labels(right_labels, r0, r1);
    if (l0 + r0 != n0 || l1 + r1 != n1)
        throw std::invalid_argument("gini_gain: children must partition the parent");
    return gain_from_counts(n0, n1, l0, l1);
}

std::optional<SplitCandidate> optimize_node(std::span<const int> samples,
                                            std::span<const int> candidate_features,
                                            const Dataset& data) {
    const int m = static_cast<int>(samples.size());
    if (m < 2 || candidate_features.empty()) return std::nullopt;

    int n0 = 0, n1 = 0;
    for (int s : samples) (data.labels[s] ? n1 : n0)++;
    if (n0 == 0 || n1 == 0) return std::nullopt;  // already pure

    std::vector<int> feats(candidate_features.begin(), candidate_features.end());
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());

    std::vector<std::pair<double, int>> vals(m);  // (value, label)
    SplitCandidate best;  // gain 0: only strictly positive splits qualify

    for (int f : feats) {
        for (int i = 0; i < m; ++i)
            vals[i] = {data.at(samples[i], f), data.labels[samples[i]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;  // constant

        int l0 = 0, l1 = 0;
        for (int i = 0; i + 1 < m; ++i) {
            (vals[i].second ? l1 : l0)++;
            double a = vals[i].first, b = vals[i + 1].first;
            if (a == b) continue;
            double gain = gain_from_counts(n0, n1, l0, l1);
            if (gain > best.gain) {
                double tau = a + (b - a) / 2.0;
                if (!(a < tau)) tau = b;  // midpoint collapsed onto a
                best.gain = gain;
                best.stump = {f, tau};
            }
        }
    }
    if (best.gain > 0.0) return best;
    return std::nullopt;
}

namespace {

// Training-time variant of optimize_node. Exact gain ties across features are
// common (gains depend only on label counts), and a fixed tie order would
// systematically favor some features, breaking the uniform-winner null the
// count model is built on. Ties are therefore broken uniformly at random from
// the tree's own stream; within a feature the smallest threshold still wins.
std::optional<SplitCandidate> optimize_node_for_training(
    std::span<const int> samples, std::span<const int> candidate_features,
    const Dataset& data, std::mt19937_64& rng, std::vector<std::pair<double, int>>& vals) {
    const int m = static_cast<int>(samples.size());
    if (m < 2 || candidate_features.empty()) return std::nullopt;

    int n0 = 0, n1 = 0;
    for (int s : samples) (data.labels[s] ? n1 : n0)++;
    if (n0 == 0 || n1 == 0) return std::nullopt;

    vals.resize(m);
    SplitCandidate best;
    int tied = 0;
    for (int f : candidate_features) {
        for (int i = 0; i < m; ++i)
            vals[i] = {data.at(samples[i], f), data.labels[samples[i]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;

        double feature_gain = 0.0;
        double feature_tau = 0.0;
        int l0 = 0, l1 = 0;
        for (int i = 0; i + 1 < m; ++i) {
            (vals[i].second ? l1 : l0)++;
            double a = vals[i].first, b = vals[i + 1].first;
            if (a == b) continue;
            double gain = gain_from_counts(n0, n1, l0, l1);
            if (gain > feature_gain) {
                double tau = a + (b - a) / 2.0;
                if (!(a < tau)) tau = b;
                feature_gain = gain;
                feature_tau = tau;
            }
        }
        if (feature_gain <= 0.0) continue;
        if (feature_gain > best.gain) {
            best.gain = feature_gain;
            best.stump = {f, feature_tau};
            tied = 1;
        } else if (feature_gain == best.gain) {
            // reservoir step: keep each tied feature with equal probability
            ++tied;
            if (std::uniform_int_distribution<int>(0, tied - 1)(rng) == 0)
                best.stump = {f, feature_tau};
        }
    }
    if (best.gain > 0.0) return best;
    return std::nullopt;
}

struct GrowScratch {
    std::vector<int> bag;
    std::vector<int> sample_perm;
    std::vector<int> feature_perm;
    std::vector<int> candidates;
    std::vector<std::pair<double, int>> vals;
};

Tree grow_tree(const ForestConfig& config, const Dataset& data, int tree_index,
               GrowScratch& scratch) {
    std::mt19937_64 rng(derive_seed(config.rng_seed, static_cast<std::uint64_t>(tree_index)));
    const int S = data.sample_count;
    const int F = data.feature_count;
    const int bag_size = static_cast<int>(
        std::ceil(config.bagging_ratio * static_cast<double>(S)));

    Tree tree;
    // fresh identity permutations per tree: tree output depends only on
    // (config, data, tree_index)
    scratch.sample_perm.clear();
    scratch.feature_perm.clear();
    sample_subset(S, bag_size, rng, scratch.sample_perm, scratch.bag);
    if (config.strategy == Strategy::PerTree)
        sample_subset(F, config.subset_size, rng, scratch.feature_perm, tree.subset);

    std::vector<int>& idx = scratch.bag;
    struct Item {
        int node, begin, end, depth;
    };
    std::vector<Item> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, bag_size, 0});

    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        TreeNode& node = tree.nodes[it.node];
        int c0 = 0, c1 = 0;
        for (int i = it.begin; i < it.end; ++i) (data.labels[idx[i]] ? c1 : c0)++;
        node.class_counts[0] = c0;
        node.class_counts[1] = c1;

        if (it.end - it.begin < config.min_samples_to_split || c0 == 0 || c1 == 0 ||
            (config.max_depth > 0 && it.depth >= config.max_depth))
            continue;

        std::span<const int> cand;
        if (config.strategy == Strategy::PerNode) {
            sample_subset(F, config.subset_size, rng, scratch.feature_perm,
                          scratch.candidates);
            cand = scratch.candidates;
        } else {
            cand = tree.subset;
        }
        auto split = optimize_node_for_training(
            std::span<const int>(idx.data() + it.begin, it.end - it.begin), cand, data,
            rng, scratch.vals);
        if (!split) continue;

        double tau = split->stump.threshold;
        auto mid_it = std::partition(idx.begin() + it.begin, idx.begin() + it.end,
                                     [&](int s) { return data.at(s, split->stump.feature) < tau; });
        int mid = static_cast<int>(mid_it - idx.begin());

        int left = static_cast<int>(tree.nodes.size());
        tree.nodes[it.node].split = split->stump;
        tree.nodes[it.node].left = left;
        tree.nodes[it.node].right = left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        ++tree.internal_node_count;
        stack.push_back({left + 1, mid, it.end, it.depth + 1});
        stack.push_back({left, it.begin, mid, it.depth + 1});
    }
    return tree;
}

}  // namespace

TrainedForest train_forest(const ForestConfig& config, const Dataset& data,
                           int num_threads) {
    config.validate();
    data.validate();
    if (data.sample_count < 2)
        throw std::invalid_argument("forest: need at least two samples");
    if (config.subset_size > data.feature_count)
        throw std::invalid_argument("forest: subset size exceeds feature count");
    int bag_size = static_cast<int>(
        std::ceil(config.bagging_ratio * static_cast<double>(data.sample_count)));
    if (bag_size < 2)
        throw std::invalid_argument("forest: bagging ratio leaves fewer than two samples");

    TrainedForest forest;
    forest.feature_count = data.feature_count;
    forest.trees.resize(config.num_trees);

    parallel_for(config.num_trees, num_threads, [&](int t) {
        thread_local GrowScratch scratch;
        forest.trees[t] = grow_tree(config, data, t, scratch);
    });

    forest.selection_counts.assign(data.feature_count, 0);
    forest.internal_node_counts.resize(config.num_trees);
    long long total_internal = 0;
    for (int t = 0; t < config.num_trees; ++t) {
        const Tree& tree = forest.trees[t];
        forest.internal_node_counts[t] = tree.internal_node_count;
        total_internal += tree.internal_node_count;
        for (const TreeNode& node : tree.nodes)
            if (!node.is_leaf()) ++forest.selection_counts[node.split.feature];
    }
    forest.avg_internal_nodes =
        config.num_trees > 0
            ? static_cast<double>(total_internal) / config.num_trees
            : 0.0;
    return forest;
}

int predict(const TrainedForest& forest, std::span<const double> sample) {
    if (forest.trees.empty()) throw std::runtime_error("predict: empty forest");
    if (static_cast<int>(sample.size()) != forest.feature_count)
        throw std::invalid_argument("predict: sample width does not match forest");
    int votes = 0;
    for (const Tree& tree : forest.trees) {
        int at = 0;
        while (!tree.nodes[at].is_leaf()) {
            const TreeNode& node = tree.nodes[at];
            at = sample[node.split.feature] < node.split.threshold ? node.left
                                                                   : node.right;
        }
        const TreeNode& leaf = tree.nodes[at];
        votes += leaf.class_counts[1] > leaf.class_counts[0] ? 1 : 0;
    }
    return 2 * votes > static_cast<int>(forest.trees.size()) ? 1 : 0;
}

}  // namespace sfrf

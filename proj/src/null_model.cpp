#include "sfrf/null_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sfrf {

namespace {

// log Binomial(n, p) pmf at k, handling the degenerate edges exactly.
double log_binom_pmf(long long n, long long k, double p) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    if (k < 0 || k > n) return neg_inf;
    if (p <= 0.0) return k == 0 ? 0.0 : neg_inf;
    if (p >= 1.0) return k == n ? 0.0 : neg_inf;
    double lc = std::lgamma(static_cast<double>(n) + 1.0) -
                std::lgamma(static_cast<double>(k) + 1.0) -
                std::lgamma(static_cast<double>(n - k) + 1.0);
    return lc + k * std::log(p) + (n - k) * std::log1p(-p);
}

long long rounded_nodes(double avg) { return std::llround(avg); }

// Walks all partitions of k with parts <= max_part and at most max_parts
// parts, nonincreasing, calling fn(parts). Returns without calling fn when
// k == 0.
template <typename Fn>
void walk_partitions(int k, int max_part, long long max_parts, Fn&& fn) {
    if (k <= 0 || max_part <= 0 || max_parts <= 0) return;
    std::vector<int> parts;
    // Iterative descent: extend with the largest admissible part, then
    // backtrack and shrink.
    auto admissible = [&](int part, int remaining) {
        if (part > remaining) return false;
        if (static_cast<long long>(parts.size()) + 1 > max_parts) return false;
        // the remainder must be coverable by parts of size <= part
        long long slots = max_parts - static_cast<long long>(parts.size()) - 1;
        return remaining - part <= slots * static_cast<long long>(part);
    };
    int remaining = k;
    int next = std::min(k, max_part);
    while (true) {
        while (next >= 1 && !admissible(next, remaining)) --next;
        if (next >= 1) {
            parts.push_back(next);
            remaining -= next;
            if (remaining == 0) {
                fn(parts);
                // backtrack one step, try a smaller part
                remaining += parts.back();
                next = parts.back() - 1;
                parts.pop_back();
            } else {
                next = std::min(next, remaining);
            }
        } else {
            if (parts.empty()) break;
            remaining += parts.back();
            next = parts.back() - 1;
            parts.pop_back();
        }
    }
}

}  // namespace

void NullModelParams::validate() const {
    if (total_features < 1)
        throw std::invalid_argument("null model: need at least one feature");
    if (subset_size < 1 || subset_size > total_features)
        throw std::invalid_argument("null model: subset size must be in [1, F]");
    if (num_trees < 0)
        throw std::invalid_argument("null model: negative tree count");
    if (!(avg_internal_nodes >= 0.0) || !std::isfinite(avg_internal_nodes))
        throw std::invalid_argument("null model: average node count must be finite and >= 0");
}

long long NullModelParams::node_budget() const {
    if (strategy == Strategy::PerNode)
        return std::llround(static_cast<double>(num_trees) * avg_internal_nodes);
    return static_cast<long long>(num_trees) * rounded_nodes(avg_internal_nodes);
}

int Partition::value() const {
    int sum = 0;
    for (int p : parts) sum += p;
    return sum;
}

std::vector<int> Partition::multiplicities() const {
    std::vector<int> mult(static_cast<std::size_t>(value()) + 1, 0);
    for (int p : parts) ++mult[p];
    return mult;
}

std::vector<Partition> enumerate_partitions(int k) {
    if (k < 1) throw std::invalid_argument("enumerate_partitions: k must be >= 1");
    if (k > kPartitionCap)
        throw std::length_error("enumerate_partitions: k = " + std::to_string(k) +
                                " exceeds cap " + std::to_string(kPartitionCap));
    std::vector<Partition> out;
    walk_partitions(k, k, k, [&](const std::vector<int>& parts) {
        out.push_back(Partition{parts});
    });
    return out;
}

double strategy1_pmf(const NullModelParams& params, int k) {
    params.validate();
    if (params.strategy != Strategy::PerNode)
        throw std::invalid_argument("strategy1_pmf: params configured for per-tree sampling");
    if (k < 0) throw std::invalid_argument("strategy1_pmf: negative count");
    double lp = log_binom_pmf(params.node_budget(), k, 1.0 / params.total_features);
    return std::exp(lp);
}

double per_tree_inclusion_prob(int total_features, int subset_size) {
    if (total_features < 1 || subset_size < 1 || subset_size > total_features)
        throw std::invalid_argument("per_tree_inclusion_prob: need 1 <= F_n <= F");
    return static_cast<double>(subset_size) / static_cast<double>(total_features);
}

double strategy2_per_tree_pmf(const NullModelParams& params, int xi) {
    params.validate();
    if (params.strategy != Strategy::PerTree)
        throw std::invalid_argument("strategy2_per_tree_pmf: params configured for per-node sampling");
    if (xi < 0) throw std::invalid_argument("strategy2_per_tree_pmf: negative count");
    long long nodes = rounded_nodes(params.avg_internal_nodes);
    double p_in = per_tree_inclusion_prob(params.total_features, params.subset_size);
    double in_subset = std::exp(log_binom_pmf(nodes, xi, 1.0 / params.subset_size));
    if (xi > 0) return in_subset * p_in;
    return in_subset * p_in + (1.0 - p_in);
}

double strategy2_pmf_partitions(const NullModelParams& params, int k) {
    params.validate();
    if (params.strategy != Strategy::PerTree)
        throw std::invalid_argument("strategy2_pmf_partitions: params configured for per-node sampling");
    if (k < 0) throw std::invalid_argument("strategy2_pmf_partitions: negative count");
    if (k > kPartitionCap)
        throw std::length_error("strategy2_pmf_partitions: k = " + std::to_string(k) +
                                " exceeds cap " + std::to_string(kPartitionCap) +
                                "; use the convolution form");

    const int T = params.num_trees;
    const long long nodes = rounded_nodes(params.avg_internal_nodes);
    const double p_zero = strategy2_per_tree_pmf(params, 0);

    if (k == 0) return T == 0 ? 1.0 : std::pow(p_zero, T);
    if (T == 0) return 0.0;

    // Per-tree log-probabilities for counts 1..min(k, nodes); larger parts
    // are impossible and the walk never produces them.
    const int max_part = static_cast<int>(std::min<long long>(k, nodes));
    if (max_part == 0) return 0.0;
    std::vector<double> log_ptree(max_part + 1, 0.0);
    for (int xi = 1; xi <= max_part; ++xi)
        log_ptree[xi] = std::log(strategy2_per_tree_pmf(params, xi));
    const double log_pzero =
        p_zero > 0.0 ? std::log(p_zero) : -std::numeric_limits<double>::infinity();
    const double lgamma_T1 = std::lgamma(static_cast<double>(T) + 1.0);

    // Each partition of k distributes the k wins over some trees; the
    // multinomial coefficient counts which trees got which part, and the rest
    // of the forest contributes count 0.
    double total = 0.0;
    walk_partitions(k, max_part, T, [&](const std::vector<int>& parts) {
        int used = static_cast<int>(parts.size());
        double log_term = lgamma_T1 - std::lgamma(static_cast<double>(T - used) + 1.0);
        int run = 1;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            log_term += log_ptree[parts[i]];
            if (i + 1 < parts.size() && parts[i + 1] == parts[i]) {
                ++run;
            } else {
                log_term -= std::lgamma(static_cast<double>(run) + 1.0);
                run = 1;
            }
        }
        if (T > used) {
            if (p_zero == 0.0) return;  // impossible configuration
            log_term += (T - used) * log_pzero;
        }
        total += std::exp(log_term);
    });
    return total;
}

std::vector<double> strategy2_pmf_convolution(const NullModelParams& params,
                                              int k_max) {
    params.validate();
    if (params.strategy != Strategy::PerTree)
        throw std::invalid_argument("strategy2_pmf_convolution: params configured for per-node sampling");
    if (k_max < 0) throw std::invalid_argument("strategy2_pmf_convolution: negative k_max");

    const long long nodes = rounded_nodes(params.avg_internal_nodes);
    const int per_tree_max = static_cast<int>(std::min<long long>(nodes, k_max));
    std::vector<double> per_tree(per_tree_max + 1);
    for (int xi = 0; xi <= per_tree_max; ++xi)
        per_tree[xi] = strategy2_per_tree_pmf(params, xi);

    std::vector<double> pmf(k_max + 1, 0.0), next(k_max + 1, 0.0);
    pmf[0] = 1.0;
    int reach = 0;  // highest index with possibly nonzero mass
    for (int t = 0; t < params.num_trees; ++t) {
        int new_reach = static_cast<int>(
            std::min<long long>(k_max, static_cast<long long>(reach) + per_tree_max));
        std::fill(next.begin(), next.begin() + new_reach + 1, 0.0);
        for (int i = 0; i <= reach; ++i) {
            double base = pmf[i];
            if (base == 0.0) continue;
            int top = std::min(per_tree_max, k_max - i);
            for (int xi = 0; xi <= top; ++xi) next[i + xi] += base * per_tree[xi];
        }
        pmf.swap(next);
        reach = new_reach;
    }
    return pmf;
}

double tail_prob(const NullModelParams& params, int kappa) {
    params.validate();
    if (kappa < 0) throw std::invalid_argument("tail_prob: negative threshold");
    long long budget = params.node_budget();
    if (kappa >= budget) return 0.0;

    double cum = 0.0;
    if (params.strategy == Strategy::PerNode) {
        double p = 1.0 / params.total_features;
        for (int xi = 0; xi <= kappa; ++xi)
            cum += std::exp(log_binom_pmf(budget, xi, p));
    } else {
        std::vector<double> pmf = strategy2_pmf_convolution(params, kappa);
        for (double v : pmf) cum += v;
    }
    return std::clamp(1.0 - cum, 0.0, 1.0);
}

double expected_false_positives(const NullModelParams& params, int kappa) {
    return tail_prob(params, kappa) * params.total_features;
}

ThresholdDecision solve_threshold(const NullModelParams& params, double alpha) {
    params.validate();
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("solve_threshold: alpha must be in (0, 1]");

    const long long budget = params.node_budget();
    ThresholdDecision d;
    d.alpha = alpha;
    if (budget == 0) {
        // no split decisions at all: counts are identically zero
        d.kappa_star = 0;
        d.tail_prob = 0.0;
        d.expected_fp = 0.0;
        return d;
    }

    auto finish = [&](long long kappa, double tail) {
        d.kappa_star = kappa;
        d.tail_prob = tail;
        d.expected_fp = tail * params.total_features;
        return d;
    };

    if (params.strategy == Strategy::PerNode) {
        double p = 1.0 / params.total_features;
        double cum = 0.0;
        for (long long kappa = 0; kappa < budget; ++kappa) {
            cum += std::exp(log_binom_pmf(budget, kappa, p));
            double tail = std::clamp(1.0 - cum, 0.0, 1.0);
            if (tail <= alpha) return finish(kappa, tail);
        }
    } else {
        // Grow the convolution head until the threshold falls inside it.
        long long head = std::min<long long>(budget, 64);
        while (true) {
            std::vector<double> pmf =
                strategy2_pmf_convolution(params, static_cast<int>(head));
            double cum = 0.0;
            long long top = std::min(head + 1, budget);
            for (long long kappa = 0; kappa < top; ++kappa) {
                cum += pmf[kappa];
                double tail = std::clamp(1.0 - cum, 0.0, 1.0);
                if (tail <= alpha) return finish(kappa, tail);
            }
            if (head >= budget - 1) break;
            head = std::min(budget - 1, head * 2);
        }
    }
    throw std::runtime_error("solve_threshold: no threshold below the node budget attains alpha = " +
                             std::to_string(alpha));
}

}  // namespace sfrf

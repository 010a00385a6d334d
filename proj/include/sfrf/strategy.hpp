#pragma once

#include <stdexcept>
#include <string>

namespace sfrf {

// How candidate features are subsampled during tree growth: a fresh subset
// at every node, or a single subset drawn once per tree.
enum class Strategy { PerNode, PerTree };

inline const char* to_string(Strategy s) {
    return s == Strategy::PerNode ? "per-node" : "per-tree";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "per-node") return Strategy::PerNode;
    if (s == "per-tree") return Strategy::PerTree;
    throw std::invalid_argument("unknown strategy '" + s +
                                "' (expected per-node or per-tree)");
}

}  // namespace sfrf

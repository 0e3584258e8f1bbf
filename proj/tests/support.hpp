#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "scr/diagnostics.hpp"
#include "scr/random.hpp"
#include "scr/risk_model.hpp"

namespace support {

inline std::string fixture_path(const std::string& name) {
    return std::string(FIXTURE_DIR) + "/" + name;
}

inline scr::RiskTree load_fixture(const std::string& name) {
    return scr::parse_tree_file(fixture_path(name));
}

inline bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Random valid tree: depth <= max_depth, fanout <= max_fanout, PSD matrices
/// with correlations in [0,1], leaf SCRs in [50, 500] with an occasional zero.
inline scr::RiskTree random_tree(std::mt19937_64& rng, int max_depth = 4, int max_fanout = 6,
                                 std::size_t max_nodes = 150) {
    std::vector<scr::RiskNode> nodes;
    std::map<std::string, scr::CorrelationMatrix> matrices;
    std::size_t counter = 0;

    std::function<std::string(int)> grow = [&](int depth) -> std::string {
        const std::string id = "n" + std::to_string(counter++);
        scr::RiskNode node{id, id, {}, 0.0, std::nullopt};
        const bool make_leaf = depth >= max_depth || counter >= max_nodes ||
                               (depth > 0 && scr::uniform01(rng) < 0.35);
        if (make_leaf) {
            node.standalone_scr =
                scr::uniform01(rng) < 0.04 ? 0.0 : scr::uniform_in(rng, 50.0, 500.0);
            nodes.push_back(std::move(node));
            return id;
        }
        const std::size_t fanout = 1 + static_cast<std::size_t>(rng() % max_fanout);
        for (std::size_t c = 0; c < fanout; ++c) node.children.push_back(grow(depth + 1));
        matrices.emplace(id, scr::random_correlation_psd(fanout, rng));
        nodes.push_back(std::move(node));
        return id;
    };
    grow(0);
    return scr::RiskTree::build("n0", std::move(nodes), std::move(matrices));
}

inline scr::RiskTree single_leaf_tree(double scr_value) {
    return scr::RiskTree::build(
        "only", {scr::RiskNode{"only", "only", {}, scr_value, std::nullopt}}, {});
}

}  // namespace support

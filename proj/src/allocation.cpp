#include "scr/allocation.hpp"

#include <cmath>
#include <numeric>

namespace scr {

const AllocationEntry& AllocationResult::at(std::string_view id) const {
    auto it = by_node.find(std::string(id));
    if (it == by_node.end())
        throw std::out_of_range("no allocation result for node: " + std::string(id));
    return it->second;
}

LevelAllocation euler_allocate_level(std::span<const double> child_scrs,
                                     const CorrelationMatrix& corr, double parent_total) {
    const std::size_t n = child_scrs.size();
    if (n != corr.order())
        throw std::invalid_argument("euler_allocate_level: " + std::to_string(n) +
                                    " values for a matrix of order " + std::to_string(corr.order()));
    LevelAllocation out;
    out.allocated.assign(n, 0.0);
    out.ratios.assign(n, 0.0);
    if (parent_total == 0.0) return out;  // all-zero level allocates all zeros
    for (std::size_t i = 0; i < n; ++i) {
        double weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) weighted += corr(i, j) * child_scrs[j];
        out.ratios[i] = weighted / parent_total;
        out.allocated[i] = child_scrs[i] * out.ratios[i];
    }
    return out;
}

AllocationResult euler_allocate_tree(const RiskTree& tree, const AggregationResult& agg) {
    AllocationResult result;
    result.principle.principle = Principle::sfep;
    result.root_id = tree.root_id();

    const double bscr = agg.bscr();
    AllocationEntry root_entry;
    root_entry.allocated = bscr;
    if (bscr != 0.0) root_entry.allocation_ratio = 1.0;
    result.by_node[tree.root_id()] = root_entry;

    // Top-down: children receive the level allocation of their standalone
    // aggregates scaled by the parent's cumulative ratio product.
    struct Item {
        std::string id;
        double cumulative;  // product of per-level ratios from the root
    };
    std::vector<Item> stack{{tree.root_id(), 1.0}};
    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        const RiskNode& n = tree.node(item.id);
        if (n.is_leaf()) continue;

        std::vector<double> child_scrs;
        child_scrs.reserve(n.children.size());
        for (const auto& c : n.children) child_scrs.push_back(agg.at(c).aggregated_scr);
        const double level_total = agg.at(item.id).aggregated_scr;
        const LevelAllocation level = euler_allocate_level(child_scrs, *tree.matrix(item.id), level_total);

        const double parent_allocated = result.by_node[item.id].allocated;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            const double cumulative = item.cumulative * level.ratios[i];
            AllocationEntry e;
            e.allocated = child_scrs[i] * cumulative;
            if (level_total != 0.0) e.level_ratio = level.ratios[i];
            if (child_scrs[i] != 0.0 && level_total != 0.0) e.allocation_ratio = cumulative;
            if (parent_allocated != 0.0) e.parent_share = e.allocated / parent_allocated;
            result.by_node[n.children[i]] = e;
            stack.push_back({n.children[i], cumulative});
        }
    }
    return result;
}

std::vector<double> haircut_allocate(std::span<const double> standalone, double total) {
    const double sum = std::accumulate(standalone.begin(), standalone.end(), 0.0);
    if (!(sum > 0.0)) throw ComputationError("haircut_allocate: standalone values sum to zero");
    std::vector<double> out;
    out.reserve(standalone.size());
    for (double s : standalone) out.push_back(total * s / sum);
    return out;
}

std::vector<double> marginal_allocate(const RiskTree& tree,
                                      std::span<const std::string> level_nodes, double total) {
    if (level_nodes.empty()) throw std::invalid_argument("marginal_allocate: no nodes");
    if (!is_antichain(tree, level_nodes))
        throw std::invalid_argument("marginal_allocate: nodes do not form an antichain");
    if (level_nodes.size() == 1) return {total};
    std::vector<double> deltas;
    deltas.reserve(level_nodes.size());
    for (const auto& id : level_nodes) deltas.push_back(total - aggregate_excluding(tree, id));
    const double denom = std::accumulate(deltas.begin(), deltas.end(), 0.0);
    if (!(denom > 0.0))
        throw ComputationError("marginal_allocate: leave-one-out contributions sum to " +
                               std::to_string(denom));
    std::vector<double> out;
    out.reserve(deltas.size());
    for (double d : deltas) out.push_back(total * d / denom);
    return out;
}

std::vector<double> covariance_allocate(double total, std::span<const double> standalone,
                                        const CorrelationMatrix& corr) {
    const std::size_t n = standalone.size();
    if (n != corr.order())
        throw std::invalid_argument("covariance_allocate: " + std::to_string(n) +
                                    " values for a matrix of order " + std::to_string(corr.order()));
    // SCR-as-sigma proxy: Cov(X_s, X) ~ s_s sum_j rho_sj s_j, Var(X) ~ s' P s.
    double variance = 0.0;
    std::vector<double> cov(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) weighted += corr(i, j) * standalone[j];
        cov[i] = standalone[i] * weighted;
        variance += cov[i];
    }
    if (total == 0.0 && variance == 0.0) return std::vector<double>(n, 0.0);
    return covariance_allocate_explicit(total, cov, variance);
}

std::vector<double> covariance_allocate_explicit(double total,
                                                 std::span<const double> covariances,
                                                 double variance) {
    if (variance == 0.0) throw ComputationError("covariance allocation: zero variance");
    std::vector<double> out;
    out.reserve(covariances.size());
    for (double c : covariances) out.push_back(total * c / variance);
    return out;
}

std::vector<double> market_driven_allocate(double total, std::span<const double> drivers) {
    for (double d : drivers)
        if (!(d >= 0.0)) throw std::invalid_argument("market_driven_allocate: negative driver");
    const double sum = std::accumulate(drivers.begin(), drivers.end(), 0.0);
    if (!(sum > 0.0)) throw ComputationError("market_driven_allocate: drivers sum to zero");
    std::vector<double> out;
    out.reserve(drivers.size());
    for (double d : drivers) out.push_back(total * d / sum);
    return out;
}

double scr_total(double bscr, double adjustment, double operational_risk) {
    return bscr + adjustment + operational_risk;
}

}  // namespace scr

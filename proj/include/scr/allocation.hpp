#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scr/aggregation.hpp"
#include "scr/risk_model.hpp"

namespace scr {

struct LevelAllocation {
    std::vector<double> allocated;  // sums to parent_total
    std::vector<double> ratios;     // per-child allocation ratio (d total / d child)
};

/// Euler allocation of one level:
///   allocated_i = s_i * (sum_j rho_ij s_j) / parent_total
/// A zero parent_total (all-zero children) allocates all zeros.
LevelAllocation euler_allocate_level(std::span<const double> child_scrs,
                                     const CorrelationMatrix& corr, double parent_total);

struct AllocationEntry {
    double allocated = 0.0;
    /// Cumulative allocation ratio allocated/standalone (the product of the
    /// per-level ratios along the root path); absent when standalone is 0 or
    /// the principle does not define one.
    std::optional<double> allocation_ratio;
    /// Allocation ratio within the parent level only.
    std::optional<double> level_ratio;
    /// allocated / parent's allocated, when the parent's amount is nonzero.
    std::optional<double> parent_share;
};

struct AllocationResult {
    PrincipleSpec principle;
    std::string root_id;
    std::unordered_map<std::string, AllocationEntry> by_node;

    const AllocationEntry& at(std::string_view id) const;
};

/// Top-down Euler allocation through the whole tree: the root receives the
/// BSCR with ratio 1, and every node's amount equals its standalone-aggregated
/// SCR times the product of per-level allocation ratios along its root path.
AllocationResult euler_allocate_tree(const RiskTree& tree, const AggregationResult& agg);

/// Proportional split of `total` over the standalone requirements.
std::vector<double> haircut_allocate(std::span<const double> standalone, double total);

/// Leave-one-out split: allocated_s = total * (total - excl_s) / sum_i (total - excl_i)
/// with excl_s = aggregate_excluding(tree, s). `level_nodes` must form an antichain.
std::vector<double> marginal_allocate(const RiskTree& tree,
                                      std::span<const std::string> level_nodes, double total);

/// Covariance principle, SCR-as-sigma proxy mode:
///   allocated_s = total * s_s (sum_j rho_sj s_j) / q,  q = s' P s.
std::vector<double> covariance_allocate(double total, std::span<const double> standalone,
                                        const CorrelationMatrix& corr);

/// Covariance principle with user-supplied Cov(X_s, X) and Var(X).
std::vector<double> covariance_allocate_explicit(double total,
                                                 std::span<const double> covariances,
                                                 double variance);

/// Proportional rule over externally chosen risk drivers.
std::vector<double> market_driven_allocate(double total, std::span<const double> drivers);

/// Overall requirement: BSCR plus given adjustment and operational-risk amounts.
double scr_total(double bscr, double adjustment, double operational_risk);

}  // namespace scr

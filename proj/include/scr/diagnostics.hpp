#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scr/allocation.hpp"
#include "scr/risk_model.hpp"

namespace scr {

struct ComparisonRow {
    std::string node_id;
    std::vector<double> allocated;                       // one entry per principle
    std::vector<std::optional<double>> deviation_vs_sfep;  // allocated/sfep - 1
};

struct ComparisonReport {
    std::vector<PrincipleSpec> principles;
    std::vector<ComparisonRow> rows;   // antichain order
    std::vector<double> totals;        // per principle; all equal (full allocation)
};

/// Allocates the selected antichain under each principle and reports
/// percentage deviations versus the Euler (SFEP) allocation. Every principle
/// allocates the total that SFEP attributes to the cut, which is the BSCR for
/// complete antichains.
ComparisonReport compare_principles(const RiskTree& tree,
                                    const std::vector<PrincipleSpec>& principles,
                                    std::span<const std::string> antichain);

struct PropertyFinding {
    std::string property;
    bool passed = false;
    std::string detail;  // counterexample description when failed
};

/// Random correlation matrix with entries in [0,1] that is positive
/// semidefinite by construction (normalized Gram matrix of non-negative
/// vectors, mixed with the degenerate identity/comonotonic/uniform cases).
CorrelationMatrix random_correlation_psd(std::size_t order, std::mt19937_64& rng);

/// Runs the aggregation/allocation invariants on the given tree and on
/// `trials` randomized perturbations of it (leaf scaling, correlation resampling
/// within [0,1]). Deterministic for a given (tree, seed, trials).
/// If the tree fails validation with errors, returns those findings and skips
/// the suite.
std::vector<PropertyFinding> run_property_suite(const RiskTree& tree, std::uint64_t seed,
                                                int trials);

bool all_passed(const std::vector<PropertyFinding>& findings);

}  // namespace scr

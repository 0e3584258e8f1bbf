#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "scr/risk_model.hpp"

namespace scr {

struct NodeAggregate {
    double aggregated_scr = 0.0;
    double diversification_effect = 0.0;
};

struct AggregationResult {
    std::string root_id;
    std::unordered_map<std::string, NodeAggregate> by_node;

    const NodeAggregate& at(std::string_view id) const;
    double bscr() const { return by_node.at(root_id).aggregated_scr; }
};

/// Square-root aggregation of one level: sqrt(s' P s).
/// Throws ComputationError("indefinite aggregation ...") when the quadratic
/// form is negative beyond round-off; never clamps a genuinely negative form.
double aggregate_level(std::span<const double> child_scrs, const CorrelationMatrix& corr);

/// Post-order evaluation of the whole tree; the root value is the BSCR and
/// every node carries its diversification effect.
AggregationResult aggregate_tree(const RiskTree& tree);

/// Genuine bottom-up aggregation over all leaves with a full base correlation
/// matrix, ordered by the canonical depth-first leaf order.
double aggregate_full_base(std::span<const double> leaf_scrs, const CorrelationMatrix& base_matrix);

/// Root value recomputed with the excluded node's contribution removed (its
/// SCR set to 0 within its parent's aggregation); all other nodes unchanged.
double aggregate_excluding(const RiskTree& tree, std::string_view excluded);

/// Sum of standalone child requirements minus the aggregated requirement.
double diversification_effect(std::span<const double> child_scrs, double aggregated);

struct CalibratedRho {
    double rho = 0.0;
    bool clamped = false;  // raw minimizer fell outside [-1, 1]
};

/// Pairwise correlation that makes two-element square-root aggregation of
/// (var_x, var_y) reproduce var_xy exactly:
///   rho = (var_xy^2 - var_x^2 - var_y^2) / (2 var_x var_y), clamped to [-1, 1].
CalibratedRho calibrate_rho(double var_x, double var_y, double var_xy);

}  // namespace scr

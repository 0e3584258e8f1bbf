#include "scr/aggregation.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace scr {

const NodeAggregate& AggregationResult::at(std::string_view id) const {
    auto it = by_node.find(std::string(id));
    if (it == by_node.end())
        throw std::out_of_range("no aggregation result for node: " + std::string(id));
    return it->second;
}

namespace {

// s' P s with an absolute-scale estimate of the summed terms, used to tell a
// genuinely indefinite form apart from round-off around zero.
std::pair<double, double> quadratic_form(std::span<const double> s, const CorrelationMatrix& P) {
    double q = 0.0, scale = 0.0;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double term = s[i] * s[j] * P(i, j);
            q += term;
            scale += std::abs(term);
        }
    }
    return {q, scale};
}

double sqrt_of_form(std::span<const double> s, const CorrelationMatrix& P,
                    const std::string& where) {
    auto [q, scale] = quadratic_form(s, P);
    if (q < 0.0) {
        if (q >= -16.0 * std::numeric_limits<double>::epsilon() * scale) return 0.0;
        throw ComputationError("indefinite aggregation" + (where.empty() ? "" : " at \"" + where + "\"") +
                               ": quadratic form is " + std::to_string(q));
    }
    return std::sqrt(q);
}

double aggregate_node(const RiskTree& tree, const std::string& id,
                      std::string_view excluded, AggregationResult* result) {
    const RiskNode& n = tree.node(id);
    if (n.is_leaf()) {
        if (result) result->by_node[id] = {n.standalone_scr, 0.0};
        return n.standalone_scr;
    }
    std::vector<double> child_values;
    child_values.reserve(n.children.size());
    for (const auto& c : n.children) {
        const double v = aggregate_node(tree, c, excluded, result);
        child_values.push_back(c == excluded ? 0.0 : v);
    }
    const double agg = sqrt_of_form(child_values, *tree.matrix(id), id);
    if (result) {
        const double child_sum = std::accumulate(child_values.begin(), child_values.end(), 0.0);
        result->by_node[id] = {agg, child_sum - agg};
    }
    return agg;
}

}  // namespace

double aggregate_level(std::span<const double> child_scrs, const CorrelationMatrix& corr) {
    if (child_scrs.size() != corr.order())
        throw std::invalid_argument("aggregate_level: " + std::to_string(child_scrs.size()) +
                                    " values for a matrix of order " + std::to_string(corr.order()));
    return sqrt_of_form(child_scrs, corr, "");
}

AggregationResult aggregate_tree(const RiskTree& tree) {
    AggregationResult result;
    result.root_id = tree.root_id();
    aggregate_node(tree, tree.root_id(), "", &result);
    return result;
}

double aggregate_full_base(std::span<const double> leaf_scrs, const CorrelationMatrix& base_matrix) {
    if (leaf_scrs.size() != base_matrix.order())
        throw std::invalid_argument("aggregate_full_base: " + std::to_string(leaf_scrs.size()) +
                                    " leaves for a matrix of order " +
                                    std::to_string(base_matrix.order()));
    return sqrt_of_form(leaf_scrs, base_matrix, "");
}

double aggregate_excluding(const RiskTree& tree, std::string_view excluded) {
    if (!tree.contains(excluded))
        throw std::invalid_argument("aggregate_excluding: unknown node \"" + std::string(excluded) +
                                    "\"");
    if (excluded == tree.root_id())
        throw std::invalid_argument("aggregate_excluding: cannot exclude the root");
    return aggregate_node(tree, tree.root_id(), excluded, nullptr);
}

double diversification_effect(std::span<const double> child_scrs, double aggregated) {
    return std::accumulate(child_scrs.begin(), child_scrs.end(), 0.0) - aggregated;
}

CalibratedRho calibrate_rho(double var_x, double var_y, double var_xy) {
    if (!(var_x > 0.0) || !(var_y > 0.0))
        throw ComputationError("calibrate_rho: marginal VaR must be positive");
    if (var_xy < 0.0) throw ComputationError("calibrate_rho: aggregate VaR must be non-negative");
    const double raw = (var_xy * var_xy - var_x * var_x - var_y * var_y) / (2.0 * var_x * var_y);
    CalibratedRho out;
    out.rho = std::clamp(raw, -1.0, 1.0);
    out.clamped = raw < -1.0 || raw > 1.0;
    return out;
}

}  // namespace scr

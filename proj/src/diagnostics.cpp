#include "scr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "scr/random.hpp"

namespace scr {

namespace {

double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

std::vector<double> standalone_of(const AggregationResult& agg,
                                  std::span<const std::string> ids) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(agg.at(id).aggregated_scr);
    return out;
}

}  // namespace

// --- principle comparison ------------------------------------------------------

ComparisonReport compare_principles(const RiskTree& tree,
                                    const std::vector<PrincipleSpec>& principles,
                                    std::span<const std::string> antichain) {
    if (antichain.empty()) throw std::invalid_argument("compare_principles: empty antichain");
    if (!is_antichain(tree, antichain))
        throw std::invalid_argument("compare_principles: nodes do not form an antichain");

    const AggregationResult agg = aggregate_tree(tree);
    const AllocationResult sfep = euler_allocate_tree(tree, agg);

    std::vector<double> sfep_col;
    sfep_col.reserve(antichain.size());
    for (const auto& id : antichain) sfep_col.push_back(sfep.at(id).allocated);
    const double total = std::accumulate(sfep_col.begin(), sfep_col.end(), 0.0);

    ComparisonReport report;
    report.principles = principles;
    for (const auto& id : antichain) report.rows.push_back({id, {}, {}});

    for (const auto& spec : principles) {
        std::vector<double> col;
        switch (spec.principle) {
            case Principle::sfep:
                col = sfep_col;
                break;
            case Principle::haircut:
                col = haircut_allocate(standalone_of(agg, antichain), total);
                break;
            case Principle::marginal:
                col = marginal_allocate(tree, antichain, total);
                break;
            case Principle::market: {
                std::vector<double> drivers;
                for (const auto& id : antichain) {
                    auto it = spec.drivers.find(id);
                    if (it == spec.drivers.end()) {
                        const auto& node_driver = tree.node(id).driver;
                        if (!node_driver)
                            throw std::invalid_argument("market principle: no driver for node \"" +
                                                        id + "\"");
                        drivers.push_back(*node_driver);
                    } else {
                        drivers.push_back(it->second);
                    }
                }
                col = market_driven_allocate(total, drivers);
                break;
            }
            case Principle::covariance: {
                if (spec.explicit_covariance()) {
                    if (!spec.variance)
                        throw std::invalid_argument("covariance principle: explicit mode needs a variance");
                    std::vector<double> cov;
                    for (const auto& id : antichain) {
                        auto it = spec.covariances.find(id);
                        if (it == spec.covariances.end())
                            throw std::invalid_argument("covariance principle: no covariance for node \"" +
                                                        id + "\"");
                        cov.push_back(it->second);
                    }
                    // the decomposition Var(X) = sum Cov(X_s, X) must hold or
                    // the column would not reach the report total
                    const double cov_sum = std::accumulate(cov.begin(), cov.end(), 0.0);
                    if (std::abs(cov_sum - *spec.variance) > 1e-9 * std::abs(*spec.variance))
                        throw std::invalid_argument(
                            "covariance principle: covariances sum to " + std::to_string(cov_sum) +
                            " but the variance is " + std::to_string(*spec.variance));
                    col = covariance_allocate_explicit(total, cov, *spec.variance);
                    break;
                }
                // Proxy mode works on one aggregation level: the antichain must be
                // the full child list of a single node.
                auto parent = tree.parent_of(antichain.front());
                if (!parent)
                    throw std::invalid_argument("covariance principle: antichain must be below the root");
                const auto& siblings = tree.node(*parent).children;
                if (!std::equal(siblings.begin(), siblings.end(), antichain.begin(), antichain.end()))
                    throw std::invalid_argument(
                        "covariance principle (proxy mode): antichain must be the children of one node");
                col = covariance_allocate(total, standalone_of(agg, antichain), *tree.matrix(*parent));
                break;
            }
        }
        for (std::size_t i = 0; i < antichain.size(); ++i) {
            report.rows[i].allocated.push_back(col[i]);
            if (sfep_col[i] != 0.0)
                report.rows[i].deviation_vs_sfep.push_back(col[i] / sfep_col[i] - 1.0);
            else
                report.rows[i].deviation_vs_sfep.push_back(std::nullopt);
        }
        report.totals.push_back(std::accumulate(col.begin(), col.end(), 0.0));
    }
    return report;
}

// --- property suite ---------------------------------------------------------------

CorrelationMatrix random_correlation_psd(std::size_t order, std::mt19937_64& rng) {
    const double pick = uniform01(rng);
    if (pick < 0.20) return CorrelationMatrix::identity(order);
    if (pick < 0.30) return CorrelationMatrix::comonotonic(order);
    if (pick < 0.45) return CorrelationMatrix(order, 0.25 * std::floor(uniform01(rng) * 5.0));
    // Normalized Gram matrix of random non-negative vectors: PSD with entries in [0,1].
    const std::size_t k = order + 2;
    std::vector<std::vector<double>> a(order, std::vector<double>(k));
    for (auto& row : a)
        for (auto& v : row) v = 0.05 + 0.95 * uniform01(rng) * uniform01(rng);
    CorrelationMatrix m(order, 0.0);
    std::vector<double> norms(order);
    for (std::size_t i = 0; i < order; ++i)
        norms[i] = std::sqrt(std::inner_product(a[i].begin(), a[i].end(), a[i].begin(), 0.0));
    for (std::size_t i = 0; i < order; ++i) {
        for (std::size_t j = i + 1; j < order; ++j) {
            double dot = std::inner_product(a[i].begin(), a[i].end(), a[j].begin(), 0.0);
            double rho = std::min(1.0, dot / (norms[i] * norms[j]));
            m.set(i, j, rho);
            m.set(j, i, rho);
        }
    }
    return m;
}

namespace {

RiskTree perturb(const RiskTree& base, std::mt19937_64& rng) {
    std::vector<RiskNode> nodes = base.nodes();
    for (auto& n : nodes) {
        if (!n.is_leaf()) continue;
        if (uniform01(rng) < 0.05)
            n.standalone_scr = 0.0;
        else
            n.standalone_scr *= uniform_in(rng, 0.7, 1.5);
    }
    std::map<std::string, CorrelationMatrix> matrices;
    for (const auto& [id, m] : base.matrices())
        matrices.emplace(id, random_correlation_psd(m.order(), rng));
    return RiskTree::build(base.root_id(), std::move(nodes), std::move(matrices));
}

RiskTree with_comonotonic_matrices(const RiskTree& base) {
    std::map<std::string, CorrelationMatrix> matrices;
    for (const auto& [id, m] : base.matrices())
        matrices.emplace(id, CorrelationMatrix::comonotonic(m.order()));
    return RiskTree::build(base.root_id(), base.nodes(), matrices);
}

bool non_negative_correlations(const RiskTree& tree) {
    for (const auto& [id, m] : tree.matrices()) {
        (void)id;
        for (std::size_t i = 0; i < m.order(); ++i)
            for (std::size_t j = 0; j < m.order(); ++j)
                if (m(i, j) < 0.0) return false;
    }
    return true;
}

RiskTree scaled_leaves(const RiskTree& base, double lambda) {
    std::vector<RiskNode> nodes = base.nodes();
    for (auto& n : nodes)
        if (n.is_leaf()) n.standalone_scr *= lambda;
    return RiskTree::build(base.root_id(), std::move(nodes), base.matrices());
}

using CheckFn = std::optional<std::string> (*)(const RiskTree&, std::mt19937_64&);

std::optional<std::string> check_full_allocation(const RiskTree& tree, std::mt19937_64& rng) {
    const auto agg = aggregate_tree(tree);
    const double bscr = agg.bscr();
    if (bscr == 0.0) return std::nullopt;
    const auto sfep = euler_allocate_tree(tree, agg);

    for (const auto& id : tree.depth_first_ids()) {
        const RiskNode& n = tree.node(id);
        if (n.is_leaf()) continue;
        double child_sum = 0.0;
        for (const auto& c : n.children) child_sum += sfep.at(c).allocated;
        const double parent = sfep.at(id).allocated;
        if (std::abs(child_sum - parent) > 1e-9 * std::max({std::abs(parent), 1e-9 * bscr, 1e-300}))
            return "sfep allocations of children of \"" + id + "\" sum to " +
                   std::to_string(child_sum) + ", parent has " + std::to_string(parent);
    }
    const auto leaves = tree.leaf_ids_depth_first();
    double leaf_sum = 0.0;
    for (const auto& id : leaves) leaf_sum += sfep.at(id).allocated;
    if (std::abs(leaf_sum - bscr) > 1e-9 * bscr)
        return "sfep leaf allocations sum to " + std::to_string(leaf_sum) + ", BSCR is " +
               std::to_string(bscr);

    const auto level1 = tree.node(tree.root_id()).children;
    if (!level1.empty() && non_negative_correlations(tree)) {
        const auto standalone = standalone_of(agg, level1);
        const double ssum = std::accumulate(standalone.begin(), standalone.end(), 0.0);
        if (ssum > 0.0) {
            const auto haircut = haircut_allocate(standalone, bscr);
            const auto marginal = marginal_allocate(tree, level1, bscr);
            const auto covariance = covariance_allocate(bscr, standalone, *tree.matrix(tree.root_id()));
            std::vector<double> drivers;
            for (std::size_t i = 0; i < level1.size(); ++i)
                drivers.push_back(uniform_in(rng, 0.5, 1.5));
            const auto market = market_driven_allocate(bscr, drivers);
            for (const auto* col : {&haircut, &marginal, &covariance, &market}) {
                const double s = std::accumulate(col->begin(), col->end(), 0.0);
                if (std::abs(s - bscr) > 1e-9 * bscr)
                    return "a principle column sums to " + std::to_string(s) + ", BSCR is " +
                           std::to_string(bscr);
            }
        }
    }
    return std::nullopt;
}

std::optional<std::string> check_euler_gradient(const RiskTree& tree, std::mt19937_64&) {
    const auto agg = aggregate_tree(tree);
    for (const auto& id : tree.depth_first_ids()) {
        const RiskNode& n = tree.node(id);
        if (n.is_leaf()) continue;
        std::vector<double> s = standalone_of(agg, n.children);
        const CorrelationMatrix& P = *tree.matrix(id);
        const double total = agg.at(id).aggregated_scr;
        if (total == 0.0) continue;
        const auto level = euler_allocate_level(s, P, total);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == 0.0) continue;
            const double h = 1e-6 * s[i];
            std::vector<double> up = s, down = s;
            up[i] += h;
            down[i] -= h;
            const double fd = (aggregate_level(up, P) - aggregate_level(down, P)) / (2.0 * h);
            const double expected = s[i] * fd;
            // compared as shares of the level total, which keeps the check
            // well-posed for children far smaller than their siblings
            if (std::abs(level.allocated[i] - expected) / total > 1e-6)
                return "node \"" + n.children[i] + "\": allocated " +
                       std::to_string(level.allocated[i]) + " vs finite-difference " +
                       std::to_string(expected) + " (level total " + std::to_string(total) + ")";
        }
    }
    return std::nullopt;
}

std::optional<std::string> check_sfep_homogeneity(const RiskTree& tree, std::mt19937_64& rng) {
    const double lambda = uniform_in(rng, 0.5, 3.0);
    const auto agg = aggregate_tree(tree);
    if (agg.bscr() == 0.0) return std::nullopt;
    const auto base = euler_allocate_tree(tree, agg);
    const RiskTree scaled = scaled_leaves(tree, lambda);
    const auto agg2 = aggregate_tree(scaled);
    const auto scaled_alloc = euler_allocate_tree(scaled, agg2);
    if (rel_diff(agg2.bscr(), lambda * agg.bscr()) > 1e-12)
        return "BSCR does not scale: " + std::to_string(agg2.bscr()) + " vs lambda*" +
               std::to_string(agg.bscr());
    for (const auto& id : tree.depth_first_ids()) {
        const auto& a = base.at(id);
        const auto& b = scaled_alloc.at(id);
        if (rel_diff(b.allocated, lambda * a.allocated) > 1e-12)
            return "allocation of \"" + id + "\" does not scale";
        if (a.allocation_ratio && b.allocation_ratio &&
            std::abs(*a.allocation_ratio - *b.allocation_ratio) > 1e-12)
            return "allocation ratio of \"" + id + "\" changed under scaling";
    }
    return std::nullopt;
}

std::optional<std::string> check_corollary(const RiskTree& tree, std::mt19937_64&) {
    const auto agg = aggregate_tree(tree);
    const double bscr = agg.bscr();
    const auto level1 = tree.node(tree.root_id()).children;
    if (level1.empty()) return std::nullopt;
    const auto standalone = standalone_of(agg, level1);
    const double sum_modules = std::accumulate(standalone.begin(), standalone.end(), 0.0);
    if (bscr > sum_modules * (1.0 + 1e-12) + 1e-300)
        return "BSCR " + std::to_string(bscr) + " exceeds sum of module SCRs " +
               std::to_string(sum_modules);
    // Within-module allocations reproduce each module SCR, so the right-hand
    // side of the chain equals the module sum.
    for (const auto& id : level1) {
        const RiskNode& n = tree.node(id);
        if (n.is_leaf()) continue;
        const double total = agg.at(id).aggregated_scr;
        const auto level = euler_allocate_level(standalone_of(agg, n.children), *tree.matrix(id), total);
        const double s = std::accumulate(level.allocated.begin(), level.allocated.end(), 0.0);
        if (std::abs(s - total) > 1e-9 * std::max(total, 1e-300))
            return "within-module allocation of \"" + id + "\" sums to " + std::to_string(s) +
                   ", module SCR is " + std::to_string(total);
    }
    return std::nullopt;
}

std::optional<std::string> check_ar_bounds(const RiskTree& tree, std::mt19937_64&) {
    if (!non_negative_correlations(tree)) return std::nullopt;  // asserted only for rho >= 0
    const auto agg = aggregate_tree(tree);
    if (agg.bscr() == 0.0) return std::nullopt;
    const auto sfep = euler_allocate_tree(tree, agg);
    for (const auto& id : tree.depth_first_ids()) {
        const auto& e = sfep.at(id);
        for (const auto& r : {e.level_ratio, e.allocation_ratio}) {
            if (r && (*r < -1e-12 || *r > 1.0 + 1e-12))
                return "allocation ratio of \"" + id + "\" is " + std::to_string(*r);
        }
        // no-undercut
        const double standalone = agg.at(id).aggregated_scr;
        if (e.allocated > standalone * (1.0 + 1e-12) + 1e-300)
            return "allocated " + std::to_string(e.allocated) + " exceeds standalone " +
                   std::to_string(standalone) + " at \"" + id + "\"";
    }
    return std::nullopt;
}

std::optional<std::string> check_covariance_proxy(const RiskTree& tree, std::mt19937_64&) {
    const auto agg = aggregate_tree(tree);
    for (const auto& id : tree.depth_first_ids()) {
        const RiskNode& n = tree.node(id);
        if (n.is_leaf()) continue;
        const double total = agg.at(id).aggregated_scr;
        if (total == 0.0) continue;
        const auto s = standalone_of(agg, n.children);
        const auto euler = euler_allocate_level(s, *tree.matrix(id), total);
        const auto cov = covariance_allocate(total, s, *tree.matrix(id));
        for (std::size_t i = 0; i < s.size(); ++i)
            if (rel_diff(euler.allocated[i], cov[i]) > 1e-12)
                return "covariance proxy differs from Euler at \"" + n.children[i] + "\"";
    }
    return std::nullopt;
}

std::optional<std::string> check_comonotonic(const RiskTree& tree, std::mt19937_64&) {
    const RiskTree comono = with_comonotonic_matrices(tree);
    const auto agg = aggregate_tree(comono);
    const double total = agg.bscr();
    if (total == 0.0) return std::nullopt;
    const auto sfep = euler_allocate_tree(comono, agg);
    for (const auto& id : comono.leaf_ids_depth_first()) {
        const double s = comono.node(id).standalone_scr;
        if (rel_diff(sfep.at(id).allocated, s) > 1e-12)
            return "sfep: leaf \"" + id + "\" allocated " + std::to_string(sfep.at(id).allocated) +
                   " instead of standalone " + std::to_string(s);
    }
    const auto level1 = comono.node(comono.root_id()).children;
    if (level1.empty()) return std::nullopt;
    const auto standalone = standalone_of(agg, level1);
    const auto haircut = haircut_allocate(standalone, total);
    const auto marginal = marginal_allocate(comono, level1, total);
    const auto covariance = covariance_allocate(total, standalone, *comono.matrix(comono.root_id()));
    for (std::size_t i = 0; i < level1.size(); ++i) {
        for (const auto* col : {&haircut, &marginal, &covariance})
            if (rel_diff((*col)[i], standalone[i]) > 1e-12)
                return "a principle moved away from standalone at \"" + level1[i] + "\"";
    }
    return std::nullopt;
}

std::optional<std::string> check_calibrate_inverse(const RiskTree&, std::mt19937_64& rng) {
    for (int k = 0; k < 8; ++k) {
        const double a = uniform_in(rng, 0.5, 500.0);
        const double b = uniform_in(rng, 0.5, 500.0);
        const double rho = uniform_in(rng, -1.0, 1.0);
        CorrelationMatrix m(2, rho);
        const std::vector<double> s{a, b};
        const double var_xy = aggregate_level(s, m);
        const auto cal = calibrate_rho(a, b, var_xy);
        if (std::abs(cal.rho - rho) > 1e-12 * std::max(1.0, std::abs(rho)))
            return "calibrate_rho(" + std::to_string(a) + ", " + std::to_string(b) + ", agg) = " +
                   std::to_string(cal.rho) + " instead of " + std::to_string(rho);
    }
    return std::nullopt;
}

std::optional<std::string> check_subadditivity(const RiskTree& tree, std::mt19937_64&) {
    const auto agg = aggregate_tree(tree);
    double leaf_sum = 0.0;
    for (const auto& id : tree.leaf_ids_depth_first()) leaf_sum += tree.node(id).standalone_scr;
    if (agg.bscr() > leaf_sum * (1.0 + 1e-12) + 1e-300)
        return "BSCR " + std::to_string(agg.bscr()) + " exceeds leaf sum " + std::to_string(leaf_sum);
    // with correlations <= 1 every node's diversification effect is non-negative
    for (const auto& id : tree.depth_first_ids()) {
        const auto& node = agg.at(id);
        if (node.diversification_effect < -1e-12 * std::max(1.0, node.aggregated_scr))
            return "negative diversification effect " + std::to_string(node.diversification_effect) +
                   " at \"" + id + "\"";
    }
    return std::nullopt;
}

std::optional<std::string> check_corr_monotonicity(const RiskTree& tree, std::mt19937_64& rng) {
    std::vector<std::string> internals;
    for (const auto& id : tree.depth_first_ids())
        if (!tree.node(id).is_leaf() && tree.node(id).children.size() >= 2) internals.push_back(id);
    if (internals.empty()) return std::nullopt;
    const auto agg = aggregate_tree(tree);
    const std::string& target = internals[static_cast<std::size_t>(rng() % internals.size())];
    const CorrelationMatrix& m = *tree.matrix(target);
    const std::size_t n = m.order();
    const std::size_t i = static_cast<std::size_t>(rng() % n);
    std::size_t j = static_cast<std::size_t>(rng() % (n - 1));
    if (j >= i) ++j;
    CorrelationMatrix bumped = m;
    const double rho = m(i, j);
    const double up = rho + (1.0 - rho) * uniform01(rng);
    bumped.set(i, j, up);
    bumped.set(j, i, up);
    std::map<std::string, CorrelationMatrix> matrices = tree.matrices();
    matrices.insert_or_assign(target, bumped);
    const RiskTree bumped_tree = RiskTree::build(tree.root_id(), tree.nodes(), std::move(matrices));
    const double after = aggregate_tree(bumped_tree).bscr();
    if (after < agg.bscr() * (1.0 - 1e-12) - 1e-300)
        return "raising rho(" + std::to_string(i) + "," + std::to_string(j) + ") of \"" + target +
               "\" lowered the aggregate from " + std::to_string(agg.bscr()) + " to " +
               std::to_string(after);
    return std::nullopt;
}

std::optional<std::string> check_nested_equals_genuine(const RiskTree&, std::mt19937_64& rng) {
    // Random two-level tree with an identity module matrix: the nested value
    // must match the genuine bottom-up aggregate of the block-diagonal base.
    const std::size_t nmod = 1 + static_cast<std::size_t>(rng() % 5);
    std::vector<RiskNode> nodes;
    std::map<std::string, CorrelationMatrix> matrices;
    RiskNode root{"root", "root", {}, 0.0, std::nullopt};
    std::vector<double> leaves;
    std::vector<CorrelationMatrix> blocks;
    for (std::size_t m = 0; m < nmod; ++m) {
        const std::size_t nleaf = 1 + static_cast<std::size_t>(rng() % 5);
        RiskNode mod{"m" + std::to_string(m), "", {}, 0.0, std::nullopt};
        for (std::size_t l = 0; l < nleaf; ++l) {
            RiskNode leaf{"m" + std::to_string(m) + "_l" + std::to_string(l), "", {},
                          uniform_in(rng, 50.0, 500.0), std::nullopt};
            mod.children.push_back(leaf.id);
            leaves.push_back(leaf.standalone_scr);
            nodes.push_back(std::move(leaf));
        }
        blocks.push_back(random_correlation_psd(nleaf, rng));
        matrices.emplace(mod.id, blocks.back());
        root.children.push_back(mod.id);
        nodes.push_back(std::move(mod));
    }
    matrices.emplace("root", CorrelationMatrix::identity(nmod));
    nodes.push_back(root);
    const RiskTree tree = RiskTree::build("root", std::move(nodes), std::move(matrices));

    CorrelationMatrix base(leaves.size(), 0.0);
    std::size_t offset = 0;
    for (const auto& block : blocks) {
        for (std::size_t i = 0; i < block.order(); ++i)
            for (std::size_t j = 0; j < block.order(); ++j) base.set(offset + i, offset + j, block(i, j));
        offset += block.order();
    }
    // canonical depth-first leaf order equals block order by construction
    const double nested = aggregate_tree(tree).bscr();
    const double genuine = aggregate_full_base(leaves, base);
    if (rel_diff(nested, genuine) > 1e-12)
        return "nested " + std::to_string(nested) + " vs genuine " + std::to_string(genuine);
    return std::nullopt;
}

std::optional<std::string> check_aggregate_homogeneity(const RiskTree& tree, std::mt19937_64& rng) {
    const double lambda = uniform_in(rng, 0.5, 3.0);
    const auto agg = aggregate_tree(tree);
    const auto level1 = tree.node(tree.root_id()).children;
    if (!level1.empty()) {
        std::vector<double> s = standalone_of(agg, level1);
        const double base = aggregate_level(s, *tree.matrix(tree.root_id()));
        for (auto& v : s) v *= lambda;
        const double scaled = aggregate_level(s, *tree.matrix(tree.root_id()));
        if (rel_diff(scaled, lambda * base) > 1e-12)
            return "aggregate_level does not scale: " + std::to_string(scaled) + " vs lambda*" +
                   std::to_string(base);
    }
    const double scaled_tree = aggregate_tree(scaled_leaves(tree, lambda)).bscr();
    if (rel_diff(scaled_tree, lambda * agg.bscr()) > 1e-12)
        return "aggregate_tree does not scale";
    return std::nullopt;
}

struct NamedCheck {
    const char* name;
    CheckFn fn;
};

constexpr NamedCheck kChecks[] = {
    {"full-allocation", check_full_allocation},
    {"euler-gradient", check_euler_gradient},
    {"aggregation-homogeneity", check_aggregate_homogeneity},
    {"sfep-homogeneity", check_sfep_homogeneity},
    {"corollary-inequality", check_corollary},
    {"allocation-ratio-bounds", check_ar_bounds},
    {"covariance-proxy-identity", check_covariance_proxy},
    {"comonotonic-fixed-point", check_comonotonic},
    {"calibrate-inverse", check_calibrate_inverse},
    {"subadditivity", check_subadditivity},
    {"correlation-monotonicity", check_corr_monotonicity},
    {"nested-equals-genuine", check_nested_equals_genuine},
};

}  // namespace

std::vector<PropertyFinding> run_property_suite(const RiskTree& tree, std::uint64_t seed,
                                                int trials) {
    std::vector<PropertyFinding> out;
    const auto validation = validate_tree(tree);
    if (has_errors(validation)) {
        for (const auto& f : validation)
            if (f.severity == Severity::error)
                out.push_back({"tree-validation", false, f.message});
        return out;
    }

    // Trial 0 is the tree as given; trials 1..n are perturbations drawn from
    // one seeded stream so the whole run is reproducible.
    std::mt19937_64 gen(seed);
    std::vector<RiskTree> variants;
    variants.push_back(tree);
    for (int t = 0; t < trials; ++t) variants.push_back(perturb(tree, gen));

    std::size_t check_index = 0;
    for (const auto& check : kChecks) {
        PropertyFinding finding{check.name, true, ""};
        for (std::size_t t = 0; t < variants.size(); ++t) {
            std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (check_index + 1)) ^ (t << 1));
            std::optional<std::string> failure;
            try {
                failure = check.fn(variants[t], rng);
            } catch (const std::exception& e) {
                failure = std::string("exception: ") + e.what();
            }
            if (failure) {
                finding.passed = false;
                finding.detail = "trial " + std::to_string(t) + ": " + *failure;
                break;
            }
        }
        out.push_back(std::move(finding));
        ++check_index;
    }
    return out;
}

bool all_passed(const std::vector<PropertyFinding>& findings) {
    return std::all_of(findings.begin(), findings.end(),
                       [](const PropertyFinding& f) { return f.passed; });
}

}  // namespace scr

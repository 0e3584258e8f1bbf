#include "scr/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace scr {

using nlohmann::json;

// --- CorrelationMatrix -----------------------------------------------------

CorrelationMatrix::CorrelationMatrix(std::size_t order, double off_diagonal)
    : order_(order), entries_(order * order, off_diagonal) {
    for (std::size_t i = 0; i < order_; ++i) entries_[i * order_ + i] = 1.0;
}

CorrelationMatrix CorrelationMatrix::identity(std::size_t order) {
    return CorrelationMatrix(order, 0.0);
}

CorrelationMatrix CorrelationMatrix::comonotonic(std::size_t order) {
    return CorrelationMatrix(order, 1.0);
}

CorrelationMatrix CorrelationMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ParseError("correlation matrix has no rows");
    CorrelationMatrix m;
    m.order_ = rows.size();
    m.entries_.reserve(m.order_ * m.order_);
    for (const auto& row : rows) {
        if (row.size() != m.order_)
            throw ParseError("matrix order mismatch: " + std::to_string(rows.size()) +
                             " rows but a row of length " + std::to_string(row.size()));
        m.entries_.insert(m.entries_.end(), row.begin(), row.end());
    }
    return m;
}

std::vector<std::vector<double>> CorrelationMatrix::rows() const {
    std::vector<std::vector<double>> out(order_);
    for (std::size_t i = 0; i < order_; ++i)
        out[i].assign(entries_.begin() + static_cast<std::ptrdiff_t>(i * order_),
                      entries_.begin() + static_cast<std::ptrdiff_t>((i + 1) * order_));
    return out;
}

bool CorrelationMatrix::is_symmetric() const {
    for (std::size_t i = 0; i < order_; ++i)
        for (std::size_t j = i + 1; j < order_; ++j)
            if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
}

bool CorrelationMatrix::has_unit_diagonal() const {
    for (std::size_t i = 0; i < order_; ++i)
        if ((*this)(i, i) != 1.0) return false;
    return true;
}

bool CorrelationMatrix::entries_in_range() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; });
}

double CorrelationMatrix::min_eigenvalue() const {
    if (order_ == 0) return 0.0;
    // Cyclic Jacobi rotations; plenty for the matrix sizes seen here.
    std::vector<double> a = entries_;
    const std::size_t n = order_;
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (std::abs(apq) < 1e-18) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, at(i, i));
    return lo;
}

// --- RiskTree ---------------------------------------------------------------

RiskTree RiskTree::build(std::string root_id, std::vector<RiskNode> nodes,
                         std::map<std::string, CorrelationMatrix> matrices) {
    RiskTree t;
    t.root_ = std::move(root_id);
    t.nodes_ = std::move(nodes);
    t.matrices_ = std::move(matrices);
    for (std::size_t i = 0; i < t.nodes_.size(); ++i)
        t.index_.emplace(t.nodes_[i].id, i);  // first occurrence wins
    for (const auto& n : t.nodes_)
        for (const auto& c : n.children) t.parent_.emplace(c, n.id);
    return t;
}

bool RiskTree::contains(std::string_view id) const {
    return index_.find(std::string(id)) != index_.end();
}

const RiskNode& RiskTree::node(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw std::out_of_range("unknown node id: " + std::string(id));
    return nodes_[it->second];
}

const CorrelationMatrix* RiskTree::matrix(std::string_view id) const {
    auto it = matrices_.find(std::string(id));
    return it == matrices_.end() ? nullptr : &it->second;
}

std::optional<std::string> RiskTree::parent_of(std::string_view id) const {
    auto it = parent_.find(std::string(id));
    if (it == parent_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> RiskTree::depth_first_ids() const {
    std::vector<std::string> out;
    if (!contains(root_)) return out;
    std::set<std::string> seen;
    std::vector<std::string> stack{root_};
    while (!stack.empty()) {
        std::string id = std::move(stack.back());
        stack.pop_back();
        if (!seen.insert(id).second) continue;  // cycle guard
        if (!contains(id)) continue;
        const RiskNode& n = node(id);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
        out.push_back(std::move(id));
    }
    return out;
}

std::vector<std::string> RiskTree::leaf_ids_depth_first() const {
    std::vector<std::string> out;
    for (const auto& id : depth_first_ids())
        if (node(id).is_leaf()) out.push_back(id);
    return out;
}

int RiskTree::depth_of(std::string_view id) const {
    int d = 0;
    std::string cur(id);
    std::set<std::string> seen;
    while (cur != root_) {
        if (!seen.insert(cur).second) return -1;
        auto p = parent_of(cur);
        if (!p) return -1;
        cur = *p;
        ++d;
    }
    return d;
}

bool RiskTree::is_ancestor(std::string_view ancestor, std::string_view descendant) const {
    std::string cur(descendant);
    std::set<std::string> seen;
    while (true) {
        auto p = parent_of(cur);
        if (!p || !seen.insert(cur).second) return false;
        if (*p == ancestor) return true;
        cur = *p;
    }
}

bool RiskTree::operator==(const RiskTree& other) const {
    if (root_ != other.root_ || matrices_ != other.matrices_) return false;
    if (nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const RiskNode& a = nodes_[i];
        const RiskNode& b = other.nodes_[i];
        if (a.id != b.id || a.name != b.name || a.children != b.children ||
            a.standalone_scr != b.standalone_scr || a.driver != b.driver)
            return false;
    }
    return true;
}

// --- validation --------------------------------------------------------------

bool has_errors(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::error; });
}

std::vector<Finding> validate_tree(const RiskTree& tree) {
    std::vector<Finding> out;
    auto error = [&](std::string node, std::string msg) {
        out.push_back({Severity::error, std::move(node), std::move(msg)});
    };
    auto warning = [&](std::string node, std::string msg) {
        out.push_back({Severity::warning, std::move(node), std::move(msg)});
    };

    const auto& nodes = tree.nodes();
    if (nodes.empty()) {
        error("", "tree has no nodes");
        return out;
    }

    // id uniqueness
    std::set<std::string> ids;
    for (const auto& n : nodes)
        if (!ids.insert(n.id).second) error(n.id, "duplicate id \"" + n.id + "\"");

    if (!tree.contains(tree.root_id()))
        error(tree.root_id(), "root \"" + tree.root_id() + "\" is not a node");

    // edge sanity: known children, single parent
    std::map<std::string, std::string> parent_seen;
    for (const auto& n : nodes) {
        std::set<std::string> child_set;
        for (const auto& c : n.children) {
            if (!tree.contains(c)) {
                error(n.id, "node \"" + n.id + "\" references unknown child \"" + c + "\"");
                continue;
            }
            if (!child_set.insert(c).second)
                error(n.id, "node \"" + n.id + "\" lists child \"" + c + "\" twice");
            auto [it, inserted] = parent_seen.emplace(c, n.id);
            if (!inserted && it->second != n.id)
                error(c, "node \"" + c + "\" has multiple parents (\"" + it->second +
                             "\" and \"" + n.id + "\")");
        }
        if (n.id == tree.root_id() && parent_seen.count(n.id))
            error(n.id, "root \"" + n.id + "\" appears as a child");
    }

    // leaf SCRs non-negative; drivers non-negative
    for (const auto& n : nodes) {
        if (n.is_leaf()) {
            if (!(n.standalone_scr >= 0.0) || !std::isfinite(n.standalone_scr))
                error(n.id, "negative leaf SCR on \"" + n.id + "\" (" +
                                std::to_string(n.standalone_scr) + ")");
        }
        if (n.driver && (!(*n.driver >= 0.0) || !std::isfinite(*n.driver)))
            error(n.id, "negative driver on \"" + n.id + "\"");
    }

    // connectivity / cycles: walk from the root
    if (tree.contains(tree.root_id())) {
        std::set<std::string> reachable;
        std::vector<std::string> stack{tree.root_id()};
        bool cycle = false;
        while (!stack.empty()) {
            std::string id = std::move(stack.back());
            stack.pop_back();
            if (!reachable.insert(id).second) {
                cycle = true;
                error(id, "cycle detected at \"" + id + "\"");
                continue;
            }
            if (!tree.contains(id)) continue;
            for (const auto& c : tree.node(id).children) stack.push_back(c);
        }
        (void)cycle;
        for (const auto& n : nodes)
            if (!reachable.count(n.id))
                error(n.id, "node \"" + n.id + "\" is not reachable from the root");
    }

    // matrices: present for every internal node, right order, well-formed
    for (const auto& n : nodes) {
        if (n.is_leaf()) continue;
        const CorrelationMatrix* m = tree.matrix(n.id);
        if (!m) {
            error(n.id, "internal node \"" + n.id + "\" has no correlation matrix");
            continue;
        }
        if (m->order() != n.children.size()) {
            error(n.id, "matrix order mismatch on \"" + n.id + "\": order " +
                            std::to_string(m->order()) + " for " +
                            std::to_string(n.children.size()) + " children");
            continue;
        }
        bool well_formed = true;
        for (std::size_t i = 0; i < m->order() && well_formed; ++i) {
            for (std::size_t j = 0; j < m->order(); ++j) {
                const double v = (*m)(i, j);
                if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
                    error(n.id, "correlation out of range on \"" + n.id + "\" at (" +
                                    std::to_string(i) + "," + std::to_string(j) + "): " +
                                    std::to_string(v));
                    well_formed = false;
                    break;
                }
            }
        }
        if (!well_formed) continue;
        if (!m->is_symmetric()) {
            error(n.id, "asymmetric matrix on \"" + n.id + "\"");
            continue;
        }
        if (!m->has_unit_diagonal()) {
            error(n.id, "matrix diagonal != 1 on \"" + n.id + "\"");
            continue;
        }
        const double lo = m->min_eigenvalue();
        if (lo < -1e-9)
            warning(n.id, "matrix on \"" + n.id + "\" is not positive semidefinite (min eigenvalue " +
                              std::to_string(lo) + ")");
    }

    // matrices keyed to leaves or unknown nodes are almost certainly typos
    for (const auto& [id, m] : tree.matrices()) {
        (void)m;
        if (!tree.contains(id))
            error(id, "matrix for unknown node \"" + id + "\"");
        else if (tree.node(id).is_leaf())
            error(id, "matrix for leaf node \"" + id + "\"");
    }

    return out;
}

// --- parse / serialize --------------------------------------------------------

namespace {

double require_finite_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where + " is not a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(where + " is not finite");
    return v;
}

RiskTree tree_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("document root is not a JSON object");
    if (!doc.contains("root") || !doc["root"].is_string())
        throw ParseError("missing or non-string \"root\"");
    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        throw ParseError("missing or non-array \"nodes\"");

    std::vector<RiskNode> nodes;
    nodes.reserve(doc["nodes"].size());
    for (const auto& jn : doc["nodes"]) {
        if (!jn.is_object()) throw ParseError("node entry is not an object");
        RiskNode n;
        if (!jn.contains("id") || !jn["id"].is_string())
            throw ParseError("node without a string \"id\"");
        n.id = jn["id"].get<std::string>();
        n.name = jn.value("name", n.id);
        if (jn.contains("children")) {
            if (!jn["children"].is_array())
                throw ParseError("\"children\" of \"" + n.id + "\" is not an array");
            for (const auto& c : jn["children"]) {
                if (!c.is_string())
                    throw ParseError("child of \"" + n.id + "\" is not a string");
                n.children.push_back(c.get<std::string>());
            }
        }
        const bool has_scr = jn.contains("scr");
        if (n.children.empty() && !has_scr)
            throw ParseError("leaf \"" + n.id + "\" has no \"scr\"");
        if (!n.children.empty() && has_scr)
            throw ParseError("internal node \"" + n.id + "\" must not carry \"scr\"");
        if (has_scr) n.standalone_scr = require_finite_number(jn["scr"], "\"scr\" of \"" + n.id + "\"");
        if (jn.contains("driver"))
            n.driver = require_finite_number(jn["driver"], "\"driver\" of \"" + n.id + "\"");
        nodes.push_back(std::move(n));
    }

    std::map<std::string, CorrelationMatrix> matrices;
    if (doc.contains("matrices")) {
        if (!doc["matrices"].is_object()) throw ParseError("\"matrices\" is not an object");
        for (const auto& [id, jm] : doc["matrices"].items()) {
            if (!jm.is_array()) throw ParseError("matrix of \"" + id + "\" is not an array");
            std::vector<std::vector<double>> rows;
            for (const auto& jrow : jm) {
                if (!jrow.is_array()) throw ParseError("matrix row of \"" + id + "\" is not an array");
                std::vector<double> row;
                for (const auto& v : jrow)
                    row.push_back(require_finite_number(v, "matrix entry of \"" + id + "\""));
                rows.push_back(std::move(row));
            }
            if (rows.empty()) throw ParseError("matrix of \"" + id + "\" is empty");
            for (const auto& row : rows)
                if (row.size() != rows.size())
                    throw ParseError("matrix order mismatch on \"" + id + "\": " +
                                     std::to_string(rows.size()) + " rows but a row of length " +
                                     std::to_string(row.size()));
            matrices.emplace(id, CorrelationMatrix::from_rows(rows));
        }
    }

    return RiskTree::build(doc["root"].get<std::string>(), std::move(nodes), std::move(matrices));
}

}  // namespace

RiskTree parse_tree_unvalidated(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
    return tree_from_json(doc);
}

RiskTree parse_tree(const std::string& document) {
    RiskTree tree = parse_tree_unvalidated(document);
    const auto findings = validate_tree(tree);
    if (has_errors(findings)) {
        std::ostringstream msg;
        msg << "invalid tree:";
        for (const auto& f : findings)
            if (f.severity == Severity::error) msg << "\n  - " << f.message;
        throw ValidationError(msg.str());
    }
    return tree;
}

RiskTree parse_tree_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tree document: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read tree document: " + path.string());
    return parse_tree(buf.str());
}

std::string serialize_tree(const RiskTree& tree, int indent) {
    json doc;
    doc["root"] = tree.root_id();
    doc["nodes"] = json::array();
    for (const auto& n : tree.nodes()) {
        json jn;
        jn["id"] = n.id;
        jn["name"] = n.name;
        if (n.is_leaf())
            jn["scr"] = n.standalone_scr;
        else
            jn["children"] = n.children;
        if (n.driver) jn["driver"] = *n.driver;
        doc["nodes"].push_back(std::move(jn));
    }
    doc["matrices"] = json::object();
    for (const auto& [id, m] : tree.matrices()) doc["matrices"][id] = m.rows();
    return doc.dump(indent);
}

// --- principles ----------------------------------------------------------------

Principle parse_principle(std::string_view name) {
    if (name == "sfep" || name == "euler") return Principle::sfep;
    if (name == "haircut") return Principle::haircut;
    if (name == "marginal") return Principle::marginal;
    if (name == "covariance") return Principle::covariance;
    if (name == "market") return Principle::market;
    throw std::invalid_argument("unknown allocation principle: " + std::string(name));
}

std::string_view to_string(Principle p) {
    switch (p) {
        case Principle::sfep: return "sfep";
        case Principle::haircut: return "haircut";
        case Principle::marginal: return "marginal";
        case Principle::covariance: return "covariance";
        case Principle::market: return "market";
    }
    return "?";
}

// --- antichains ------------------------------------------------------------------

std::vector<std::string> children_of(const RiskTree& tree, std::string_view id) {
    return tree.node(id).children;
}

std::vector<std::string> cut_at_depth(const RiskTree& tree, int depth) {
    if (depth < 0) throw std::invalid_argument("cut depth must be >= 0");
    std::vector<std::string> out;
    for (const auto& id : tree.depth_first_ids()) {
        const int d = tree.depth_of(id);
        if (d == depth || (d < depth && tree.node(id).is_leaf())) out.push_back(id);
    }
    return out;
}

bool is_antichain(const RiskTree& tree, std::span<const std::string> ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!tree.contains(ids[i])) return false;
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (i == j) continue;
            if (ids[i] == ids[j] || tree.is_ancestor(ids[i], ids[j])) return false;
        }
    }
    return true;
}

bool is_complete_antichain(const RiskTree& tree, std::span<const std::string> ids) {
    if (!is_antichain(tree, ids)) return false;
    std::set<std::string> cut(ids.begin(), ids.end());
    for (const auto& leaf : tree.leaf_ids_depth_first()) {
        if (cut.count(leaf)) continue;
        std::string cur = leaf;
        bool covered = false;
        while (auto p = tree.parent_of(cur)) {
            if (cut.count(*p)) {
                covered = true;
                break;
            }
            cur = *p;
        }
        if (!covered) return false;
    }
    return true;
}

}  // namespace scr

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scr {

/// Raised when a tree document cannot be read as JSON / does not match the schema.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a structurally well-formed document violates a tree invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a numeric operation cannot produce a meaningful result
/// (indefinite quadratic form, zero denominator, ...).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on file-system I/O failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Symmetric correlation matrix with unit diagonal, one row per child of the
/// owning tree node, in child order. Entries are stored exactly as provided;
/// symmetry and range are checked by validation, not enforced on write.
class CorrelationMatrix {
public:
    CorrelationMatrix() = default;

    /// n x n matrix with 1 on the diagonal and `off_diagonal` elsewhere.
    explicit CorrelationMatrix(std::size_t order, double off_diagonal = 0.0);

    static CorrelationMatrix identity(std::size_t order);
    static CorrelationMatrix comonotonic(std::size_t order);

    /// Builds from explicit rows. Throws ParseError if rows are ragged or empty.
    static CorrelationMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t order() const { return order_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * order_ + j]; }

    /// Sets a single entry (no mirroring); callers building symmetric matrices
    /// set both (i,j) and (j,i).
    void set(std::size_t i, std::size_t j, double value) { entries_[i * order_ + j] = value; }

    std::vector<std::vector<double>> rows() const;

    bool is_symmetric() const;
    bool has_unit_diagonal() const;
    bool entries_in_range() const;  // all entries in [-1, 1]

    /// Smallest eigenvalue, via cyclic Jacobi sweeps. Assumes symmetry.
    double min_eigenvalue() const;

    bool operator==(const CorrelationMatrix&) const = default;

private:
    std::size_t order_ = 0;
    std::vector<double> entries_;  // row-major, order_ * order_
};

struct RiskNode {
    std::string id;
    std::string name;
    std::vector<std::string> children;     // empty for leaves
    double standalone_scr = 0.0;           // authoritative input for leaves only
    std::optional<double> driver;          // market-driven allocation weight

    bool is_leaf() const { return children.empty(); }
};

/// The multilevel aggregation scheme: nodes, parent/child edges, per-node
/// correlation matrices and leaf capital requirements. Immutable once built;
/// concurrent reads are safe.
class RiskTree {
public:
    RiskTree() = default;

    /// Stores the parts without validating invariants; run validate_tree to check.
    static RiskTree build(std::string root_id, std::vector<RiskNode> nodes,
                          std::map<std::string, CorrelationMatrix> matrices);

    const std::string& root_id() const { return root_; }
    const std::vector<RiskNode>& nodes() const { return nodes_; }  // document order
    const std::map<std::string, CorrelationMatrix>& matrices() const { return matrices_; }

    bool contains(std::string_view id) const;
    const RiskNode& node(std::string_view id) const;               // throws std::out_of_range
    const CorrelationMatrix* matrix(std::string_view id) const;    // nullptr when absent
    std::optional<std::string> parent_of(std::string_view id) const;

    /// Pre-order ids from the root, children in document order. Cycle-safe.
    std::vector<std::string> depth_first_ids() const;
    /// Canonical leaf order: depth-first document order.
    std::vector<std::string> leaf_ids_depth_first() const;

    int depth_of(std::string_view id) const;  // root = 0; -1 when unreachable
    bool is_ancestor(std::string_view ancestor, std::string_view descendant) const;

    bool operator==(const RiskTree& other) const;

private:
    std::string root_;
    std::vector<RiskNode> nodes_;
    std::map<std::string, CorrelationMatrix> matrices_;
    std::unordered_map<std::string, std::size_t> index_;            // id -> first position
    std::unordered_map<std::string, std::string> parent_;           // child -> first parent
};

enum class Severity { error, warning };

struct Finding {
    Severity severity = Severity::error;
    std::string node_id;  // offending node or matrix owner; may be empty
    std::string message;
};

/// Checks every tree invariant. Errors make the tree unusable; warnings
/// (currently only non-PSD matrices) do not.
std::vector<Finding> validate_tree(const RiskTree& tree);

bool has_errors(const std::vector<Finding>& findings);

/// Parses the JSON tree document and validates it.
/// Throws ParseError on malformed documents, ValidationError when invariants fail.
RiskTree parse_tree(const std::string& document);
RiskTree parse_tree_file(const std::filesystem::path& path);  // throws IoError on read failure

/// Structural parse only; run validate_tree on the result to see the findings.
RiskTree parse_tree_unvalidated(const std::string& document);

/// Canonical JSON encoding of the tree; parse_tree(serialize_tree(t)) == t.
std::string serialize_tree(const RiskTree& tree, int indent = 2);

enum class Principle { sfep, haircut, marginal, covariance, market };

Principle parse_principle(std::string_view name);  // throws std::invalid_argument
std::string_view to_string(Principle p);

/// Selector plus parameters for one allocation principle.
struct PrincipleSpec {
    Principle principle = Principle::sfep;
    std::map<std::string, double> drivers;       // market: node id -> risk driver
    std::map<std::string, double> covariances;   // covariance, explicit mode
    std::optional<double> variance;              // covariance, explicit mode

    bool explicit_covariance() const { return !covariances.empty(); }
};

// Tree cuts ("antichains"): sets of nodes none of which is an ancestor of another.
std::vector<std::string> children_of(const RiskTree& tree, std::string_view id);
/// Nodes at the given depth plus leaves above it: a complete antichain.
std::vector<std::string> cut_at_depth(const RiskTree& tree, int depth);
bool is_antichain(const RiskTree& tree, std::span<const std::string> ids);
/// True when every leaf of the tree lies under exactly one of the ids.
bool is_complete_antichain(const RiskTree& tree, std::span<const std::string> ids);

}  // namespace scr

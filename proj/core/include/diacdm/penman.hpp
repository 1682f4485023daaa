#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "diacdm/tensor.hpp"

namespace diacdm {

enum class AmrNodeKind { Instance, Constant };

struct AmrNode {
    std::string variable;  // empty for constants
    std::string label;     // concept such as "want-01", or the constant literal
    AmrNodeKind kind = AmrNodeKind::Instance;
};

/// Directed edge; inverse roles (`:ARG0-of`) are stored in their base form
/// with source and target swapped.
struct AmrEdge {
    std::size_t source = 0;
    std::string relation;
    std::size_t target = 0;
};

/// Parsed semantic graph of one question. nodes[0] is the root.
struct AmrGraph {
    std::vector<AmrNode> nodes;
    std::vector<AmrEdge> edges;

    std::size_t node_count() const noexcept { return nodes.size(); }
};

/// Parses one PENMAN-serialized graph.
///
/// Re-entrant variables resolve to the node that defines them, even when the
/// definition appears later in the text. Bare symbols that are not defined
/// anywhere become constant nodes, unless they have the shape of a variable
/// (a letter optionally followed by digits), which is a DanglingReference.
/// Lines starting with '#' are metadata and skipped.
///
/// Throws Error with EmptyInput, UnbalancedParens, DuplicateVariable,
/// DanglingReference or MalformedPenman.
AmrGraph parse_penman(std::string_view text);

/// Serializes back to PENMAN, rooted at nodes[0]. Edges reached from their
/// target are written as inverse roles.
std::string to_penman(const AmrGraph& graph);

/// D^-1/2 (A + I) D^-1/2 with A the undirected 0/1 adjacency; relation
/// labels and edge direction are ignored.
class NormalizedAdjacency {
   public:
    explicit NormalizedAdjacency(const AmrGraph& graph);

    std::size_t size() const noexcept { return n_; }
    double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    const std::vector<double>& values() const noexcept { return values_; }
    /// Self-looped degree of node i (row sum of A + I).
    double degree(std::size_t i) const { return degrees_[i]; }

    Tensor as_tensor() const;

   private:
    std::size_t n_ = 0;
    std::vector<double> values_;
    std::vector<double> degrees_;
};

inline NormalizedAdjacency normalized_adjacency(const AmrGraph& graph) {
    return NormalizedAdjacency(graph);
}

}  // namespace diacdm

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "losam/common.hpp"

namespace losam::graph {

using Edge = std::pair<Vertex, Vertex>;  // (parent, child)

/// Directed acyclic graph over vertices 0..d-1.
///
/// Acyclicity and index bounds are validated on construction; a Dag value
/// is immutable afterwards. Edges are stored sorted and de-duplicated, and
/// parent/child lists are kept in ascending index order.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::size_t num_vertices, std::vector<Edge> edges = {},
                 std::vector<std::string> labels = {});

    std::size_t num_vertices() const noexcept { return parents_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Label of `v`, falling back to "x<v>" when no labels were supplied.
    std::string label(Vertex v) const;

    const VertexSet& parents(Vertex v) const;
    const VertexSet& children(Vertex v) const;
    VertexSet ancestors(Vertex v) const;
    VertexSet descendants(Vertex v) const;
    bool has_edge(Vertex parent, Vertex child) const;
    /// True iff there is a directed path of length >= 1 from `from` to `to`.
    bool has_path(Vertex from, Vertex to) const;

    VertexSet roots() const;
    VertexSet leaves() const;

    /// Kahn's algorithm with ascending-index tie-break.
    std::vector<Vertex> topological_order() const;

    /// Dense ancestor relation: result[v][u] is true iff u is a strict ancestor of v.
    std::vector<std::vector<bool>> ancestor_matrix() const;

    /// Copy with vertex i renamed to mapping[i].
    Dag relabeled(std::span<const Vertex> mapping) const;

    friend bool operator==(const Dag& a, const Dag& b) {
        return a.num_vertices() == b.num_vertices() && a.edges_ == b.edges_;
    }

private:
    void check_vertex(Vertex v) const;

    std::vector<Edge> edges_;
    std::vector<std::string> labels_;
    std::vector<VertexSet> parents_;
    std::vector<VertexSet> children_;
};

/// A permutation of 0..d-1; position in `order` is the vertex rank.
struct TopologicalOrder {
    std::vector<Vertex> order;

    /// rank[v] = position of v in the order. Throws ParameterError on a non-permutation.
    std::vector<std::size_t> ranks() const;
    friend bool operator==(const TopologicalOrder&, const TopologicalOrder&) = default;
};

/// Throws ParameterError unless `order` is a permutation of 0..d-1.
void check_permutation(std::span<const Vertex> order, std::size_t d);

/// Erdos-Renyi DAG: random vertex permutation, then each of the d(d-1)/2
/// forward pairs is an edge independently with p = avg_edges / (d(d-1)/2).
Dag er_random_dag(std::size_t d, double avg_edges, std::uint64_t seed);

/// Bayes-ball reachability test for a being d-separated from b given z.
bool d_separated(const Dag& dag, Vertex a, Vertex b, std::span<const Vertex> z = {});

/// Number of root ancestors of every vertex (0 for roots).
std::vector<std::size_t> root_ancestor_counts(const Dag& dag);
/// Non-roots with at least two root ancestors.
VertexSet mrd_set(const Dag& dag);
/// Non-roots with exactly one root ancestor.
VertexSet srd_set(const Dag& dag);

/// True iff every edge's parent precedes its child. Throws on a non-permutation.
bool is_valid_order(const Dag& dag, const TopologicalOrder& order);

}  // namespace losam::graph

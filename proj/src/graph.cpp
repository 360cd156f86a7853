#include "losam/graph.hpp"

#include <algorithm>
#include <deque>
#include <queue>

#include "losam/rng.hpp"

namespace losam::graph {

Dag::Dag(std::size_t num_vertices, std::vector<Edge> edges, std::vector<std::string> labels)
    : edges_(std::move(edges)),
      labels_(std::move(labels)),
      parents_(num_vertices),
      children_(num_vertices) {
    if (!labels_.empty() && labels_.size() != num_vertices) {
        throw ParameterError("Dag: expected " + std::to_string(num_vertices) + " labels, got " +
                             std::to_string(labels_.size()));
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (const auto& [p, c] : edges_) {
        if (p >= num_vertices || c >= num_vertices) {
            throw ParameterError("Dag: edge (" + std::to_string(p) + ", " + std::to_string(c) +
                                 ") out of range for d=" + std::to_string(num_vertices));
        }
        if (p == c) throw ParameterError("Dag: self-loop on vertex " + std::to_string(p));
        parents_[c].push_back(p);
        children_[p].push_back(c);
    }
    for (auto& ps : parents_) std::sort(ps.begin(), ps.end());
    for (auto& cs : children_) std::sort(cs.begin(), cs.end());
    if (topological_order().size() != num_vertices) {
        throw ParameterError("Dag: edge set contains a directed cycle");
    }
}

std::string Dag::label(Vertex v) const {
    check_vertex(v);
    return labels_.empty() ? "x" + std::to_string(v) : labels_[v];
}

void Dag::check_vertex(Vertex v) const {
    if (v >= num_vertices()) {
        throw ParameterError("vertex " + std::to_string(v) + " out of range for d=" +
                             std::to_string(num_vertices()));
    }
}

const VertexSet& Dag::parents(Vertex v) const {
    check_vertex(v);
    return parents_[v];
}

const VertexSet& Dag::children(Vertex v) const {
    check_vertex(v);
    return children_[v];
}

namespace {

VertexSet reach(const std::vector<VertexSet>& adjacency, Vertex start) {
    std::vector<bool> seen(adjacency.size(), false);
    std::deque<Vertex> queue(adjacency[start].begin(), adjacency[start].end());
    VertexSet out;
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop_front();
        if (seen[v]) continue;
        seen[v] = true;
        out.push_back(v);
        for (Vertex w : adjacency[v]) {
            if (!seen[w]) queue.push_back(w);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

VertexSet Dag::ancestors(Vertex v) const {
    check_vertex(v);
    return reach(parents_, v);
}

VertexSet Dag::descendants(Vertex v) const {
    check_vertex(v);
    return reach(children_, v);
}

bool Dag::has_edge(Vertex parent, Vertex child) const {
    check_vertex(parent);
    check_vertex(child);
    return std::binary_search(children_[parent].begin(), children_[parent].end(), child);
}

bool Dag::has_path(Vertex from, Vertex to) const {
    const VertexSet desc = descendants(from);
    check_vertex(to);
    return std::binary_search(desc.begin(), desc.end(), to);
}

VertexSet Dag::roots() const {
    VertexSet out;
    for (Vertex v = 0; v < num_vertices(); ++v) {
        if (parents_[v].empty()) out.push_back(v);
    }
    return out;
}

VertexSet Dag::leaves() const {
    VertexSet out;
    for (Vertex v = 0; v < num_vertices(); ++v) {
        if (children_[v].empty()) out.push_back(v);
    }
    return out;
}

std::vector<Vertex> Dag::topological_order() const {
    const std::size_t d = num_vertices();
    std::vector<std::size_t> indegree(d);
    std::priority_queue<Vertex, std::vector<Vertex>, std::greater<>> ready;
    for (Vertex v = 0; v < d; ++v) {
        indegree[v] = parents_[v].size();
        if (indegree[v] == 0) ready.push(v);
    }
    std::vector<Vertex> order;
    order.reserve(d);
    while (!ready.empty()) {
        const Vertex v = ready.top();
        ready.pop();
        order.push_back(v);
        for (Vertex c : children_[v]) {
            if (--indegree[c] == 0) ready.push(c);
        }
    }
    return order;
}

std::vector<std::vector<bool>> Dag::ancestor_matrix() const {
    const std::size_t d = num_vertices();
    std::vector<std::vector<bool>> anc(d, std::vector<bool>(d, false));
    for (Vertex v : topological_order()) {
        for (Vertex p : parents_[v]) {
            anc[v][p] = true;
            for (Vertex u = 0; u < d; ++u) {
                if (anc[p][u]) anc[v][u] = true;
            }
        }
    }
    return anc;
}

Dag Dag::relabeled(std::span<const Vertex> mapping) const {
    check_permutation(mapping, num_vertices());
    std::vector<Edge> edges;
    edges.reserve(edges_.size());
    for (const auto& [p, c] : edges_) edges.emplace_back(mapping[p], mapping[c]);
    std::vector<std::string> labels;
    if (!labels_.empty()) {
        labels.resize(labels_.size());
        for (Vertex v = 0; v < num_vertices(); ++v) labels[mapping[v]] = labels_[v];
    }
    return Dag(num_vertices(), std::move(edges), std::move(labels));
}

void check_permutation(std::span<const Vertex> order, std::size_t d) {
    if (order.size() != d) {
        throw ParameterError("order has length " + std::to_string(order.size()) + ", expected " +
                             std::to_string(d));
    }
    std::vector<bool> seen(d, false);
    for (Vertex v : order) {
        if (v >= d || seen[v]) throw ParameterError("order is not a permutation of 0..d-1");
        seen[v] = true;
    }
}

std::vector<std::size_t> TopologicalOrder::ranks() const {
    check_permutation(order, order.size());
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    return rank;
}

Dag er_random_dag(std::size_t d, double avg_edges, std::uint64_t seed) {
    if (d == 0) throw ParameterError("er_random_dag: d must be >= 1");
    const double max_edges = 0.5 * static_cast<double>(d) * static_cast<double>(d - 1);
    if (!(avg_edges >= 0.0) || avg_edges > max_edges) {
        throw ParameterError("er_random_dag: avg_edges=" + std::to_string(avg_edges) +
                             " outside [0, " + std::to_string(max_edges) + "]");
    }
    if (d == 1) return Dag(1);
    const double p = avg_edges / max_edges;
    Rng rng(seed);
    const auto perm = rng.permutation(d);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            if (rng.bernoulli(p)) edges.emplace_back(perm[i], perm[j]);
        }
    }
    return Dag(d, std::move(edges));
}

bool d_separated(const Dag& dag, Vertex a, Vertex b, std::span<const Vertex> z) {
    const std::size_t d = dag.num_vertices();
    if (a >= d || b >= d) throw ParameterError("d_separated: vertex out of range");
    if (a == b) throw ParameterError("d_separated: a and b must differ");
    std::vector<bool> in_z(d, false);
    for (Vertex v : z) {
        if (v >= d) throw ParameterError("d_separated: conditioning vertex out of range");
        in_z[v] = true;
    }
    if (in_z[a] || in_z[b]) throw ParameterError("d_separated: a and b must not be in z");

    // Vertices that are in z or have a descendant in z (these open colliders).
    std::vector<bool> z_or_ancestor(d, false);
    std::deque<Vertex> pending;
    for (Vertex v : z) pending.push_back(v);
    while (!pending.empty()) {
        const Vertex v = pending.front();
        pending.pop_front();
        if (z_or_ancestor[v]) continue;
        z_or_ancestor[v] = true;
        for (Vertex p : dag.parents(v)) pending.push_back(p);
    }

    // Bayes ball: state (v, arrived_from_child). Passing rules follow the
    // collider / non-collider activity conditions.
    std::vector<bool> visited_up(d, false), visited_down(d, false);
    std::deque<std::pair<Vertex, bool>> queue;
    queue.emplace_back(a, true);
    while (!queue.empty()) {
        const auto [v, from_child] = queue.front();
        queue.pop_front();
        if (from_child) {
            if (visited_up[v]) continue;
            visited_up[v] = true;
        } else {
            if (visited_down[v]) continue;
            visited_down[v] = true;
        }
        if (v == b) return false;
        if (from_child) {
            if (in_z[v]) continue;
            for (Vertex p : dag.parents(v)) queue.emplace_back(p, true);
            for (Vertex c : dag.children(v)) queue.emplace_back(c, false);
        } else {
            if (!in_z[v]) {
                for (Vertex c : dag.children(v)) queue.emplace_back(c, false);
            }
            if (z_or_ancestor[v]) {
                for (Vertex p : dag.parents(v)) queue.emplace_back(p, true);
            }
        }
    }
    return true;
}

std::vector<std::size_t> root_ancestor_counts(const Dag& dag) {
    const auto anc = dag.ancestor_matrix();
    const VertexSet roots = dag.roots();
    std::vector<std::size_t> counts(dag.num_vertices(), 0);
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        for (Vertex r : roots) {
            if (anc[v][r]) ++counts[v];
        }
    }
    return counts;
}

VertexSet mrd_set(const Dag& dag) {
    const auto counts = root_ancestor_counts(dag);
    VertexSet out;
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        if (counts[v] >= 2) out.push_back(v);
    }
    return out;
}

VertexSet srd_set(const Dag& dag) {
    const auto counts = root_ancestor_counts(dag);
    VertexSet out;
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        if (counts[v] == 1) out.push_back(v);
    }
    return out;
}

bool is_valid_order(const Dag& dag, const TopologicalOrder& order) {
    check_permutation(order.order, dag.num_vertices());
    const auto rank = order.ranks();
    for (const auto& [p, c] : dag.edges()) {
        if (rank[p] >= rank[c]) return false;
    }
    return true;
}

}  // namespace losam::graph

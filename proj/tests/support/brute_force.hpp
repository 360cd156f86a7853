#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "losam/graph.hpp"

namespace brute {

using losam::Vertex;
using losam::graph::Dag;

/// d-separation by enumerating every simple path of the skeleton.
inline bool d_separated(const Dag& dag, Vertex a, Vertex b, const std::vector<Vertex>& z) {
    const std::size_t d = dag.num_vertices();
    auto in_z = [&](Vertex v) { return std::find(z.begin(), z.end(), v) != z.end(); };
    auto opens_collider = [&](Vertex v) {
        if (in_z(v)) return true;
        const auto desc = dag.descendants(v);
        return std::any_of(desc.begin(), desc.end(), in_z);
    };
    std::vector<Vertex> path{a};
    std::vector<bool> used(d, false);
    used[a] = true;
    bool active_found = false;

    std::function<void()> walk = [&]() {
        if (active_found) return;
        const Vertex cur = path.back();
        if (cur == b) {
            for (std::size_t k = 1; k + 1 < path.size(); ++k) {
                const Vertex prev = path[k - 1], v = path[k], next = path[k + 1];
                const bool collider = dag.has_edge(prev, v) && dag.has_edge(next, v);
                if (collider ? !opens_collider(v) : in_z(v)) return;
            }
            active_found = true;
            return;
        }
        for (Vertex nb = 0; nb < d; ++nb) {
            if (used[nb] || !(dag.has_edge(cur, nb) || dag.has_edge(nb, cur))) continue;
            used[nb] = true;
            path.push_back(nb);
            walk();
            path.pop_back();
            used[nb] = false;
        }
    };
    walk();
    return !active_found;
}

/// Every permutation of 0..d-1 that is a valid topological order.
inline bool brute_valid(const Dag& dag, const std::vector<Vertex>& order) {
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    for (const auto& [p, c] : dag.edges()) {
        if (rank[p] >= rank[c]) return false;
    }
    return true;
}

}  // namespace brute

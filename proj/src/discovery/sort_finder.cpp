#include <algorithm>

#include "losam/discovery.hpp"

namespace losam::discovery {

VertexSet ld_prune(ResidualSet& residuals, const VertexSet& unsorted) {
    std::vector<bool> pruned(unsorted.empty() ? 0 : unsorted.back() + 1, false);
    for (std::size_t a = 0; a < unsorted.size(); ++a) {
        for (std::size_t b = a + 1; b < unsorted.size(); ++b) {
            const Vertex i = unsorted[a], j = unsorted[b];
            // e_j vs q_ji (e_i on e_j) and e_i vs q_ij (e_j on e_i).
            const bool j_explains_i = residuals.linear_residual_test(j, i).independent;
            const bool i_explains_j = residuals.linear_residual_test(i, j).independent;
            if (j_explains_i && !i_explains_j) pruned[i] = true;
            if (i_explains_j && !j_explains_i) pruned[j] = true;
        }
    }
    VertexSet out;
    for (Vertex u : unsorted) {
        if (pruned[u]) out.push_back(u);
    }
    return out;
}

SortFinderResult sort_finder(StatOracle& oracle, const VertexSet& roots,
                             const SortFinderOptions& options, RegressionLedger* ledger) {
    const std::size_t d = oracle.num_vertices();
    SortFinderResult result;
    if (d == 0) return result;
    if (roots.empty()) throw ParameterError("sort_finder: root set is empty");

    std::vector<Vertex> pi(roots.begin(), roots.end());
    std::sort(pi.begin(), pi.end());
    pi.erase(std::unique(pi.begin(), pi.end()), pi.end());
    if (pi.back() >= d) throw ParameterError("sort_finder: root index out of range");
    VertexSet unsorted;
    for (Vertex v = 0; v < d; ++v) {
        if (!std::binary_search(pi.begin(), pi.end(), v)) unsorted.push_back(v);
    }

    while (!unsorted.empty()) {
        SortState state;
        state.pi = pi;
        state.unsorted = unsorted;

        auto residuals = oracle.residualize(pi, unsorted);
        if (ledger) ledger->record_sort_finder(pi.size(), unsorted.size());

        state.ld_pruned = ld_prune(*residuals, unsorted);
        std::set_difference(unsorted.begin(), unsorted.end(), state.ld_pruned.begin(),
                            state.ld_pruned.end(), std::back_inserter(state.candidates));
        if (options.keep_residuals) {
            for (Vertex u : unsorted) {
                if (auto e = residuals->residual(u)) state.residuals.emplace(u, std::move(*e));
            }
        }
        if (state.candidates.empty()) {
            result.states.push_back(state);
            throw SortFinderError("sort_finder: every unsorted vertex was pruned at |pi| = " +
                                      std::to_string(pi.size()),
                                  std::move(state));
        }

        Vertex best = state.candidates.front();
        double best_value = 0.0;
        bool first = true;
        for (Vertex u : state.candidates) {
            const double t = residuals->t_star(u);
            state.t_star.emplace(u, t);
            if (first || t < best_value) {
                best = u;
                best_value = t;
                first = false;
            }
        }
        state.selected = best;
        pi.push_back(best);
        unsorted.erase(std::find(unsorted.begin(), unsorted.end(), best));
        result.states.push_back(std::move(state));
    }
    result.order.order = std::move(pi);
    return result;
}

}  // namespace losam::discovery

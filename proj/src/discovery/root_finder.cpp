#include <algorithm>
#include <array>

#include "losam/discovery.hpp"

namespace losam::discovery {

void RegressionLedger::record_root_finder(Vertex target, std::span<const Vertex> covariates) {
    std::vector<Vertex> covs(covariates.begin(), covariates.end());
    std::sort(covs.begin(), covs.end());
    auto key = std::make_pair(target, std::move(covs));
    if (std::find(seen_.begin(), seen_.end(), key) != seen_.end()) return;
    const std::size_t size = key.second.size();
    seen_.push_back(std::move(key));
    ++root_finder[size];
    root_finder_max_covariates = std::max(root_finder_max_covariates, size);
    if (size > kRootFinderMaxCovariates) ++covariate_bound_violations;
}

void RegressionLedger::record_sort_finder(std::size_t covariates, std::size_t count) {
    sort_finder[covariates] += count;
}

DecisionMatrix decisions(const PairwiseResults& pairwise) {
    DecisionMatrix out(pairwise.size(), std::vector<bool>(pairwise.size(), true));
    for (std::size_t a = 0; a < pairwise.size(); ++a) {
        for (std::size_t b = 0; b < pairwise.size(); ++b) {
            if (a != b) out[a][b] = pairwise[a].at(b).independent;
        }
    }
    return out;
}

VertexSet find_vp_inducers(const DecisionMatrix& independent) {
    const std::size_t d = independent.size();
    VertexSet out;
    for (Vertex i = 0; i < d; ++i) {
        VertexSet dependent;
        for (Vertex j = 0; j < d; ++j) {
            if (j != i && !independent[i][j]) dependent.push_back(j);
        }
        bool induces = false;
        for (std::size_t a = 0; a < dependent.size() && !induces; ++a) {
            for (std::size_t b = a + 1; b < dependent.size() && !induces; ++b) {
                induces = independent[dependent[a]][dependent[b]];
            }
        }
        if (induces) out.push_back(i);
    }
    return out;
}

VertexSet isolated_roots(const VertexSet& remaining, const DecisionMatrix& independent) {
    VertexSet out;
    for (Vertex i : remaining) {
        const bool isolated = std::all_of(remaining.begin(), remaining.end(), [&](Vertex j) {
            return j == i || independent[i][j];
        });
        if (isolated) out.push_back(i);
    }
    return out;
}

bool regression_identification(Vertex i, Vertex j, StatOracle& oracle, RegressionLedger* ledger) {
    if (i == j) throw ParameterError("regression_identification: i and j must differ");
    const std::array<Vertex, 1> on_i{i}, on_j{j};
    const bool forward = oracle.residual_test(j, on_i, i).independent;
    const bool backward = oracle.residual_test(i, on_j, j).independent;
    if (ledger) {
        ledger->record_root_finder(j, on_i);
        ledger->record_root_finder(i, on_j);
    }
    return forward && !backward;
}

VertexSet candidate_superset(const VertexSet& reduced, const IdentifiedMatrix& identified) {
    VertexSet out;
    for (Vertex i : reduced) {
        const bool ancestor_of_some = std::any_of(reduced.begin(), reduced.end(),
                                                  [&](Vertex j) { return identified[i][j]; });
        const bool has_ancestor = std::any_of(reduced.begin(), reduced.end(),
                                              [&](Vertex k) { return identified[k][i]; });
        if (ancestor_of_some && !has_ancestor) out.push_back(i);
    }
    return out;
}

VertexSet root_confirmation(const VertexSet& w, const VertexSet& reduced,
                            const IdentifiedMatrix& identified, const DecisionMatrix& independent,
                            StatOracle& oracle, RegressionLedger* ledger) {
    VertexSet confirmed;
    for (Vertex i : w) {
        bool ok = true;
        for (Vertex j : w) {
            if (!ok) break;
            if (j == i || independent[i][j]) continue;
            const std::array<Vertex, 2> covs{std::min(i, j), std::max(i, j)};
            for (Vertex k : reduced) {
                if (k == i || k == j || !identified[j][k]) continue;
                if (ledger) ledger->record_root_finder(k, covs);
                if (covs.size() > kRootFinderMaxCovariates) {
                    throw EstimatorError("root_confirmation: covariate bound exceeded");
                }
                if (!oracle.residual_test(k, covs, j).independent) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) confirmed.push_back(i);
    }
    return confirmed;
}

VertexSet root_cross_check(const VertexSet& w, const VertexSet& reduced,
                           const IdentifiedMatrix& identified, const DecisionMatrix& independent,
                           StatOracle& oracle) {
    VertexSet kept;
    for (Vertex i : w) {
        bool ok = true;
        for (Vertex j : w) {
            if (j == i || independent[i][j]) continue;
            bool witnessed = false;
            for (Vertex k : reduced) {
                if (k == i || k == j || !identified[i][k]) continue;
                if (!oracle.conditional_test(k, j, i).independent) {
                    witnessed = true;
                    break;
                }
            }
            if (!witnessed) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
    }
    return kept;
}

namespace {

VertexSet difference(const VertexSet& a, const VertexSet& b) {
    VertexSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

/// Fills identified[i][j] for all dependent pairs inside `set`; independent pairs stay false.
void identify_pairs(const VertexSet& set, const DecisionMatrix& independent, StatOracle& oracle,
                    RegressionLedger* ledger, IdentifiedMatrix& identified) {
    const std::size_t d = independent.size();
    // additive[i][j]: residual of x_j regressed on x_i is independent of x_i.
    std::vector<std::vector<bool>> additive(d, std::vector<bool>(d, false));
    for (Vertex i : set) {
        const std::array<Vertex, 1> on_i{i};
        for (Vertex j : set) {
            if (j == i || independent[i][j]) continue;
            additive[i][j] = oracle.residual_test(j, on_i, i).independent;
            if (ledger) ledger->record_root_finder(j, on_i);
        }
    }
    for (Vertex i : set) {
        for (Vertex j : set) {
            if (j != i && !independent[i][j]) identified[i][j] = additive[i][j] && !additive[j][i];
        }
    }
}

Vertex fallback_root(const VertexSet& pool, const VertexSet& scope, const IdentifiedMatrix& identified) {
    Vertex best = pool.front();
    std::size_t best_desc = 0, best_anc = 0;
    bool first = true;
    for (Vertex v : pool) {
        std::size_t desc = 0, anc = 0;
        for (Vertex u : scope) {
            if (identified[v][u]) ++desc;
            if (identified[u][v]) ++anc;
        }
        if (first || desc > best_desc || (desc == best_desc && anc < best_anc)) {
            best = v;
            best_desc = desc;
            best_anc = anc;
            first = false;
        }
    }
    return best;
}

}  // namespace

RootFinderResult root_finder(StatOracle& oracle, const RootFinderOptions& options,
                             RegressionLedger* ledger) {
    const std::size_t d = oracle.num_vertices();
    RootFinderResult result;
    RootFinderTrace& trace = result.trace;
    if (d == 0) return result;

    VertexSet all(d);
    for (Vertex v = 0; v < d; ++v) all[v] = v;

    // Stage 1: marginal tests, VP pruning, isolated roots.
    trace.pairwise.assign(d, std::vector<IndependenceResult>(d));
    for (Vertex a = 0; a < d; ++a) {
        for (Vertex b = a + 1; b < d; ++b) {
            trace.pairwise[a][b] = oracle.marginal_test(a, b);
            trace.pairwise[b][a] = trace.pairwise[a][b];
        }
    }
    const DecisionMatrix independent = decisions(trace.pairwise);
    trace.vp_inducers = find_vp_inducers(independent);
    const VertexSet remaining = difference(all, trace.vp_inducers);
    trace.isolated_roots = isolated_roots(remaining, independent);
    trace.reduced = difference(remaining, trace.isolated_roots);

    // Stage 2: regression identification inside V'', superset W, confirmation.
    trace.identified.assign(d, std::vector<bool>(d, false));
    identify_pairs(trace.reduced, independent, oracle, ledger, trace.identified);
    trace.candidate_superset = candidate_superset(trace.reduced, trace.identified);
    trace.confirmed_roots = root_confirmation(trace.candidate_superset, trace.reduced,
                                              trace.identified, independent, oracle, ledger);
    if (options.cross_check) {
        trace.cross_check_roots = root_cross_check(trace.candidate_superset, trace.reduced,
                                                   trace.identified, independent, oracle);
        std::set_symmetric_difference(trace.confirmed_roots.begin(), trace.confirmed_roots.end(),
                                      trace.cross_check_roots->begin(), trace.cross_check_roots->end(),
                                      std::back_inserter(trace.cross_check_disagreements));
        if (!trace.cross_check_disagreements.empty()) {
            trace.warnings.push_back("root confirmation: conditional-independence cross-check disagrees on " +
                                     std::to_string(trace.cross_check_disagreements.size()) +
                                     " vertex/vertices");
        }
    }

    std::set_union(trace.isolated_roots.begin(), trace.isolated_roots.end(),
                   trace.confirmed_roots.begin(), trace.confirmed_roots.end(),
                   std::back_inserter(trace.roots));

    const bool nothing_confirmed = !trace.reduced.empty() && trace.confirmed_roots.empty();
    if (nothing_confirmed || trace.roots.empty()) {
        VertexSet pool = trace.candidate_superset;
        VertexSet scope = trace.reduced;
        if (pool.empty()) pool = trace.reduced;
        if (pool.empty()) {
            // Every vertex was pruned as a VP inducer.
            pool = all;
            scope = all;
            identify_pairs(all, independent, oracle, ledger, trace.identified);
        }
        const Vertex pick = fallback_root(pool, scope, trace.identified);
        trace.fallback_used = true;
        trace.warnings.push_back("root finder confirmed no roots; falling back to vertex " +
                                 std::to_string(pick) + " (most identified descendants)");
        trace.roots.insert(std::upper_bound(trace.roots.begin(), trace.roots.end(), pick), pick);
    }
    result.roots = trace.roots;
    return result;
}

}  // namespace losam::discovery

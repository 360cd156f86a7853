#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "losam/graph.hpp"
#include "losam/oracle.hpp"
#include "losam/synth.hpp"

namespace losam::discovery {

/// Symmetric matrix of pairwise marginal test results (diagonal unused).
using PairwiseResults = std::vector<std::vector<IndependenceResult>>;
/// independent[a][b] decisions extracted from PairwiseResults.
using DecisionMatrix = std::vector<std::vector<bool>>;
/// identified[i][j]: i identified as an ancestor of j.
using IdentifiedMatrix = std::vector<std::vector<bool>>;

/// Counts of nonparametric regressions by covariate-set size.
struct RegressionLedger {
    std::map<std::size_t, std::size_t> root_finder;  // size -> unique (target, covariates) fits
    std::map<std::size_t, std::size_t> sort_finder;  // size -> regressions
    std::size_t root_finder_max_covariates = 0;
    std::size_t covariate_bound_violations = 0;  // root-finder fits with more than 2 covariates

    void record_root_finder(Vertex target, std::span<const Vertex> covariates);
    void record_sort_finder(std::size_t covariates, std::size_t count);

private:
    std::vector<std::pair<Vertex, std::vector<Vertex>>> seen_;
};

inline constexpr std::size_t kRootFinderMaxCovariates = 2;

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

struct RootFinderOptions {
    /// Also evaluate the conditional-independence confirmation rule and log disagreements.
    bool cross_check = false;
};

struct RootFinderTrace {
    PairwiseResults pairwise;
    VertexSet vp_inducers;
    VertexSet isolated_roots;
    VertexSet reduced;              // V'' = V minus VP inducers minus isolated roots
    IdentifiedMatrix identified;    // only meaningful for pairs inside `reduced`
    VertexSet candidate_superset;   // W
    VertexSet confirmed_roots;      // confirmed subset of W
    std::optional<VertexSet> cross_check_roots;
    VertexSet cross_check_disagreements;
    bool fallback_used = false;
    VertexSet roots;                // isolated_roots u confirmed_roots (or fallback)
    std::vector<std::string> warnings;
};

DecisionMatrix decisions(const PairwiseResults& pairwise);

/// {i : exists j, k with i dep j, i dep k and j indep k}.
VertexSet find_vp_inducers(const DecisionMatrix& independent);

/// Members of `remaining` independent of every other member of `remaining`.
VertexSet isolated_roots(const VertexSet& remaining, const DecisionMatrix& independent);

/// i identified as an ancestor of j: residual(j ~ i) indep x_i and residual(i ~ j) dep x_j.
bool regression_identification(Vertex i, Vertex j, StatOracle& oracle,
                               RegressionLedger* ledger = nullptr);

/// W: members identified as an ancestor of some member, with no member identified as theirs.
VertexSet candidate_superset(const VertexSet& reduced, const IdentifiedMatrix& identified);

/// Confirms each x_i in W: for every dependent x_j in W and every x_k in `reduced`
/// with x_j identified as an ancestor of x_k, residual(x_k ~ x_i, x_j) must be
/// independent of x_j.
VertexSet root_confirmation(const VertexSet& w, const VertexSet& reduced,
                            const IdentifiedMatrix& identified, const DecisionMatrix& independent,
                            StatOracle& oracle, RegressionLedger* ledger = nullptr);

/// Conditional-independence variant: x_i is kept when for every dependent x_j in W
/// some x_k identified as a descendant of x_i has x_k dep x_j given x_i.
VertexSet root_cross_check(const VertexSet& w, const VertexSet& reduced,
                           const IdentifiedMatrix& identified, const DecisionMatrix& independent,
                           StatOracle& oracle);

struct RootFinderResult {
    VertexSet roots;
    RootFinderTrace trace;
};

RootFinderResult root_finder(StatOracle& oracle, const RootFinderOptions& options = {},
                             RegressionLedger* ledger = nullptr);

// ---------------------------------------------------------------------------
// Sort finding
// ---------------------------------------------------------------------------

struct SortState {
    std::vector<Vertex> pi;         // sorted prefix at the start of the iteration
    VertexSet unsorted;             // U
    VertexSet ld_pruned;            // Q
    VertexSet candidates;           // U' = U \ Q
    std::map<Vertex, double> t_star;
    std::optional<Vertex> selected;
    std::map<Vertex, stats::Vector> residuals;  // filled only when requested
};

/// Raised when every unsorted vertex is pruned; carries the offending state.
class SortFinderError : public EstimatorError {
public:
    SortFinderError(const std::string& what, SortState state)
        : EstimatorError(what), state_(std::move(state)) {}
    const SortState& state() const noexcept { return state_; }

private:
    SortState state_;
};

/// Q = {x_i : exists x_j with e_j indep q_ji and e_i dep q_ij}, where q_ji is the
/// residual of e_i linearly regressed on e_j.
VertexSet ld_prune(ResidualSet& residuals, const VertexSet& unsorted);

struct SortFinderOptions {
    bool keep_residuals = false;
};

struct SortFinderResult {
    graph::TopologicalOrder order;
    std::vector<SortState> states;
};

SortFinderResult sort_finder(StatOracle& oracle, const VertexSet& roots,
                             const SortFinderOptions& options = {},
                             RegressionLedger* ledger = nullptr);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct LosamConfig {
    EmpiricalConfig estimator;
    RootFinderOptions root_finder;
    SortFinderOptions sort_finder;
    /// Column labels in canonical order. When set, data columns are matched to
    /// these labels by name and every tie-break uses the reference position.
    std::vector<std::string> reference_labels;
};

struct StageTiming {
    double root_finder_ms = 0.0;
    double sort_finder_ms = 0.0;
    double total_ms = 0.0;
};

struct LosamResult {
    graph::TopologicalOrder order;
    RootFinderTrace root_trace;
    std::vector<SortState> sort_states;
    RegressionLedger ledger;
    StageTiming timing;
    std::vector<std::string> warnings;
};

/// Root finder then sort finder against any oracle (vertex ids as given).
LosamResult losam(StatOracle& oracle, const LosamConfig& config = {});

/// Empirical pipeline on standardized data. Traces and the output order use
/// the dataset's own column indices.
LosamResult losam(const synth::Dataset& data, const LosamConfig& config = {});

}  // namespace losam::discovery

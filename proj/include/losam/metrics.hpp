#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "losam/graph.hpp"
#include "losam/stats.hpp"
#include "losam/synth.hpp"

namespace losam::metrics {

struct OrderingScore {
    std::size_t d_top = 0;       // edges whose child is ranked before its parent
    std::size_t edge_count = 0;
    std::optional<double> a_top; // 1 - d_top / edge_count; absent for edgeless graphs
    std::string note;
};

OrderingScore a_top(const graph::TopologicalOrder& order, const graph::Dag& dag);

struct GraphScore {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t reversed = 0;
    std::size_t shd = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ShdOptions {
    /// Count a reversed edge twice (as a deletion plus an insertion).
    bool double_count_reversed = false;
};

/// SHD = fp + fn + reversed, where reversed edges are excluded from fp/fn.
/// For precision/recall a reversed edge is a false positive and a false negative.
GraphScore shd_f1(const graph::Dag& pred, const graph::Dag& truth, ShdOptions options = {});

struct PruneOptions {
    double level = stats::kDefaultLevel;
    std::size_t permutations = 200;
    std::size_t max_samples = stats::kDefaultMaxSamples;
    std::uint64_t seed = 0;
    stats::KernelRidgeParams kernel_ridge;
};

/// Keeps p -> c (p before c in `order`) iff the residual of x_c regressed on
/// the other predecessors of c is dependent on x_p.
graph::Dag prune_edges(const synth::Dataset& data, const graph::TopologicalOrder& order,
                       const PruneOptions& options = {});

/// Ascending sample variance, ties by index.
graph::TopologicalOrder var_sort(const synth::Dataset& data);
/// Seeded uniform permutation.
graph::TopologicalOrder rand_sort(std::size_t d, std::uint64_t seed);

}  // namespace losam::metrics

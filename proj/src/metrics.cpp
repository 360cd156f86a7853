#include "losam/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "losam/rng.hpp"

namespace losam::metrics {

OrderingScore a_top(const graph::TopologicalOrder& order, const graph::Dag& dag) {
    graph::check_permutation(order.order, dag.num_vertices());
    const auto rank = order.ranks();
    OrderingScore score;
    score.edge_count = dag.num_edges();
    for (const auto& [parent, child] : dag.edges()) {
        if (rank[parent] > rank[child]) ++score.d_top;
    }
    if (score.edge_count == 0) {
        score.note = "graph has no edges; A_top is undefined";
    } else {
        score.a_top = 1.0 - static_cast<double>(score.d_top) / static_cast<double>(score.edge_count);
    }
    return score;
}

GraphScore shd_f1(const graph::Dag& pred, const graph::Dag& truth, ShdOptions options) {
    if (pred.num_vertices() != truth.num_vertices()) {
        throw ParameterError("shd_f1: vertex counts differ (" + std::to_string(pred.num_vertices()) +
                             " vs " + std::to_string(truth.num_vertices()) + ")");
    }
    GraphScore s;
    for (const auto& [p, c] : pred.edges()) {
        if (truth.has_edge(p, c)) {
            ++s.tp;
        } else if (truth.has_edge(c, p)) {
            ++s.reversed;
        } else {
            ++s.fp;
        }
    }
    for (const auto& [p, c] : truth.edges()) {
        if (!pred.has_edge(p, c) && !pred.has_edge(c, p)) ++s.fn;
    }
    s.shd = s.fp + s.fn + (options.double_count_reversed ? 2 : 1) * s.reversed;
    const double predicted = static_cast<double>(pred.num_edges());
    const double actual = static_cast<double>(truth.num_edges());
    s.precision = predicted > 0 ? static_cast<double>(s.tp) / predicted : 0.0;
    s.recall = actual > 0 ? static_cast<double>(s.tp) / actual : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

graph::Dag prune_edges(const synth::Dataset& data, const graph::TopologicalOrder& order,
                       const PruneOptions& options) {
    data.validate();
    const std::size_t d = data.num_columns();
    graph::check_permutation(order.order, d);

    const auto rows = stats::subsample_rows(data.num_samples(), options.max_samples,
                                            derive_seed(options.seed, 1));
    stats::Matrix x(static_cast<Eigen::Index>(rows.size()), data.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = data.values.row(rows[i]);
    }
    stats::HsicParams hsic;
    hsic.permutations = options.permutations;
    hsic.level = options.level;
    hsic.max_samples = 0;
    const stats::KernelRidgeRegressor regressor(options.kernel_ridge);

    std::vector<graph::Edge> edges;
    for (std::size_t pos = 1; pos < d; ++pos) {
        const Vertex c = order.order[pos];
        const stats::Vector xc = x.col(static_cast<Eigen::Index>(c));
        for (std::size_t q = 0; q < pos; ++q) {
            const Vertex p = order.order[q];
            stats::Matrix others(x.rows(), static_cast<Eigen::Index>(pos - 1));
            Eigen::Index k = 0;
            for (std::size_t r = 0; r < pos; ++r) {
                if (r != q) others.col(k++) = x.col(static_cast<Eigen::Index>(order.order[r]));
            }
            const stats::Vector residual = others.cols() == 0 ? xc : regressor.fit(others)->residuals(xc);
            const auto result = stats::independence_test(residual, x.col(static_cast<Eigen::Index>(p)), hsic,
                                                         derive_seed(options.seed, 2, c, p));
            if (!result.independent) edges.emplace_back(p, c);
        }
    }
    std::vector<std::string> labels = data.column_labels;
    return graph::Dag(d, std::move(edges), std::move(labels));
}

graph::TopologicalOrder var_sort(const synth::Dataset& data) {
    const std::size_t d = data.num_columns();
    std::vector<double> var(d);
    for (std::size_t c = 0; c < d; ++c) {
        const auto col = data.values.col(static_cast<Eigen::Index>(c));
        const double v = (col.array() - col.mean()).square().mean();
        // Round to 10 significant digits so standardized columns tie exactly.
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9e", v);
        var[c] = std::strtod(buf, nullptr);
    }
    graph::TopologicalOrder out;
    out.order.resize(d);
    std::iota(out.order.begin(), out.order.end(), Vertex{0});
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](Vertex a, Vertex b) { return var[a] < var[b]; });
    return out;
}

graph::TopologicalOrder rand_sort(std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    graph::TopologicalOrder out;
    const auto perm = rng.permutation(d);
    out.order.assign(perm.begin(), perm.end());
    return out;
}

}  // namespace losam::metrics

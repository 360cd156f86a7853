#include <algorithm>
#include <chrono>
#include <cmath>

#include "losam/discovery.hpp"

namespace losam::discovery {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Runs f, re-raising library errors with the stage name prefixed.
template <typename F>
auto staged(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const SortFinderError& e) {
        throw SortFinderError(stage + ": " + e.what(), e.state());
    } catch (const EstimatorError& e) {
        throw EstimatorError(stage + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(stage + ": " + e.what());
    } catch (const ParameterError& e) {
        throw ParameterError(stage + ": " + e.what());
    }
}

VertexSet map_set(const VertexSet& set, const std::vector<Vertex>& to) {
    VertexSet out;
    out.reserve(set.size());
    for (Vertex v : set) out.push_back(to[v]);
    std::sort(out.begin(), out.end());
    return out;
}

template <typename T>
std::vector<std::vector<T>> map_matrix(const std::vector<std::vector<T>>& m, const std::vector<Vertex>& to) {
    std::vector<std::vector<T>> out = m;
    for (std::size_t a = 0; a < m.size(); ++a) {
        for (std::size_t b = 0; b < m[a].size(); ++b) out[to[a]][to[b]] = m[a][b];
    }
    return out;
}

template <typename V>
std::map<Vertex, V> map_keys(const std::map<Vertex, V>& m, const std::vector<Vertex>& to) {
    std::map<Vertex, V> out;
    for (const auto& [k, v] : m) out.emplace(to[k], v);
    return out;
}

/// Rewrites every vertex id in `result` through `to` (canonical -> data column).
void remap(LosamResult& result, const std::vector<Vertex>& to) {
    for (auto& v : result.order.order) v = to[v];
    auto& t = result.root_trace;
    t.pairwise = map_matrix(t.pairwise, to);
    t.identified = map_matrix(t.identified, to);
    t.vp_inducers = map_set(t.vp_inducers, to);
    t.isolated_roots = map_set(t.isolated_roots, to);
    t.reduced = map_set(t.reduced, to);
    t.candidate_superset = map_set(t.candidate_superset, to);
    t.confirmed_roots = map_set(t.confirmed_roots, to);
    if (t.cross_check_roots) t.cross_check_roots = map_set(*t.cross_check_roots, to);
    t.cross_check_disagreements = map_set(t.cross_check_disagreements, to);
    t.roots = map_set(t.roots, to);
    for (auto& s : result.sort_states) {
        for (auto& v : s.pi) v = to[v];
        s.unsorted = map_set(s.unsorted, to);
        s.ld_pruned = map_set(s.ld_pruned, to);
        s.candidates = map_set(s.candidates, to);
        s.t_star = map_keys(s.t_star, to);
        s.residuals = map_keys(s.residuals, to);
        if (s.selected) s.selected = to[*s.selected];
    }
}

void check_standardized(const synth::Dataset& data, std::vector<std::string>& warnings) {
    const double n = static_cast<double>(data.num_samples());
    for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
        const auto col = data.values.col(c);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / n;
        if (std::abs(mean) > 1e-6 || std::abs(var - 1.0) > 1e-6) {
            warnings.push_back("column '" + data.column_labels.at(static_cast<std::size_t>(c)) +
                               "' is not standardized");
            return;
        }
    }
}

}  // namespace

LosamResult losam(StatOracle& oracle, const LosamConfig& config) {
    LosamResult result;
    const auto start = Clock::now();

    auto roots = staged("root_finder", [&] {
        return root_finder(oracle, config.root_finder, &result.ledger);
    });
    result.timing.root_finder_ms = elapsed_ms(start);
    result.root_trace = std::move(roots.trace);
    result.warnings = result.root_trace.warnings;

    const auto sort_start = Clock::now();
    auto sorted = staged("sort_finder", [&] {
        return sort_finder(oracle, roots.roots, config.sort_finder, &result.ledger);
    });
    result.timing.sort_finder_ms = elapsed_ms(sort_start);
    result.order = std::move(sorted.order);
    result.sort_states = std::move(sorted.states);
    result.timing.total_ms = elapsed_ms(start);

    if (result.ledger.covariate_bound_violations > 0) {
        result.warnings.push_back("root finder exceeded the covariate-set bound");
    }
    return result;
}

LosamResult losam(const synth::Dataset& data, const LosamConfig& config) {
    data.validate();
    const std::size_t d = data.num_columns();

    // to_data[c]: data column holding canonical vertex c.
    std::vector<Vertex> to_data(d);
    for (Vertex c = 0; c < d; ++c) to_data[c] = c;
    if (!config.reference_labels.empty()) {
        if (config.reference_labels.size() != d) {
            throw ParameterError("losam: reference labeling has " +
                                 std::to_string(config.reference_labels.size()) + " names for " +
                                 std::to_string(d) + " columns");
        }
        for (Vertex c = 0; c < d; ++c) {
            const auto it = std::find(data.column_labels.begin(), data.column_labels.end(),
                                      config.reference_labels[c]);
            if (it == data.column_labels.end()) {
                throw ParameterError("losam: reference label '" + config.reference_labels[c] +
                                     "' not found among data columns");
            }
            to_data[c] = static_cast<Vertex>(it - data.column_labels.begin());
        }
        auto sorted = to_data;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ParameterError("losam: reference labeling contains duplicates");
        }
    }

    synth::Dataset canonical;
    canonical.values.resize(data.values.rows(), data.values.cols());
    canonical.column_labels.resize(d);
    for (Vertex c = 0; c < d; ++c) {
        canonical.values.col(static_cast<Eigen::Index>(c)) =
            data.values.col(static_cast<Eigen::Index>(to_data[c]));
        canonical.column_labels[c] = data.column_labels[to_data[c]];
    }

    std::vector<std::string> warnings;
    if (data.num_samples() < 50) {
        warnings.push_back("only " + std::to_string(data.num_samples()) +
                           " samples; independence tests are unreliable below 50");
    }
    check_standardized(data, warnings);

    EmpiricalOracle oracle(canonical, config.estimator);
    LosamResult result = losam(oracle, config);
    remap(result, to_data);
    warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
    result.warnings = std::move(warnings);
    return result;
}

}  // namespace losam::discovery

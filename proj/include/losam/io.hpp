#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "losam/discovery.hpp"
#include "losam/graph.hpp"
#include "losam/metrics.hpp"
#include "losam/synth.hpp"

namespace losam::io {

using Json = nlohmann::json;

// Dag: {"d": int, "edges": [[p, c], ...], "labels": [...]}
Json dag_to_json(const graph::Dag& dag);
graph::Dag dag_from_json(const Json& j);

/// Adjacency matrix, row = parent, column = child, optional header row of labels.
std::string dag_to_adjacency_csv(const graph::Dag& dag);
graph::Dag dag_from_adjacency_csv(const std::string& text);

/// Reads either format, chosen by extension (.json or .csv).
graph::Dag read_dag(const std::filesystem::path& path);
void write_dag(const graph::Dag& dag, const std::filesystem::path& path);

/// Header row = column labels, one sample per row. Values written with %.17g.
std::string dataset_to_csv(const synth::Dataset& data);
/// Throws DataError naming the offending row and column on malformed input.
synth::Dataset dataset_from_csv(const std::string& text);
synth::Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const synth::Dataset& data, const std::filesystem::path& path);

Json spec_to_json(const synth::AnmSpec& spec);
synth::AnmSpec spec_from_json(const Json& j);

struct Bundle {
    synth::AnmSpec spec;
    synth::Dataset data;
    Json meta;
};

/// Writes dag.json, spec.json, data.csv and meta.json into `dir` (created if needed).
void write_bundle(const std::filesystem::path& dir, const synth::GeneratedInstance& instance,
                  std::uint64_t seed);
Bundle read_bundle(const std::filesystem::path& dir);

Json to_json(const stats::IndependenceResult& r);
Json to_json(const discovery::RootFinderTrace& trace);
Json to_json(const discovery::SortState& state);
Json to_json(const discovery::RegressionLedger& ledger);
Json to_json(const metrics::OrderingScore& score);
Json to_json(const metrics::GraphScore& score);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace losam::io

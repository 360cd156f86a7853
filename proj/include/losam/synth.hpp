#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "losam/graph.hpp"

namespace losam::synth {

inline constexpr std::size_t kHiddenUnits = 10;
inline constexpr double kDefaultNoiseVariance = 1.0 / 12.0;

enum class NoiseFamily { Uniform, Laplace, Gaussian };

std::string_view to_string(NoiseFamily family);
/// Case-insensitive; throws ParameterError on unknown names.
NoiseFamily parse_noise_family(std::string_view name);

/// x = sum_k coeff[k] * parent_k, parents in ascending index order.
struct LinearMech {
    std::vector<double> coefficients;
};

/// x = sum_h output[h] * tanh(sum_k input(k, h) * parent_k); no bias terms.
struct MlpMech {
    Eigen::MatrixXd input_weights;  // parents x kHiddenUnits
    Eigen::VectorXd output_weights; // kHiddenUnits
};

/// Roots carry std::monostate.
using Mechanism = std::variant<std::monostate, LinearMech, MlpMech>;

/// Complete description of an additive noise model over a DAG.
struct AnmSpec {
    graph::Dag dag;
    std::vector<Mechanism> mechanisms;  // one per vertex
    NoiseFamily noise_family = NoiseFamily::Uniform;
    double noise_variance = kDefaultNoiseVariance;

    /// Throws ParameterError if a mechanism's arity disagrees with the parent count,
    /// a root carries a mechanism, or a linear coefficient has |c| outside [0.5, 1.5].
    void validate() const;
    bool is_linear(Vertex v) const { return std::holds_alternative<LinearMech>(mechanisms.at(v)); }
    /// Mechanism output for one vertex given its parents' values (ascending parent order).
    double evaluate(Vertex v, std::span<const double> parent_values) const;
};

struct Provenance {
    std::optional<std::uint64_t> seed;
    std::shared_ptr<const AnmSpec> spec;
};

/// n x d observation matrix with column labels.
struct Dataset {
    Eigen::MatrixXd values;
    std::vector<std::string> column_labels;
    Provenance provenance;

    std::size_t num_samples() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t num_columns() const { return static_cast<std::size_t>(values.cols()); }
    /// Throws DataError on n == 0, label-count mismatch or non-finite entries.
    void validate() const;
};

/// Default labels "x0", "x1", ...
std::vector<std::string> default_labels(std::size_t d);

AnmSpec sample_anm_spec(const graph::Dag& dag, double linear_prob, std::uint64_t seed,
                        NoiseFamily noise = NoiseFamily::Uniform,
                        double noise_variance = kDefaultNoiseVariance);

struct SampleOptions {
    /// Test fixtures only: permit noise_variance == 0 (deterministic mechanisms).
    bool testing_allow_zero_noise = false;
};

/// Draw n samples in topological order. Throws GenerationError on non-finite output.
Dataset sample_dataset(const AnmSpec& spec, std::size_t n, std::uint64_t seed,
                       SampleOptions options = {});

/// Per-column zero mean, unit variance (1/n convention). Throws DataError naming a constant column.
Dataset standardize(const Dataset& data);

/// Fraction of causally ordered pairs (i ~> j) where var(i) < var(j); ties score 0.5.
/// Empty optional when the DAG has no edges.
std::optional<double> var_sortability(const Dataset& data, const graph::Dag& dag);
/// Same pairing rule with the R^2 of each column regressed (OLS) on all others.
std::optional<double> r2_sortability(const Dataset& data, const graph::Dag& dag);

struct GenerateParams {
    std::size_t d = 10;
    double avg_edges = 10.0;
    double linear_prob = 0.5;
    NoiseFamily noise = NoiseFamily::Uniform;
    double noise_variance = kDefaultNoiseVariance;
    std::size_t n = 1000;
    std::size_t max_retries = 100;
    double threshold = 0.75;
    std::uint64_t seed = 0;
};

struct GeneratedInstance {
    AnmSpec spec;
    Dataset data;  // standardized
    std::optional<double> r2_sortability;
    std::optional<double> var_sortability_raw;
    std::size_t attempts = 0;
    /// Set when no attempt met the R^2-sortability threshold; the last attempt is returned.
    bool threshold_warning = false;

    const graph::Dag& dag() const { return spec.dag; }
};

/// Resample (dag, spec, data) until standardized R^2-sortability < threshold.
/// threshold >= 1 accepts the first draw; an undefined score (no edges) is accepted.
GeneratedInstance generate_filtered(const GenerateParams& params);

}  // namespace losam::synth

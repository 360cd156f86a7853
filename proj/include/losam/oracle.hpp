#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "losam/graph.hpp"
#include "losam/stats.hpp"
#include "losam/synth.hpp"

namespace losam::discovery {

using stats::IndependenceResult;

/// Residuals e_u of every unsorted vertex u regressed on the sorted set,
/// plus the pairwise and summary statistics computed from them.
class ResidualSet {
public:
    virtual ~ResidualSet() = default;

    /// Tests e_regressor against q, the residual of e_target linearly regressed onto e_regressor.
    virtual IndependenceResult linear_residual_test(Vertex regressor, Vertex target) = 0;
    /// Sum over sorted vertices x_p of the (clamped) mutual information MI(x_p, e_u).
    virtual double t_star(Vertex u) = 0;
    /// The residual vector, when the oracle works on data.
    virtual std::optional<stats::Vector> residual(Vertex /*u*/) const { return std::nullopt; }
};

/// Source of every independence / regression decision the algorithm makes.
class StatOracle {
public:
    virtual ~StatOracle() = default;

    virtual std::size_t num_vertices() const = 0;
    virtual std::string_view mode_name() const = 0;

    virtual IndependenceResult marginal_test(Vertex a, Vertex b) = 0;
    /// Residual of `target` nonparametrically regressed on `covariates`, tested against `probe`.
    virtual IndependenceResult residual_test(Vertex target, std::span<const Vertex> covariates,
                                             Vertex probe) = 0;
    /// a vs b given a single conditioning vertex.
    virtual IndependenceResult conditional_test(Vertex a, Vertex b, Vertex given) = 0;
    virtual std::unique_ptr<ResidualSet> residualize(std::span<const Vertex> sorted,
                                                     std::span<const Vertex> unsorted) = 0;
};

// ---------------------------------------------------------------------------

/// Mechanism shape known to the graph-truth oracle: coefficients for linear
/// vertices, std::nullopt for nonlinear ones (and roots).
using LinearCoefficients = std::vector<std::optional<std::vector<double>>>;

/// Answers every query from the DAG alone, assuming a faithful, identifiable
/// ANM with generic (non-additive) nonlinear mechanisms and non-Gaussian noise.
///
/// Marginal and conditional independence are d-separation. A residual of v
/// regressed on S is independent of S iff v is additively recoverable from S:
/// v = g(S) + eta with eta built only from noise terms outside An(S) u S.
/// Residuals of linear vertices are tracked as exact linear combinations of
/// noise terms, which decides the linear-residual tests.
///
/// Never reads data values.
class GraphTruthOracle final : public StatOracle {
public:
    /// All mechanisms nonlinear.
    explicit GraphTruthOracle(graph::Dag dag);
    GraphTruthOracle(graph::Dag dag, LinearCoefficients linear);
    explicit GraphTruthOracle(const synth::AnmSpec& spec);

    std::size_t num_vertices() const override { return dag_.num_vertices(); }
    std::string_view mode_name() const override { return "graph_truth"; }

    IndependenceResult marginal_test(Vertex a, Vertex b) override;
    IndependenceResult residual_test(Vertex target, std::span<const Vertex> covariates,
                                     Vertex probe) override;
    IndependenceResult conditional_test(Vertex a, Vertex b, Vertex given) override;
    std::unique_ptr<ResidualSet> residualize(std::span<const Vertex> sorted,
                                             std::span<const Vertex> unsorted) override;

    enum class Relation { Independent, Additive, Mixed };

    /// Noise-level form of a residual: linear coefficients over noise terms,
    /// or just a support set when nonlinear.
    struct NoiseForm {
        Relation relation = Relation::Mixed;
        bool linear = true;
        std::vector<double> coefficients;  // indexed by noise (= vertex) id
        std::vector<bool> support;
    };

    /// Residual form of every vertex after regressing on `covariates`.
    std::vector<NoiseForm> residual_forms(std::span<const Vertex> covariates) const;

    const graph::Dag& dag() const { return dag_; }

private:
    graph::Dag dag_;
    LinearCoefficients linear_;
    std::vector<std::vector<bool>> ancestors_;  // ancestors_[v][u]: u strict ancestor of v
};

// ---------------------------------------------------------------------------

enum class RegressorKind { KernelRidge, RandomForest };

struct EmpiricalConfig {
    double level = stats::kDefaultLevel;
    std::size_t permutations = 200;
    std::size_t max_samples = stats::kDefaultMaxSamples;
    /// HSIC kernel bandwidth as a multiple of the median pairwise distance,
    /// for tests that involve a regression residual.
    double hsic_bandwidth_scale = 0.1;
    /// Same, for marginal tests between raw columns.
    double marginal_bandwidth_scale = 1.0;
    std::uint64_t seed = 0;
    RegressorKind regressor = RegressorKind::KernelRidge;
    stats::KernelRidgeParams kernel_ridge;
    stats::RandomForestParams random_forest;
    stats::KsgParams ksg;
};

std::unique_ptr<stats::Regressor> make_regressor(const EmpiricalConfig& config);

/// Decisions from HSIC permutation tests, kernel ridge residuals and KSG
/// mutual information on a dataset. Datasets above max_samples rows are
/// reduced once to a seeded row subset shared by every query.
///
/// Test seeds derive from (config seed, query kind, vertex ids), so a
/// decision does not depend on the order in which queries are issued.
class EmpiricalOracle final : public StatOracle {
public:
    EmpiricalOracle(const synth::Dataset& data, EmpiricalConfig config = {});

    std::size_t num_vertices() const override { return static_cast<std::size_t>(data_.cols()); }
    std::string_view mode_name() const override { return "empirical"; }

    IndependenceResult marginal_test(Vertex a, Vertex b) override;
    IndependenceResult residual_test(Vertex target, std::span<const Vertex> covariates,
                                     Vertex probe) override;
    IndependenceResult conditional_test(Vertex a, Vertex b, Vertex given) override;
    std::unique_ptr<ResidualSet> residualize(std::span<const Vertex> sorted,
                                             std::span<const Vertex> unsorted) override;

    const stats::Matrix& data() const { return data_; }
    const EmpiricalConfig& config() const { return config_; }
    std::size_t regressions_fitted() const { return regressions_fitted_; }

private:
    const stats::CenteredGram& column_gram(Vertex v, bool marginal = false);
    const stats::Vector& residual_of(Vertex target, const std::vector<Vertex>& covariates);
    stats::Matrix columns(std::span<const Vertex> vertices) const;

    stats::Matrix data_;
    EmpiricalConfig config_;
    std::unique_ptr<stats::Regressor> regressor_;
    std::vector<std::unique_ptr<stats::CenteredGram>> grams_;
    std::vector<std::unique_ptr<stats::CenteredGram>> marginal_grams_;
    std::map<std::pair<Vertex, std::vector<Vertex>>, stats::Vector> residual_cache_;
    std::vector<Vertex> last_covariates_;
    std::unique_ptr<stats::FittedRegressor> last_fit_;
    std::size_t regressions_fitted_ = 0;
};

}  // namespace losam::discovery

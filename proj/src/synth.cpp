#include "losam/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "losam/rng.hpp"

namespace losam::synth {

std::string_view to_string(NoiseFamily family) {
    switch (family) {
        case NoiseFamily::Uniform: return "uniform";
        case NoiseFamily::Laplace: return "laplace";
        case NoiseFamily::Gaussian: return "gaussian";
    }
    return "unknown";
}

NoiseFamily parse_noise_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "uniform") return NoiseFamily::Uniform;
    if (lower == "laplace" || lower == "laplacian") return NoiseFamily::Laplace;
    if (lower == "gaussian" || lower == "normal") return NoiseFamily::Gaussian;
    throw ParameterError("unknown noise family '" + std::string(name) + "'");
}

void AnmSpec::validate() const {
    const std::size_t d = dag.num_vertices();
    if (mechanisms.size() != d) {
        throw ParameterError("AnmSpec: expected " + std::to_string(d) + " mechanisms, got " +
                             std::to_string(mechanisms.size()));
    }
    if (noise_variance < 0.0) throw ParameterError("AnmSpec: negative noise variance");
    for (Vertex v = 0; v < d; ++v) {
        const std::size_t arity = dag.parents(v).size();
        const auto where = "AnmSpec: vertex " + std::to_string(v);
        if (arity == 0) {
            if (!std::holds_alternative<std::monostate>(mechanisms[v])) {
                throw ParameterError(where + " is a root but carries a mechanism");
            }
        } else if (const auto* lin = std::get_if<LinearMech>(&mechanisms[v])) {
            if (lin->coefficients.size() != arity) throw ParameterError(where + " arity mismatch");
            for (double c : lin->coefficients) {
                if (std::abs(c) < 0.5 || std::abs(c) > 1.5) {
                    throw ParameterError(where + " has linear coefficient outside [0.5, 1.5]");
                }
            }
        } else if (const auto* mlp = std::get_if<MlpMech>(&mechanisms[v])) {
            if (static_cast<std::size_t>(mlp->input_weights.rows()) != arity ||
                mlp->input_weights.cols() != mlp->output_weights.size()) {
                throw ParameterError(where + " MLP shape mismatch");
            }
        } else {
            throw ParameterError(where + " has parents but no mechanism");
        }
    }
}

double AnmSpec::evaluate(Vertex v, std::span<const double> parent_values) const {
    const auto& mech = mechanisms.at(v);
    if (const auto* lin = std::get_if<LinearMech>(&mech)) {
        double acc = 0.0;
        for (std::size_t k = 0; k < parent_values.size(); ++k) {
            acc += lin->coefficients[k] * parent_values[k];
        }
        return acc;
    }
    if (const auto* mlp = std::get_if<MlpMech>(&mech)) {
        double acc = 0.0;
        for (Eigen::Index h = 0; h < mlp->output_weights.size(); ++h) {
            double pre = 0.0;
            for (std::size_t k = 0; k < parent_values.size(); ++k) {
                pre += mlp->input_weights(static_cast<Eigen::Index>(k), h) * parent_values[k];
            }
            acc += mlp->output_weights(h) * std::tanh(pre);
        }
        return acc;
    }
    return 0.0;
}

void Dataset::validate() const {
    if (values.rows() == 0) throw DataError("dataset has no samples");
    if (column_labels.size() != num_columns()) {
        throw DataError("dataset has " + std::to_string(num_columns()) + " columns but " +
                        std::to_string(column_labels.size()) + " labels");
    }
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            if (!std::isfinite(values(i, j))) {
                throw DataError("non-finite value in column '" +
                                column_labels[static_cast<std::size_t>(j)] + "' at row " +
                                std::to_string(i));
            }
        }
    }
}

std::vector<std::string> default_labels(std::size_t d) {
    std::vector<std::string> labels(d);
    for (std::size_t i = 0; i < d; ++i) labels[i] = "x" + std::to_string(i);
    return labels;
}

AnmSpec sample_anm_spec(const graph::Dag& dag, double linear_prob, std::uint64_t seed,
                        NoiseFamily noise, double noise_variance) {
    if (!(linear_prob >= 0.0 && linear_prob <= 1.0)) {
        throw ParameterError("linear_prob must lie in [0, 1]");
    }
    Rng rng(seed);
    AnmSpec spec{dag, std::vector<Mechanism>(dag.num_vertices()), noise, noise_variance};
    for (Vertex v = 0; v < dag.num_vertices(); ++v) {
        const std::size_t arity = dag.parents(v).size();
        if (arity == 0) continue;
        if (rng.bernoulli(linear_prob)) {
            LinearMech lin;
            lin.coefficients.resize(arity);
            for (auto& c : lin.coefficients) {
                const double magnitude = rng.uniform(0.5, 1.5);
                c = rng.bernoulli(0.5) ? -magnitude : magnitude;
            }
            spec.mechanisms[v] = std::move(lin);
        } else {
            MlpMech mlp{Eigen::MatrixXd(arity, kHiddenUnits), Eigen::VectorXd(kHiddenUnits)};
            for (Eigen::Index k = 0; k < mlp.input_weights.rows(); ++k) {
                for (Eigen::Index h = 0; h < mlp.input_weights.cols(); ++h) {
                    mlp.input_weights(k, h) = rng.uniform(-5.0, 5.0);
                }
            }
            for (Eigen::Index h = 0; h < mlp.output_weights.size(); ++h) {
                mlp.output_weights(h) = rng.uniform(-5.0, 5.0);
            }
            spec.mechanisms[v] = std::move(mlp);
        }
    }
    return spec;
}

namespace {

/// One mean-zero noise draw with the requested variance.
double draw_noise(Rng& rng, NoiseFamily family, double variance) {
    switch (family) {
        case NoiseFamily::Uniform: {
            // Uniform[-a, a] has variance a^2 / 3.
            const double half_width = std::sqrt(3.0 * variance);
            return rng.uniform(-half_width, half_width);
        }
        case NoiseFamily::Laplace:
            // Laplace(0, b) has variance 2 b^2.
            return rng.laplace(std::sqrt(variance / 2.0));
        case NoiseFamily::Gaussian:
            return std::sqrt(variance) * rng.normal();
    }
    return 0.0;
}

}  // namespace

Dataset sample_dataset(const AnmSpec& spec, std::size_t n, std::uint64_t seed,
                       SampleOptions options) {
    if (n == 0) throw ParameterError("sample_dataset: n must be >= 1");
    spec.validate();
    if (spec.noise_variance <= 0.0 && !options.testing_allow_zero_noise) {
        throw ParameterError("sample_dataset: zero noise variance requires the testing override");
    }
    const auto& dag = spec.dag;
    const std::size_t d = dag.num_vertices();
    Dataset data;
    data.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    data.column_labels = dag.labels().empty() ? default_labels(d) : dag.labels();
    data.provenance.seed = seed;
    data.provenance.spec = std::make_shared<const AnmSpec>(spec);

    Rng rng(seed);
    std::vector<double> parent_values;
    for (Vertex v : dag.topological_order()) {
        const auto& parents = dag.parents(v);
        auto column = data.values.col(static_cast<Eigen::Index>(v));
        parent_values.resize(parents.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            for (std::size_t k = 0; k < parents.size(); ++k) {
                parent_values[k] = data.values(row, static_cast<Eigen::Index>(parents[k]));
            }
            const double signal = parents.empty() ? 0.0 : spec.evaluate(v, parent_values);
            const double noise = spec.noise_variance > 0.0
                                     ? draw_noise(rng, spec.noise_family, spec.noise_variance)
                                     : 0.0;
            const double value = signal + noise;
            if (!std::isfinite(value)) {
                throw GenerationError("non-finite value generated for vertex " +
                                          std::to_string(v) + " at row " + std::to_string(i),
                                      v);
            }
            column(row) = value;
        }
    }
    return data;
}

Dataset standardize(const Dataset& data) {
    Dataset out = data;
    const auto n = static_cast<double>(data.values.rows());
    if (data.values.rows() == 0) throw DataError("standardize: dataset has no samples");
    for (Eigen::Index j = 0; j < data.values.cols(); ++j) {
        auto col = out.values.col(j);
        const double mean = col.mean();
        col.array() -= mean;
        const double var = col.squaredNorm() / n;
        const double scale = std::max(1.0, mean * mean);
        if (!(var > 1e-24 * scale)) {
            const auto idx = static_cast<std::size_t>(j);
            const std::string name =
                idx < data.column_labels.size() ? data.column_labels[idx] : std::to_string(idx);
            throw DataError("standardize: column '" + name + "' is constant");
        }
        col /= std::sqrt(var);
        // Second pass removes the residual rounding in the mean.
        col.array() -= col.mean();
    }
    return out;
}

namespace {

std::optional<double> sortability(const std::vector<double>& metric, const graph::Dag& dag) {
    if (dag.num_edges() == 0) return std::nullopt;
    const auto anc = dag.ancestor_matrix();
    double score = 0.0;
    std::size_t pairs = 0;
    for (Vertex j = 0; j < dag.num_vertices(); ++j) {
        for (Vertex i = 0; i < dag.num_vertices(); ++i) {
            if (!anc[j][i]) continue;
            ++pairs;
            const double a = metric[i];
            const double b = metric[j];
            const double tol = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
            if (std::abs(a - b) <= tol) {
                score += 0.5;
            } else if (a < b) {
                score += 1.0;
            }
        }
    }
    return score / static_cast<double>(pairs);
}

void check_shapes(const Dataset& data, const graph::Dag& dag) {
    if (data.num_columns() != dag.num_vertices()) {
        throw ParameterError("sortability: dataset has " + std::to_string(data.num_columns()) +
                             " columns but the DAG has " + std::to_string(dag.num_vertices()) +
                             " vertices");
    }
}

}  // namespace

std::optional<double> var_sortability(const Dataset& data, const graph::Dag& dag) {
    check_shapes(data, dag);
    const auto n = static_cast<double>(data.num_samples());
    std::vector<double> var(data.num_columns());
    for (std::size_t j = 0; j < var.size(); ++j) {
        const auto col = data.values.col(static_cast<Eigen::Index>(j));
        var[j] = (col.array() - col.mean()).square().sum() / n;
    }
    return sortability(var, dag);
}

std::optional<double> r2_sortability(const Dataset& data, const graph::Dag& dag) {
    check_shapes(data, dag);
    if (dag.num_edges() == 0) return std::nullopt;
    const std::size_t d = data.num_columns();
    const std::size_t n = data.num_samples();
    if (n <= d) throw ParameterError("r2_sortability requires n > d");
    const Eigen::MatrixXd centered = data.values.rowwise() - data.values.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    // R^2 of column j on all others equals 1 - 1 / (cov_jj * precision_jj).
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    std::vector<double> r2(d);
    const Eigen::MatrixXd precision = ldlt.solve(Eigen::MatrixXd::Identity(
        static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    for (std::size_t j = 0; j < d; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double denom = cov(jj, jj) * precision(jj, jj);
        r2[j] = denom > 0.0 && std::isfinite(denom) ? std::clamp(1.0 - 1.0 / denom, 0.0, 1.0) : 1.0;
    }
    return sortability(r2, dag);
}

GeneratedInstance generate_filtered(const GenerateParams& params) {
    const std::size_t attempts = std::max<std::size_t>(1, params.max_retries);
    GeneratedInstance instance;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
        const std::uint64_t base = derive_seed(params.seed, attempt);
        auto dag = graph::er_random_dag(params.d, params.avg_edges, derive_seed(base, 1));
        auto spec = sample_anm_spec(dag, params.linear_prob, derive_seed(base, 2), params.noise,
                                    params.noise_variance);
        auto raw = sample_dataset(spec, params.n, derive_seed(base, 3));
        instance.var_sortability_raw = var_sortability(raw, dag);
        instance.data = standardize(raw);
        instance.data.provenance = raw.provenance;
        instance.r2_sortability = instance.data.num_samples() > params.d
                                      ? r2_sortability(instance.data, dag)
                                      : std::nullopt;
        instance.spec = std::move(spec);
        instance.attempts = attempt + 1;
        // r2 lies in [0, 1], so a threshold of 1 or more disables the filter.
        if (!instance.r2_sortability || *instance.r2_sortability < params.threshold || params.threshold >= 1.0) {
            instance.threshold_warning = false;
            return instance;
        }
        instance.threshold_warning = true;
    }
    return instance;
}

}  // namespace losam::synth

#include <algorithm>

#include "losam/oracle.hpp"
#include "losam/rng.hpp"

namespace losam::discovery {

namespace {

enum SeedTag : std::uint64_t {
    kRows = 1,
    kMarginal = 2,
    kResidual = 3,
    kConditional = 4,
    kLinearResidual = 5,
    kMutualInformation = 6,
};

stats::HsicParams hsic_params(const EmpiricalConfig& config) {
    stats::HsicParams p;
    p.permutations = config.permutations;
    p.level = config.level;
    p.max_samples = 0;  // rows are subsampled once up front
    p.bandwidth_scale = config.hsic_bandwidth_scale;
    return p;
}

/// Residual of y after least squares on x; a constant x leaves y centred.
stats::Vector linear_residual(const stats::Vector& y, const stats::Vector& x) {
    const stats::Vector xc = x.array() - x.mean();
    const stats::Vector yc = y.array() - y.mean();
    const double sxx = xc.squaredNorm();
    if (!(sxx > 1e-300)) return yc;
    return yc - (xc.dot(yc) / sxx) * xc;
}

class EmpiricalResiduals final : public ResidualSet {
public:
    EmpiricalResiduals(const stats::Matrix& data, std::vector<Vertex> sorted,
                       std::map<Vertex, stats::Vector> residuals, const EmpiricalConfig& config)
        : data_(data), sorted_(std::move(sorted)), residuals_(std::move(residuals)), config_(config) {}

    IndependenceResult linear_residual_test(Vertex regressor, Vertex target) override {
        const stats::Vector& ej = residuals_.at(regressor);
        const stats::Vector q = linear_residual(residuals_.at(target), ej);
        const stats::CenteredGram gq(q, config_.hsic_bandwidth_scale);
        return stats::hsic_test(gram(regressor), gq, hsic_params(config_),
                                derive_seed(config_.seed, kLinearResidual, sorted_.size(), regressor,
                                            target));
    }

    double t_star(Vertex u) override {
        const stats::Vector& e = residuals_.at(u);
        double total = 0.0;
        for (Vertex p : sorted_) {
            const stats::Vector column = data_.col(static_cast<Eigen::Index>(p));
            const double mi = stats::mutual_information(
                column, e, config_.ksg,
                derive_seed(config_.seed, kMutualInformation, sorted_.size(), p, u));
            total += std::max(0.0, mi);
        }
        return total;
    }

    std::optional<stats::Vector> residual(Vertex u) const override { return residuals_.at(u); }

private:
    const stats::CenteredGram& gram(Vertex v) {
        auto it = grams_.find(v);
        if (it == grams_.end()) {
            it = grams_.emplace(v, std::make_unique<stats::CenteredGram>(residuals_.at(v), config_.hsic_bandwidth_scale)).first;
        }
        return *it->second;
    }

    const stats::Matrix& data_;
    std::vector<Vertex> sorted_;
    std::map<Vertex, stats::Vector> residuals_;
    std::map<Vertex, std::unique_ptr<stats::CenteredGram>> grams_;
    EmpiricalConfig config_;
};

}  // namespace

std::unique_ptr<stats::Regressor> make_regressor(const EmpiricalConfig& config) {
    switch (config.regressor) {
        case RegressorKind::KernelRidge:
            return std::make_unique<stats::KernelRidgeRegressor>(config.kernel_ridge);
        case RegressorKind::RandomForest:
            return std::make_unique<stats::RandomForestRegressor>(config.random_forest);
    }
    throw ParameterError("unknown regressor kind");
}

EmpiricalOracle::EmpiricalOracle(const synth::Dataset& data, EmpiricalConfig config)
    : config_(std::move(config)), regressor_(make_regressor(config_)) {
    data.validate();
    if (config_.permutations == 0) throw ParameterError("EmpiricalOracle: permutations must be >= 1");
    if (!(config_.hsic_bandwidth_scale > 0.0) || !(config_.marginal_bandwidth_scale > 0.0)) {
        throw ParameterError("EmpiricalOracle: HSIC bandwidth scales must be positive");
    }
    if (!(config_.level > 0.0 && config_.level < 1.0)) {
        throw ParameterError("EmpiricalOracle: level must lie in (0, 1)");
    }
    const auto rows = stats::subsample_rows(data.num_samples(), config_.max_samples,
                                            derive_seed(config_.seed, kRows));
    data_.resize(static_cast<Eigen::Index>(rows.size()), data.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        data_.row(static_cast<Eigen::Index>(i)) = data.values.row(rows[i]);
    }
    grams_.resize(static_cast<std::size_t>(data_.cols()));
    marginal_grams_.resize(static_cast<std::size_t>(data_.cols()));
}

const stats::CenteredGram& EmpiricalOracle::column_gram(Vertex v, bool marginal) {
    auto& slot = (marginal ? marginal_grams_ : grams_).at(v);
    if (!slot) {
        slot = std::make_unique<stats::CenteredGram>(
            data_.col(static_cast<Eigen::Index>(v)),
            marginal ? config_.marginal_bandwidth_scale : config_.hsic_bandwidth_scale);
    }
    return *slot;
}

stats::Matrix EmpiricalOracle::columns(std::span<const Vertex> vertices) const {
    stats::Matrix out(data_.rows(), static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t k = 0; k < vertices.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = data_.col(static_cast<Eigen::Index>(vertices[k]));
    }
    return out;
}

const stats::Vector& EmpiricalOracle::residual_of(Vertex target, const std::vector<Vertex>& covariates) {
    auto key = std::make_pair(target, covariates);
    auto it = residual_cache_.find(key);
    if (it != residual_cache_.end()) return it->second;
    if (!last_fit_ || last_covariates_ != covariates) {
        last_fit_ = regressor_->fit(columns(covariates));
        last_covariates_ = covariates;
        ++regressions_fitted_;
    }
    stats::Vector r = last_fit_->residuals(data_.col(static_cast<Eigen::Index>(target)));
    return residual_cache_.emplace(std::move(key), std::move(r)).first->second;
}

IndependenceResult EmpiricalOracle::marginal_test(Vertex a, Vertex b) {
    const Vertex lo = std::min(a, b), hi = std::max(a, b);
    return stats::hsic_test(column_gram(lo, true), column_gram(hi, true), hsic_params(config_),
                            derive_seed(config_.seed, kMarginal, lo, hi));
}

IndependenceResult EmpiricalOracle::residual_test(Vertex target, std::span<const Vertex> covariates,
                                                  Vertex probe) {
    std::vector<Vertex> covs(covariates.begin(), covariates.end());
    std::sort(covs.begin(), covs.end());
    std::uint64_t seed = derive_seed(config_.seed, kResidual, target, probe);
    for (Vertex c : covs) seed = derive_seed(seed, c);
    const stats::CenteredGram gr(residual_of(target, covs), config_.hsic_bandwidth_scale);
    return stats::hsic_test(gr, column_gram(probe), hsic_params(config_), seed);
}

IndependenceResult EmpiricalOracle::conditional_test(Vertex a, Vertex b, Vertex given) {
    const Vertex lo = std::min(a, b), hi = std::max(a, b);
    const std::vector<Vertex> covs{given};
    const stats::CenteredGram ga(residual_of(lo, covs), config_.hsic_bandwidth_scale);
    const stats::CenteredGram gb(residual_of(hi, covs), config_.hsic_bandwidth_scale);
    return stats::hsic_test(ga, gb, hsic_params(config_),
                            derive_seed(config_.seed, kConditional, lo, hi, given));
}

std::unique_ptr<ResidualSet> EmpiricalOracle::residualize(std::span<const Vertex> sorted,
                                                          std::span<const Vertex> unsorted) {
    if (sorted.empty()) throw ParameterError("residualize: sorted set is empty");
    // One factorisation shared by every target; residuals are recomputed each call.
    const auto fit = regressor_->fit(columns(sorted));
    ++regressions_fitted_;
    std::map<Vertex, stats::Vector> residuals;
    for (Vertex u : unsorted) {
        residuals.emplace(u, fit->residuals(data_.col(static_cast<Eigen::Index>(u))));
    }
    return std::make_unique<EmpiricalResiduals>(data_, std::vector<Vertex>(sorted.begin(), sorted.end()),
                                                std::move(residuals), config_);
}

}  // namespace losam::discovery

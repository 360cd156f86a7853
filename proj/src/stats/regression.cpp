#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "losam/rng.hpp"
#include "losam/stats.hpp"

namespace losam::stats {

std::string_view to_string(EstimatorTag tag) {
    switch (tag) {
        case EstimatorTag::KernelRidge: return "kernel_ridge";
        case EstimatorTag::RandomForest: return "random_forest";
        case EstimatorTag::OLS: return "ols";
    }
    return "unknown";
}

double median_pairwise_distance(const Matrix& rows) {
    const Eigen::Index n_all = rows.rows();
    if (n_all < 2) return 1.0;
    constexpr Eigen::Index kCap = 1000;
    const Eigen::Index stride = (n_all + kCap - 1) / kCap;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n_all; i += stride) idx.push_back(i);
    std::vector<double> dist;
    dist.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            dist.push_back((rows.row(idx[i]) - rows.row(idx[j])).norm());
        }
    }
    if (dist.empty()) return 1.0;
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (!(median > 0.0)) {
        // Heavily tied covariates: fall back to the mean distance.
        median = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(dist.size());
    }
    return median > 0.0 ? median : 1.0;
}

namespace {

struct KernelSystem {
    Matrix gram;
    Eigen::LLT<Matrix> llt;
};

Matrix rbf_gram(const Matrix& x, double bandwidth) {
    const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    const Vector sq = x.rowwise().squaredNorm();
    Matrix gram = x * x.transpose();
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
        for (Eigen::Index i = 0; i < gram.rows(); ++i) {
            const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j));
            gram(i, j) = std::exp(-gamma * d2);
        }
    }
    return gram;
}

KernelSystem factorise(const Matrix& x, double bandwidth, double alpha) {
    Matrix gram = rbf_gram(x, bandwidth);
    for (int attempt = 0; attempt < 2; ++attempt) {
        Matrix system = gram;
        system.diagonal().array() += alpha;
        Eigen::LLT<Matrix> llt(system);
        if (llt.info() == Eigen::Success) return {std::move(gram), std::move(llt)};
        alpha *= 10.0;
    }
    throw EstimatorError("kernel ridge: kernel system is singular even after raising alpha to " +
                         std::to_string(alpha / 10.0));
}

class FittedKernelRidge final : public FittedRegressor {
public:
    FittedKernelRidge(const Matrix& covariates, const KernelRidgeParams& params)
        : x_(covariates), params_(params) {
        const double median = median_pairwise_distance(covariates);
        if (params.bandwidth) {
            scales_ = {*params.bandwidth};
        } else if (params.select_bandwidth && !params.bandwidth_grid.empty()) {
            for (double g : params.bandwidth_grid) scales_.push_back(g * median);
            prepare_selection();
        } else {
            scales_ = {median};
        }
        systems_.resize(scales_.size());
        if (scales_.size() == 1) system(0);
    }

    Vector predict_in_sample(const Vector& y) const override {
        const double mean = y.mean();
        const Vector centered = y.array() - mean;
        const auto& sys = system(scales_.size() == 1 ? 0 : select(centered));
        const Vector dual = sys.llt.solve(centered);
        Vector fitted = sys.gram * dual;
        fitted.array() += mean;
        // Unpenalised intercept: absorb the remaining mean residual.
        fitted.array() += (y - fitted).mean();
        return fitted;
    }

    EstimatorTag tag() const override { return EstimatorTag::KernelRidge; }

private:
    const KernelSystem& system(std::size_t k) const {
        if (!systems_[k]) systems_[k] = factorise(x_, scales_[k], params_.alpha);
        return *systems_[k];
    }

    // Hat-matrix eigenbasis of every candidate scale on an evenly strided row subset.
    void prepare_selection() {
        const Eigen::Index n = x_.rows();
        const auto m = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::max<std::size_t>(params_.selection_rows, 10)));
        for (Eigen::Index i = 0; i < m; ++i) rows_.push_back(i * n / m);
        Matrix sub(m, x_.cols());
        for (Eigen::Index i = 0; i < m; ++i) sub.row(i) = x_.row(rows_[static_cast<std::size_t>(i)]);
        for (double scale : scales_) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(rbf_gram(sub, scale));
            const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
            const Vector shrink = lambda.array() / (lambda.array() + params_.alpha);
            Matrix q = eig.eigenvectors();
            const Vector hat_diag = (q.array().square().rowwise() * shrink.transpose().array()).rowwise().sum();
            bases_.push_back({std::move(q), shrink, hat_diag});
        }
    }

    std::size_t select(const Vector& centered) const {
        Vector ys(static_cast<Eigen::Index>(rows_.size()));
        for (std::size_t i = 0; i < rows_.size(); ++i) ys(static_cast<Eigen::Index>(i)) = centered(rows_[i]);
        std::size_t best = 0;
        double best_err = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < bases_.size(); ++k) {
            const auto& b = bases_[k];
            const Vector fitted = b.q * (b.shrink.asDiagonal() * (b.q.transpose() * ys));
            const Vector loo = (ys - fitted).array() / (1.0 - b.hat_diag.array()).max(1e-12);
            const double err = loo.squaredNorm();
            if (err < best_err) {
                best_err = err;
                best = k;
            }
        }
        return best;
    }

    struct Basis {
        Matrix q;
        Vector shrink;
        Vector hat_diag;
    };

    Matrix x_;
    KernelRidgeParams params_;
    std::vector<double> scales_;
    std::vector<Eigen::Index> rows_;
    std::vector<Basis> bases_;
    mutable std::vector<std::optional<KernelSystem>> systems_;
};

}  // namespace

std::unique_ptr<FittedRegressor> KernelRidgeRegressor::fit(const Matrix& covariates) const {
    if (covariates.rows() == 0 || covariates.cols() == 0) {
        throw ParameterError("kernel ridge: empty covariate matrix");
    }
    return std::make_unique<FittedKernelRidge>(covariates, params_);
}

namespace {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const Vector& y, const RandomForestParams& params, Rng& rng)
        : x_(x), y_(y), params_(params), rng_(rng) {}

    std::vector<TreeNode> build(std::vector<Eigen::Index> samples) {
        nodes_.clear();
        grow(samples, 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<Eigen::Index>& samples, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        double mean = 0.0;
        for (auto s : samples) mean += y_(s);
        mean /= static_cast<double>(samples.size());
        nodes_[static_cast<std::size_t>(id)].value = mean;
        if (depth >= params_.max_depth || samples.size() < params_.min_samples_split) return id;

        const auto k = static_cast<std::size_t>(x_.cols());
        const std::size_t tries = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(k)));
        const auto features = rng_.permutation(k);

        double best_score = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        const double total = mean * static_cast<double>(samples.size());
        std::vector<std::pair<double, double>> column(samples.size());
        for (std::size_t f = 0; f < tries; ++f) {
            const auto feat = static_cast<Eigen::Index>(features[f]);
            for (std::size_t i = 0; i < samples.size(); ++i) {
                column[i] = {x_(samples[i], feat), y_(samples[i])};
            }
            std::sort(column.begin(), column.end());
            double left_sum = 0.0;
            const std::size_t leaf = params_.min_samples_leaf;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left_sum += column[i].second;
                const std::size_t nl = i + 1;
                const std::size_t nr = column.size() - nl;
                if (nl < leaf || nr < leaf) continue;
                if (column[i].first == column[i + 1].first) continue;
                const double right_sum = total - left_sum;
                // Maximising this is equivalent to minimising the child SSE.
                const double score = left_sum * left_sum / static_cast<double>(nl) +
                                     right_sum * right_sum / static_cast<double>(nr);
                if (best_feature < 0 || score > best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(feat);
                    best_threshold = 0.5 * (column[i].first + column[i + 1].first);
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<Eigen::Index> left, right;
        for (auto s : samples) {
            (x_(s, best_feature) <= best_threshold ? left : right).push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    const Matrix& x_;
    const Vector& y_;
    const RandomForestParams& params_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
};

class FittedForest final : public FittedRegressor {
public:
    FittedForest(Matrix covariates, RandomForestParams params)
        : covariates_(std::move(covariates)), params_(params) {}

    Vector predict_in_sample(const Vector& y) const override {
        const Eigen::Index n = covariates_.rows();
        Rng rng(params_.seed);
        Vector prediction = Vector::Zero(n);
        for (std::size_t t = 0; t < params_.n_estimators; ++t) {
            std::vector<Eigen::Index> boot(static_cast<std::size_t>(n));
            for (auto& s : boot) s = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
            TreeBuilder builder(covariates_, y, params_, rng);
            const auto tree = builder.build(std::move(boot));
            for (Eigen::Index i = 0; i < n; ++i) {
                int node = 0;
                while (tree[static_cast<std::size_t>(node)].feature >= 0) {
                    const auto& nd = tree[static_cast<std::size_t>(node)];
                    node = covariates_(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
                }
                prediction(i) += tree[static_cast<std::size_t>(node)].value;
            }
        }
        return prediction / static_cast<double>(params_.n_estimators);
    }

    EstimatorTag tag() const override { return EstimatorTag::RandomForest; }

private:
    Matrix covariates_;
    RandomForestParams params_;
};

}  // namespace

std::unique_ptr<FittedRegressor> RandomForestRegressor::fit(const Matrix& covariates) const {
    if (covariates.rows() == 0 || covariates.cols() == 0) {
        throw ParameterError("random forest: empty covariate matrix");
    }
    if (params_.n_estimators == 0) throw ParameterError("random forest: n_estimators must be >= 1");
    return std::make_unique<FittedForest>(covariates, params_);
}

RegressionFit nonparam_regress(const Vector& y, const Matrix& X, const Regressor& regressor) {
    if (X.cols() < 1) throw ParameterError("nonparam_regress: need at least one covariate");
    if (X.rows() != y.size()) throw ParameterError("nonparam_regress: row count mismatch");
    if (X.rows() <= X.cols()) throw ParameterError("nonparam_regress: need n > k");
    const auto fitted = regressor.fit(X);
    RegressionFit fit;
    fit.covariate_indices.resize(static_cast<std::size_t>(X.cols()));
    std::iota(fit.covariate_indices.begin(), fit.covariate_indices.end(), std::size_t{0});
    fit.fitted_values = fitted->predict_in_sample(y);
    fit.residuals = y - fit.fitted_values;
    fit.estimator_tag = fitted->tag();
    return fit;
}

RegressionFit nonparam_regress(const Vector& y, const Matrix& X, KernelRidgeParams params) {
    return nonparam_regress(y, X, KernelRidgeRegressor(params));
}

RegressionFit linear_regress(const Vector& y, const Vector& x) {
    if (x.size() != y.size()) throw ParameterError("linear_regress: length mismatch");
    if (x.size() < 2) throw ParameterError("linear_regress: need at least two samples");
    const double mx = x.mean();
    const double my = y.mean();
    const Vector xc = x.array() - mx;
    const double sxx = xc.squaredNorm();
    if (!(sxx > 1e-300) || sxx <= 1e-24 * static_cast<double>(x.size()) * std::max(1.0, mx * mx)) {
        throw EstimatorError("linear_regress: regressor has zero variance");
    }
    const double slope = xc.dot(y.array().matrix() - Vector::Constant(y.size(), my)) / sxx;
    RegressionFit fit;
    fit.covariate_indices = {0};
    fit.fitted_values = (slope * xc).array() + my;
    fit.residuals = y - fit.fitted_values;
    fit.estimator_tag = EstimatorTag::OLS;
    return fit;
}

}  // namespace losam::stats

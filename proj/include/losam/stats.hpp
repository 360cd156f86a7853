#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "losam/common.hpp"

namespace losam::stats {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultLevel = 0.01;
inline constexpr std::size_t kDefaultMaxSamples = 2000;

enum class EstimatorTag { KernelRidge, RandomForest, OLS };
std::string_view to_string(EstimatorTag tag);

struct RegressionFit {
    std::vector<std::size_t> covariate_indices;
    Vector fitted_values;
    Vector residuals;  // target - fitted_values
    EstimatorTag estimator_tag = EstimatorTag::KernelRidge;
};

// ---------------------------------------------------------------------------
// Nonparametric regression
// ---------------------------------------------------------------------------

struct KernelRidgeParams {
    double alpha = 0.01;
    /// RBF length scale; median pairwise distance of the covariate rows when unset.
    std::optional<double> bandwidth;
    /// When set (and no fixed bandwidth is given), each target picks its length
    /// scale from bandwidth_grid x median by leave-one-out error on a row subset.
    bool select_bandwidth = false;
    std::vector<double> bandwidth_grid{0.1, 0.2, 0.35, 0.5, 0.75, 1.0};
    std::size_t selection_rows = 250;
};

struct RandomForestParams {
    std::size_t n_estimators = 100;
    std::size_t max_depth = 10;
    std::size_t min_samples_split = 10;
    std::size_t min_samples_leaf = 5;
    std::uint64_t seed = 0;
};

/// A regression fitted to one covariate matrix that can residualise many targets.
class FittedRegressor {
public:
    virtual ~FittedRegressor() = default;
    virtual Vector predict_in_sample(const Vector& y) const = 0;
    virtual EstimatorTag tag() const = 0;

    Vector residuals(const Vector& y) const { return y - predict_in_sample(y); }
};

/// Pluggable nonparametric regression backend.
class Regressor {
public:
    virtual ~Regressor() = default;
    virtual std::unique_ptr<FittedRegressor> fit(const Matrix& covariates) const = 0;
};

/// RBF kernel ridge regression with an unpenalised intercept.
///
/// The kernel system (K + alpha I) is factorised once per covariate matrix
/// and length scale. If the Cholesky factorisation fails, alpha is increased
/// tenfold once; a second failure raises EstimatorError.
class KernelRidgeRegressor final : public Regressor {
public:
    explicit KernelRidgeRegressor(KernelRidgeParams params = {}) : params_(params) {}
    std::unique_ptr<FittedRegressor> fit(const Matrix& covariates) const override;

private:
    KernelRidgeParams params_;
};

/// Bagged CART regression trees (sqrt(k) features per split).
class RandomForestRegressor final : public Regressor {
public:
    explicit RandomForestRegressor(RandomForestParams params = {}) : params_(params) {}
    std::unique_ptr<FittedRegressor> fit(const Matrix& covariates) const override;

private:
    RandomForestParams params_;
};

/// Median of pairwise Euclidean distances between rows (strided subsample above 1000 rows).
double median_pairwise_distance(const Matrix& rows);

/// Regress y on the columns of X with the given backend (kernel ridge by default).
RegressionFit nonparam_regress(const Vector& y, const Matrix& X, const Regressor& regressor);
RegressionFit nonparam_regress(const Vector& y, const Matrix& X, KernelRidgeParams params = {});

/// Univariate least squares with intercept. Throws EstimatorError on constant x.
RegressionFit linear_regress(const Vector& y, const Vector& x);

// ---------------------------------------------------------------------------
// Independence testing
// ---------------------------------------------------------------------------

struct IndependenceResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool independent = true;  // p_value > level
    double level = kDefaultLevel;
    bool small_sample_warning = false;
};

/// Builds an IndependenceResult with the decision rule applied.
IndependenceResult make_result(double statistic, double p_value, double level,
                               bool small_sample_warning = false);

struct HsicParams {
    std::size_t permutations = 200;
    double level = kDefaultLevel;
    std::size_t max_samples = kDefaultMaxSamples;
    /// RBF bandwidth = bandwidth_scale * median pairwise distance.
    double bandwidth_scale = 1.0;
};

/// Doubly centred RBF Gram matrix of one sample; bandwidth is
/// bandwidth_scale times the median pairwise distance.
class CenteredGram {
public:
    explicit CenteredGram(const Vector& x, double bandwidth_scale = 1.0);
    const Matrix& matrix() const { return gram_; }
    std::size_t size() const { return static_cast<std::size_t>(gram_.rows()); }

private:
    Matrix gram_;
};

/// Biased HSIC statistic tr(KHLH) / n^2 from two centred Gram matrices.
double hsic_statistic(const CenteredGram& a, const CenteredGram& b);

/// Permutation test on precomputed Gram matrices;
/// p = (1 + #{permuted >= observed}) / (B + 1).
IndependenceResult hsic_test(const CenteredGram& a, const CenteredGram& b, const HsicParams& params,
                             std::uint64_t seed);

/// HSIC permutation test between two samples. Samples above max_samples are
/// reduced to a seeded row subset. Throws EstimatorError on zero-variance input.
IndependenceResult independence_test(const Vector& a, const Vector& b, const HsicParams& params = {},
                                     std::uint64_t seed = 0);

/// Residualise a and b on the columns of given, then test the residuals.
IndependenceResult cond_independence_test(const Vector& a, const Vector& b, const Matrix& given,
                                          const HsicParams& params = {},
                                          const Regressor& regressor = KernelRidgeRegressor{},
                                          std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Mutual information
// ---------------------------------------------------------------------------

struct KsgParams {
    std::size_t k = 3;
    std::size_t max_samples = kDefaultMaxSamples;
    double jitter = 1e-10;
};

/// digamma at a positive integer.
double digamma_int(std::size_t m);

/// Kraskov-Stoegbauer-Grassberger estimator (first variant, max-norm), in nats.
/// Unclamped; may be slightly negative under independence.
double mutual_information(const Vector& a, const Vector& b, const KsgParams& params = {},
                          std::uint64_t seed = 0);

/// Row indices of a seeded subsample of size min(n, cap), in ascending order.
std::vector<Eigen::Index> subsample_rows(std::size_t n, std::size_t cap, std::uint64_t seed);

}  // namespace losam::stats

#include <algorithm>
#include <cmath>

#include "losam/rng.hpp"
#include "losam/stats.hpp"

namespace losam::stats {

IndependenceResult make_result(double statistic, double p_value, double level,
                               bool small_sample_warning) {
    IndependenceResult r;
    r.statistic = statistic;
    r.p_value = p_value;
    r.level = level;
    r.independent = p_value > level;
    r.small_sample_warning = small_sample_warning;
    return r;
}

std::vector<Eigen::Index> subsample_rows(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<Eigen::Index> rows;
    if (cap == 0 || n <= cap) {
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<Eigen::Index>(i);
        return rows;
    }
    Rng rng(seed);
    auto perm = rng.permutation(n);
    perm.resize(cap);
    std::sort(perm.begin(), perm.end());
    rows.assign(perm.begin(), perm.end());
    return rows;
}

namespace {

void require_variance(const Vector& x, const char* name) {
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size());
    if (!(var > 1e-24 * std::max(1.0, mean * mean))) {
        throw EstimatorError(std::string("independence test: input '") + name +
                             "' has zero variance");
    }
}

Vector take(const Vector& x, const std::vector<Eigen::Index>& rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = x(rows[i]);
    return out;
}

/// sum_ij A(i, j) * B(p_i, p_j) for symmetric A and B.
double permuted_inner(const Matrix& a, const Matrix& b, const std::vector<std::size_t>& p) {
    const Eigen::Index n = a.rows();
    double off = 0.0;
    double diag = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double* acol = a.col(j).data();
        const double* bcol = b.col(static_cast<Eigen::Index>(p[static_cast<std::size_t>(j)])).data();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < j; ++i) {
            acc += acol[i] * bcol[p[static_cast<std::size_t>(i)]];
        }
        off += acc;
        diag += acol[j] * bcol[p[static_cast<std::size_t>(j)]];
    }
    return 2.0 * off + diag;
}

}  // namespace

CenteredGram::CenteredGram(const Vector& x, double bandwidth_scale) {
    const Eigen::Index n = x.size();
    if (n < 2) throw EstimatorError("independence test: need at least two samples");
    if (!(bandwidth_scale > 0.0)) throw ParameterError("bandwidth_scale must be positive");
    const double bandwidth = bandwidth_scale * median_pairwise_distance(x);
    const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    gram_.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const double diff = x(i) - x(j);
            const double k = std::exp(-gamma * diff * diff);
            gram_(i, j) = k;
            gram_(j, i) = k;
        }
    }
    const Vector col_mean = gram_.colwise().mean().transpose();
    const double total_mean = col_mean.mean();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            gram_(i, j) += total_mean - col_mean(i) - col_mean(j);
        }
    }
}

double hsic_statistic(const CenteredGram& a, const CenteredGram& b) {
    if (a.size() != b.size()) throw ParameterError("hsic: sample size mismatch");
    const double n = static_cast<double>(a.size());
    return a.matrix().cwiseProduct(b.matrix()).sum() / (n * n);
}

IndependenceResult hsic_test(const CenteredGram& a, const CenteredGram& b, const HsicParams& params,
                             std::uint64_t seed) {
    if (a.size() != b.size()) throw ParameterError("hsic: sample size mismatch");
    const std::size_t n = a.size();
    const double norm = static_cast<double>(n) * static_cast<double>(n);
    std::vector<std::size_t> identity(n);
    for (std::size_t i = 0; i < n; ++i) identity[i] = i;
    const double observed = permuted_inner(a.matrix(), b.matrix(), identity);
    Rng rng(seed);
    std::size_t exceed = 0;
    for (std::size_t t = 0; t < params.permutations; ++t) {
        const auto perm = rng.permutation(n);
        if (permuted_inner(a.matrix(), b.matrix(), perm) >= observed) ++exceed;
    }
    const double p = static_cast<double>(1 + exceed) / static_cast<double>(params.permutations + 1);
    return make_result(std::max(0.0, observed / norm), p, params.level, n < 50);
}

IndependenceResult independence_test(const Vector& a, const Vector& b, const HsicParams& params,
                                     std::uint64_t seed) {
    if (a.size() != b.size()) throw ParameterError("independence_test: length mismatch");
    require_variance(a, "a");
    require_variance(b, "b");
    const auto rows =
        subsample_rows(static_cast<std::size_t>(a.size()), params.max_samples, derive_seed(seed, 7));
    const CenteredGram ga(take(a, rows), params.bandwidth_scale);
    const CenteredGram gb(take(b, rows), params.bandwidth_scale);
    return hsic_test(ga, gb, params, seed);
}

IndependenceResult cond_independence_test(const Vector& a, const Vector& b, const Matrix& given,
                                          const HsicParams& params, const Regressor& regressor,
                                          std::uint64_t seed) {
    if (given.cols() == 0) return independence_test(a, b, params, seed);
    if (given.rows() != a.size() || a.size() != b.size()) {
        throw ParameterError("cond_independence_test: length mismatch");
    }
    const auto fitted = regressor.fit(given);
    return independence_test(fitted->residuals(a), fitted->residuals(b), params, seed);
}

}  // namespace losam::stats

#include <algorithm>
#include <cmath>
#include <limits>

#include "losam/rng.hpp"
#include "losam/stats.hpp"

namespace losam::stats {

double digamma_int(std::size_t m) {
    if (m == 0) throw ParameterError("digamma_int: argument must be positive");
    constexpr double kEulerGamma = 0.57721566490153286061;
    if (m < 64) {
        double h = 0.0;
        for (std::size_t i = 1; i < m; ++i) h += 1.0 / static_cast<double>(i);
        return h - kEulerGamma;
    }
    // Asymptotic expansion; accurate to ~1e-15 for m >= 64.
    const double x = static_cast<double>(m);
    const double inv2 = 1.0 / (x * x);
    return std::log(x) - 0.5 / x -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
}

namespace {

/// Number of entries of the sorted array strictly within radius of value (the point itself included).
std::size_t count_within(const std::vector<double>& sorted, double value, double radius) {
    // Compare distances rather than shifted bounds so rounding matches |x - value| < radius.
    const auto lo = std::partition_point(sorted.begin(), sorted.end(), [&](double x) { return value - x >= radius; });
    const auto hi = std::partition_point(lo, sorted.end(), [&](double x) { return x - value < radius; });
    return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

double stddev(const Vector& x) {
    const double mean = x.mean();
    return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size()));
}

}  // namespace

double mutual_information(const Vector& a, const Vector& b, const KsgParams& params,
                          std::uint64_t seed) {
    if (a.size() != b.size()) throw ParameterError("mutual_information: length mismatch");
    const std::size_t k = params.k;
    if (k == 0) throw ParameterError("mutual_information: k must be >= 1");
    const auto rows = subsample_rows(static_cast<std::size_t>(a.size()), params.max_samples,
                                     derive_seed(seed, 11));
    const std::size_t n = rows.size();
    if (n <= k + 1) throw EstimatorError("mutual_information: need n > k + 1 samples");

    // Tiny seeded jitter breaks distance ties.
    Rng rng(seed);
    const double sa = std::max(stddev(a), 1e-300);
    const double sb = std::max(stddev(b), 1e-300);
    std::vector<double> xa(n), xb(n);
    for (std::size_t i = 0; i < n; ++i) {
        xa[i] = a(rows[i]) + params.jitter * sa * rng.uniform();
        xb[i] = b(rows[i]) + params.jitter * sb * rng.uniform();
    }
    std::vector<double> sorted_a = xa, sorted_b = xb;
    std::sort(sorted_a.begin(), sorted_a.end());
    std::sort(sorted_b.begin(), sorted_b.end());

    // Points ordered by a, so the k-NN search can stop once |da| exceeds the current k-th distance.
    std::vector<std::size_t> by_a(n);
    for (std::size_t i = 0; i < n; ++i) by_a[i] = i;
    std::sort(by_a.begin(), by_a.end(), [&](std::size_t l, std::size_t r) { return xa[l] < xa[r]; });

    std::vector<double> best(k);
    double marginal_sum = 0.0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t i = by_a[pos];
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        auto offer = [&](std::size_t j) {
            const double dist = std::max(std::abs(xa[i] - xa[j]), std::abs(xb[i] - xb[j]));
            if (dist < best[k - 1]) {
                std::size_t slot = k - 1;
                while (slot > 0 && best[slot - 1] > dist) {
                    best[slot] = best[slot - 1];
                    --slot;
                }
                best[slot] = dist;
            }
        };
        std::size_t lo = pos, hi = pos + 1;
        bool left_open = lo > 0, right_open = hi < n;
        while (left_open || right_open) {
            if (left_open) {
                const std::size_t j = by_a[lo - 1];
                if (std::abs(xa[i] - xa[j]) >= best[k - 1]) {
                    left_open = false;
                } else {
                    offer(j);
                    --lo;
                    left_open = lo > 0;
                }
            }
            if (right_open) {
                const std::size_t j = by_a[hi];
                if (std::abs(xa[i] - xa[j]) >= best[k - 1]) {
                    right_open = false;
                } else {
                    offer(j);
                    ++hi;
                    right_open = hi < n;
                }
            }
        }
        const double eps = best[k - 1];
        // Counts exclude the point itself.
        const std::size_t na = count_within(sorted_a, xa[i], eps) - 1;
        const std::size_t nb = count_within(sorted_b, xb[i], eps) - 1;
        marginal_sum += digamma_int(na + 1) + digamma_int(nb + 1);
    }
    return digamma_int(k) + digamma_int(n) - marginal_sum / static_cast<double>(n);
}

}  // namespace losam::stats

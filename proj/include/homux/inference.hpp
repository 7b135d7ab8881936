#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "homux/error.hpp"
#include "homux/info.hpp"

namespace homux {

/// Benjamini-Hochberg adjusted p-values: min over j >= rank of p_(j) * m / j, capped at 1.
inline std::vector<double> bh_adjust(std::span<const double> p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> adj(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        running = std::min(running, p[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1));
        adj[order[r]] = std::min(running, 1.0);
    }
    return adj;
}

/// Linear-interpolation quantile (type 7) of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw EstimationError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return lo <= x && x <= hi; }
    /// Closed-interval overlap: touching endpoints count.
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

inline Interval percentile_interval(std::span<const double> sorted_boot, double level) {
    const double tail = (1.0 - level) / 2.0;
    return {quantile_sorted(sorted_boot, tail), quantile_sorted(sorted_boot, 1.0 - tail)};
}

/// z0 from the share of bootstrap replicates below the point estimate (ties count half).
inline double bca_bias_correction(std::span<const double> sorted_boot, double point) {
    const auto below = std::lower_bound(sorted_boot.begin(), sorted_boot.end(), point) - sorted_boot.begin();
    const auto upto = std::upper_bound(sorted_boot.begin(), sorted_boot.end(), point) - sorted_boot.begin();
    const double b = static_cast<double>(sorted_boot.size());
    double share = (static_cast<double>(below) + 0.5 * static_cast<double>(upto - below)) / b;
    share = std::clamp(share, 0.5 / b, 1.0 - 0.5 / b);
    return normal_quantile(share);
}

/// Acceleration from jackknife (leave-one-out) replicates.
inline double bca_acceleration(std::span<const double> jackknife) {
    const double mean = std::accumulate(jackknife.begin(), jackknife.end(), 0.0) / static_cast<double>(jackknife.size());
    double num = 0.0, den = 0.0;
    for (double v : jackknife) {
        const double d = mean - v;
        num += d * d * d;
        den += d * d;
    }
    if (den <= 0.0) return 0.0;
    return num / (6.0 * std::pow(den, 1.5));
}

/// BCa interval for explicit (z0, a); with z0 = a = 0 this is the percentile interval.
inline Interval bca_interval_from(std::span<const double> sorted_boot, double z0, double a, double level) {
    const double tail = (1.0 - level) / 2.0;
    auto adjusted = [&](double prob) {
        const double z = normal_quantile(prob);
        return normal_cdf(z0 + (z0 + z) / (1.0 - a * (z0 + z)));
    };
    return {quantile_sorted(sorted_boot, adjusted(tail)), quantile_sorted(sorted_boot, adjusted(1.0 - tail))};
}

inline Interval bca_interval(std::span<const double> sorted_boot, double point, std::span<const double> jackknife,
                             double level) {
    return bca_interval_from(sorted_boot, bca_bias_correction(sorted_boot, point), bca_acceleration(jackknife), level);
}

} // namespace homux

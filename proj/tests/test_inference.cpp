#include <gtest/gtest.h>

#include <random>

#include "homux/inference.hpp"

using namespace homux;

namespace {

// Textbook step-up: largest k with p_(k) <= k alpha / m, reject p_(1..k).
std::vector<bool> step_up(const std::vector<double>& p, double alpha) {
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(p.size());
    double threshold = -1.0;
    for (std::size_t k = 1; k <= sorted.size(); ++k)
        if (sorted[k - 1] <= static_cast<double>(k) * alpha / m) threshold = sorted[k - 1];
    std::vector<bool> out;
    for (double v : p) out.push_back(v <= threshold);
    return out;
}

} // namespace

TEST(BenjaminiHochberg, HandWorkedExample) {
    const std::vector<double> p{0.01, 0.02, 0.04, 0.5};
    const auto adj = bh_adjust(p);
    std::vector<bool> rejected;
    for (double a : adj) rejected.push_back(a <= 0.05);
    EXPECT_EQ(rejected, (std::vector<bool>{true, true, false, false}));
}

TEST(BenjaminiHochberg, MatchesStepUpDefinition) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> size(1, 60);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution signal(0.3), tie(0.2);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> p(static_cast<std::size_t>(size(rng)));
        for (auto& v : p) {
            v = signal(rng) ? u(rng) * 0.01 : u(rng);
            if (tie(rng)) v = std::round(v * 100) / 100;
        }
        const double alpha = t % 2 ? 0.05 : 0.1;
        const auto adj = bh_adjust(p);
        std::vector<bool> got;
        for (double a : adj) got.push_back(a <= alpha);
        ASSERT_EQ(got, step_up(p, alpha)) << "vector " << t;
        for (double a : adj) {
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, 1.0);
        }
    }
}

TEST(Bca, ReducesToPercentileWithoutBiasOrAcceleration) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::vector<double> boot(2000);
    for (auto& v : boot) v = z(rng);
    std::sort(boot.begin(), boot.end());
    for (double level : {0.8, 0.9, 0.95}) {
        const auto b = bca_interval_from(boot, 0.0, 0.0, level);
        const auto p = percentile_interval(boot, level);
        EXPECT_NEAR(b.lo, p.lo, 1e-9);
        EXPECT_NEAR(b.hi, p.hi, 1e-9);
    }
    const std::vector<double> flat(10, 2.0);
    EXPECT_EQ(bca_acceleration(flat), 0.0);
}

TEST(Bca, GaussianMeanCoverage) {
    std::mt19937_64 rng(2718);
    std::normal_distribution<double> z(1.0, 2.0);
    const int reps = 1000, n = 40, n_boot = 1000;
    int covered = 0;
    std::vector<double> x(n), boot(n_boot), jack(n);
    for (int rep = 0; rep < reps; ++rep) {
        for (auto& v : x) v = z(rng);
        const double sum = std::accumulate(x.begin(), x.end(), 0.0);
        const double mean = sum / n;
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (auto& b : boot) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += x[pick(rng)];
            b = s / n;
        }
        std::sort(boot.begin(), boot.end());
        for (int i = 0; i < n; ++i) jack[i] = (sum - x[i]) / (n - 1);
        const auto ci = bca_interval(boot, mean, jack, 0.90);
        covered += ci.contains(1.0);
    }
    const double coverage = static_cast<double>(covered) / reps;
    EXPECT_NEAR(coverage, 0.90, 0.03);
}

TEST(Bca, BiasCorrectionAndAccelerationSigns) {
    std::vector<double> boot(100);
    for (int i = 0; i < 100; ++i) boot[i] = i;
    EXPECT_NEAR(bca_bias_correction(boot, 49.5), 0.0, 1e-12);
    EXPECT_GT(bca_bias_correction(boot, 80.0), 0.0);
    EXPECT_LT(bca_bias_correction(boot, 10.0), 0.0);
    EXPECT_TRUE(std::isfinite(bca_bias_correction(boot, 1e9)));
    const std::vector<double> right_skewed_jack{0, 0, 0, 0, -5};
    EXPECT_GT(bca_acceleration(right_skewed_jack), 0.0);
}

TEST(Interval, ClosedOverlap) {
    const Interval a{0.1, 0.3};
    EXPECT_TRUE(a.overlaps({0.3, 0.5}));
    EXPECT_FALSE(a.overlaps({0.31, 0.5}));
    EXPECT_TRUE(a.overlaps({-1, 1}));
    EXPECT_TRUE(a.contains(0.1));
}

TEST(Quantile, Type7) {
    const std::vector<double> s{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.25), 1.75);
}

#include <gtest/gtest.h>

#include <optional>
#include <random>

#include "homux/dyadic.hpp"

using namespace homux;

namespace {

std::vector<std::string> ids(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back("i" + std::to_string(i + 1));
    return out;
}

Eigen::MatrixXd bivariate(double rho, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(n, 2);
    for (int r = 0; r < n; ++r) {
        const double a = z(rng), b = z(rng);
        x(r, 0) = a;
        x(r, 1) = rho * a + std::sqrt(1 - rho * rho) * b;
    }
    return x;
}

double cut(double v) { return v < -0.8 ? 0 : v < 0 ? 1 : v < 0.8 ? 2 : 3; }

ResponseMatrix discretized_pair(double rho, int n, std::uint64_t seed) {
    const auto x = bivariate(rho, n, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_int_distribution<int> noise(0, 4);
    Eigen::MatrixXd v(n, 3);
    for (int r = 0; r < n; ++r) {
        v(r, 0) = cut(x(r, 0));
        v(r, 1) = cut(x(r, 1));
        v(r, 2) = noise(rng);
    }
    return ResponseMatrix(v, ids(3), "L");
}

Eigen::MatrixXd random_sample_correlation(int p, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd mix(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) mix(i, j) = (i == j) ? 1.0 : (z(rng) * (std::abs(i - j) <= 2 ? 0.4 : 0.05));
    Eigen::MatrixXd x(n, p);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < p; ++j) x(r, j) = z(rng);
    x = x * mix;
    return column_correlation(x);
}

} // namespace

TEST(Nonparanormal, MonotoneAndIndependentPairs) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    Eigen::MatrixXd v(1000, 4);
    for (int r = 0; r < 1000; ++r) {
        const double a = z(rng);
        v(r, 0) = a;
        v(r, 1) = std::exp(a) + 3 * a * a * a;
        v(r, 2) = -a;
        v(r, 3) = z(rng);
    }
    for (bool w : {false, true}) {
        const auto c = nonparanormal_corr(ResponseMatrix(v, ids(4), "L", std::nullopt), w);
        EXPECT_GE(c.matrix(0, 1), 0.99);
        EXPECT_LE(c.matrix(0, 2), -0.99);
        EXPECT_LT(std::abs(c.matrix(0, 3)), 0.1);
        EXPECT_EQ(c.matrix, c.matrix.transpose());
        EXPECT_EQ(c.matrix.diagonal(), Eigen::VectorXd::Ones(4));
    }
}

TEST(Polychoric, RecoversLatentCorrelation) {
    const auto c = polychoric_corr(discretized_pair(0.5, 5000, 21));
    EXPECT_GE(c.matrix(0, 1), 0.45);
    EXPECT_LE(c.matrix(0, 1), 0.55);
    const auto c0 = polychoric_corr(discretized_pair(0.0, 5000, 22));
    EXPECT_LE(std::abs(c0.matrix(0, 1)), 0.05);
}

TEST(Polychoric, SameColumnTwice) {
    auto d = discretized_pair(0.3, 500, 5);
    Eigen::MatrixXd v = d.values();
    v.col(1) = v.col(0);
    const auto c = polychoric_corr(ResponseMatrix(v, ids(3), "L"));
    EXPECT_GE(c.matrix(0, 1), 0.99);
}

TEST(Polychoric, EmptyCategoriesAreMergedAndJobsDoNotMatter) {
    auto d = discretized_pair(0.4, 800, 9);
    Eigen::MatrixXd v = d.values();
    for (Eigen::Index r = 0; r < v.rows(); ++r)
        if (v(r, 0) == 1) v(r, 0) = 0; // category 1 never observed
    const ResponseMatrix m(v, ids(3), "L");
    const auto a = polychoric_corr(m, 1);
    const auto b = polychoric_corr(m, 3);
    EXPECT_EQ(a.matrix, b.matrix);
    EXPECT_GT(a.matrix(0, 1), 0.3);
}

TEST(Polychoric, SingleCategoryIsDegenerate) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(10, 3);
    v.col(1).setLinSpaced(10, 0, 4);
    v.col(1) = v.col(1).array().round();
    v.col(2) = v.col(1).reverse();
    EXPECT_THROW(polychoric_corr(ResponseMatrix(v, ids(3), "L")), DegenerateVariableError);
}

TEST(GraphicalLasso, IdentityGivesEmptyNetwork) {
    const CorrelationEstimate id{Eigen::MatrixXd::Identity(6, 6), CorrelationMethod::nonparanormal};
    const auto net = ebic_glasso(id, 200, 0.5, {0.5, 0.1, 0.01});
    EXPECT_EQ(net.edge_count(), 0);
    EXPECT_EQ(net.partial_corr, Eigen::MatrixXd::Zero(6, 6));
    const auto def = ebic_glasso(id, 200, 0.5);
    EXPECT_EQ(def.edge_count(), 0);
}

TEST(GraphicalLasso, FullShrinkageAboveLambdaMax) {
    std::mt19937_64 rng(3);
    const auto s = random_sample_correlation(8, 300, rng);
    double lmax = 0;
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) lmax = std::max(lmax, std::abs(s(i, j)));
    const auto fit = graphical_lasso(s, lmax * 1.0001);
    ASSERT_TRUE(fit.converged);
    EXPECT_EQ(upper_edge_count(fit.precision), 0);
}

TEST(GraphicalLasso, ChainHasNoDirectEndpointEdge) {
    Eigen::Matrix3d c;
    c << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
    const Eigen::Matrix3d inv = c.inverse();
    EXPECT_NEAR(inv(0, 2), 0.0, 1e-12);
    const auto fit = graphical_lasso(c, 0.01);
    ASSERT_TRUE(fit.converged);
    const auto pc = partial_correlations(fit.precision);
    EXPECT_NEAR(pc(0, 2), 0.0, 1e-6);
    EXPECT_GT(pc(0, 1), 0.3);
    EXPECT_GT(pc(1, 2), 0.3);
}

TEST(GraphicalLasso, KktHoldsAndOutputIsSymmetric) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 5 + trial % 10;
        const auto s = random_sample_correlation(p, 250, rng);
        EbicPath path;
        const auto net = ebic_glasso({s, CorrelationMethod::nonparanormal}, 250, 0.5, {}, &path);
        const Eigen::MatrixXd sigma = net.precision.inverse();
        const Eigen::MatrixXd r = s - sigma;
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                if (i == j) continue;
                EXPECT_LE(std::abs(r(i, j)), net.lambda_selected + 1e-6);
                if (net.precision(i, j) != 0.0) {
                    EXPECT_NEAR(r(i, j), net.lambda_selected * (net.precision(i, j) > 0 ? -1.0 : 1.0), 1e-5);
                }
                EXPECT_EQ(net.partial_corr(i, j), net.partial_corr(j, i));
                EXPECT_EQ(net.partial_corr(i, j) == 0.0, net.partial_corr(j, i) == 0.0);
                EXPECT_LT(std::abs(net.partial_corr(i, j)), 1.0);
            }
        }
    }
}

// Along a decreasing lambda grid the edge count grows, except where the exact
// path itself drops an edge (lasso paths are not monotone in general). Every
// drop must then be certified: both fits at zero duality gap, and the vanished
// edge strictly inside its KKT bound at the smaller lambda.
TEST(GraphicalLasso, EdgeCountAlongGridIsMonotoneOrCertified) {
    std::mt19937_64 rng(8);
    GlassoOptions tight;
    tight.gap_tolerance = 1e-11;
    tight.change_tolerance = 1e-14;
    int drops = 0, steps = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const int p = 5 + trial % 10;
        const auto s = random_sample_correlation(p, 250, rng);
        std::optional<GlassoFit> prev;
        for (double lambda : default_lambda_grid(s, 40)) {
            auto fit = graphical_lasso(s, lambda, tight);
            ASSERT_TRUE(fit.converged);
            if (prev) {
                ++steps;
                if (upper_edge_count(fit.precision) < upper_edge_count(prev->precision)) {
                    ++drops;
                    const Eigen::MatrixXd resid = s - fit.precision.inverse();
                    for (int i = 0; i < p; ++i)
                        for (int j = i + 1; j < p; ++j)
                            if (prev->precision(i, j) != 0.0 && fit.precision(i, j) == 0.0) {
                                EXPECT_LT(std::abs(resid(i, j)), lambda - 1e-9);
                            }
                }
            }
            prev = std::move(fit);
        }
    }
    EXPECT_LT(drops * 10, steps);
}

TEST(GraphicalLasso, EdgeCountMonotoneOnTreeStructuredCorrelation) {
    // A tree (chain) covariance keeps the exact path monotone.
    const int p = 8;
    Eigen::MatrixXd c(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) c(i, j) = std::pow(0.6, std::abs(i - j));
    EbicPath path;
    ebic_glasso({c, CorrelationMethod::nonparanormal}, 300, 0.5, {}, &path);
    for (std::size_t t = 1; t < path.points.size(); ++t) EXPECT_GE(path.points[t].edges, path.points[t - 1].edges);
}

TEST(GraphicalLasso, GridValidation) {
    const CorrelationEstimate id{Eigen::MatrixXd::Identity(3, 3), CorrelationMethod::nonparanormal};
    EXPECT_THROW(ebic_glasso(id, 100, 0.5, {0.1, 0.2}), ConfigError);
    EXPECT_THROW(ebic_glasso(id, 100, 0.5, {0.1, -0.2}), ConfigError);
    EXPECT_THROW(ebic_glasso(id, 100, -1.0), ConfigError);
}

TEST(GraphicalLasso, NonPositiveDefiniteInputIsRegularized) {
    Eigen::Matrix3d c;
    c << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    const auto net = ebic_glasso({c, CorrelationMethod::polychoric}, 100, 0.5);
    EXPECT_FALSE(net.warnings.empty());
    EXPECT_TRUE(net.partial_corr.allFinite());
}

TEST(GraphicalLasso, DisconnectedNetworkWarns) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
    c(0, 1) = c(1, 0) = 0.6;
    c(2, 3) = c(3, 2) = 0.6;
    auto net = ebic_glasso({c, CorrelationMethod::nonparanormal}, 500, 0.5);
    EXPECT_EQ(net.edge_count(), 2);
    note_connectivity(net);
    ASSERT_EQ(net.warnings.size(), 1u);
    const auto comp = connected_components(net);
    EXPECT_EQ(comp[0], comp[1]);
    EXPECT_NE(comp[0], comp[2]);
}

#include <gtest/gtest.h>

#include <map>

#include "homux/communities.hpp"

using namespace homux;

namespace {

DyadicNetwork network_from(const Eigen::MatrixXd& w) {
    DyadicNetwork net;
    net.partial_corr = w;
    net.partial_corr.diagonal().setZero();
    return net;
}

double choose2(double n) { return n * (n - 1) / 2; }

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, int> joint;
    std::map<int, int> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[{a[i], b[i]}];
        ++ra[a[i]];
        ++rb[b[i]];
    }
    double idx = 0, sa = 0, sb = 0;
    for (auto& [k, v] : joint) idx += choose2(v);
    for (auto& [k, v] : ra) sa += choose2(v);
    for (auto& [k, v] : rb) sb += choose2(v);
    const double expected = sa * sb / choose2(static_cast<double>(a.size()));
    const double maximum = 0.5 * (sa + sb);
    return (idx - expected) / (maximum - expected);
}

} // namespace

TEST(Spinglass, TwoDisconnectedCliques) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            w(i, j) = 0.3;
            w(i + 4, j + 4) = 0.3;
        }
    const auto c = spinglass_communities(network_from(w));
    EXPECT_EQ(c.membership, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1}));
    ASSERT_EQ(c.n_communities(), 2);
    EXPECT_NEAR(c.affinity(0, 0), 0.3, 1e-15);
    EXPECT_EQ(c.affinity(0, 1), 0.0);
}

TEST(Spinglass, CliqueWithIsolatedNodes) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(7, 7);
    for (int i = 2; i < 6; ++i)
        for (int j = 2; j < 6; ++j) w(i, j) = 0.25;
    const auto c = spinglass_communities(network_from(w));
    for (int i = 3; i < 6; ++i) EXPECT_EQ(c.membership[i], c.membership[2]);
}

TEST(Spinglass, PlantedSignedBlocksAreRecovered) {
    const int n = 30;
    std::vector<int> truth(n);
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i) {
        truth[i] = i / 10;
        for (int j = 0; j < n; ++j) w(i, j) = (i / 10 == j / 10) ? 0.4 : -0.2;
    }
    const auto net = network_from(w);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SpinglassOptions opt;
        opt.seed = seed;
        const auto c = spinglass_communities(net, opt);
        EXPECT_GE(adjusted_rand(c.membership, truth), 0.9) << "seed " << seed;
    }
}

TEST(Spinglass, DeterministicAcrossJobsAndEdgelessDegenerate) {
    Eigen::MatrixXd w(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) w(i, j) = ((i * 7 + j * 7) % 5 - 2) * 0.05 + ((i / 4 == j / 4) ? 0.2 : 0.0);
    w = 0.5 * (w + w.transpose()).eval();
    SpinglassOptions opt;
    opt.seed = 42;
    const auto a = spinglass_communities(network_from(w), opt, 1);
    const auto b = spinglass_communities(network_from(w), opt, 4);
    EXPECT_EQ(a.membership, b.membership);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.affinity, a.affinity.transpose());
    EXPECT_GE(a.affinity.minCoeff(), 0.0);

    const auto e = spinglass_communities(network_from(Eigen::MatrixXd::Zero(5, 5)));
    EXPECT_EQ(e.membership, std::vector<int>(5, 0));
    EXPECT_EQ(e.warnings.size(), 1u);
}

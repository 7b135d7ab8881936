#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "homux/info.hpp"
#include "homux/synth.hpp"

using namespace homux;

namespace {

// Closed-form determinants, independent of the Cholesky path in the library.
double det2(double r) { return 1.0 - r * r; }
double det3(double a, double b, double c) { return 1.0 + 2.0 * a * b * c - a * a - b * b - c * c; }
double omega3_by_hand(double r12, double r13, double r23) {
    return 0.5 * (std::log(det3(r12, r13, r23)) - std::log(det2(r12)) - std::log(det2(r13)) - std::log(det2(r23)));
}

Eigen::MatrixXd corr3(double r12, double r13, double r23) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
    c(0, 1) = c(1, 0) = r12;
    c(0, 2) = c(2, 0) = r13;
    c(1, 2) = c(2, 1) = r23;
    return c;
}

Eigen::MatrixXd random_correlation(int k, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(k + 3, k);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = z(rng);
    Eigen::MatrixXd s = a.transpose() * a;
    Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    return d.asDiagonal() * s * d.asDiagonal();
}

ResponseMatrix gaussian_sample(const Eigen::MatrixXd& corr, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(corr).matrixL();
    Eigen::MatrixXd x(n, corr.rows());
    for (int r = 0; r < n; ++r) {
        Eigen::VectorXd v(corr.rows());
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = z(rng);
        x.row(r) = (l * v).transpose();
    }
    std::vector<std::string> ids;
    for (Eigen::Index j = 0; j < corr.rows(); ++j) ids.push_back("x" + std::to_string(j));
    return ResponseMatrix(x, ids, "test", std::nullopt);
}

} // namespace

TEST(CopulaTransform, ThreeRespondentsMapToQuartileQuantiles) {
    Eigen::MatrixXd v(3, 3);
    v << 1, 3, 0, 2, 2, 1, 3, 1, 2;
    const auto s = copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L"));
    EXPECT_NEAR(s.scores(0, 0), -0.6744897501960817, 1e-12);
    EXPECT_NEAR(s.scores(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(s.scores(2, 0), 0.6744897501960817, 1e-12);
    EXPECT_NEAR(s.scores(0, 1), 0.6744897501960817, 1e-12);
}

TEST(CopulaTransform, MonotoneColumnGivesMonotoneScores) {
    Eigen::MatrixXd v(6, 3);
    v.col(0) << 0.1, 0.5, 0.7, 2.0, 9.0, 11.0;
    v.col(1) << 1, 2, 3, 4, 5, 6;
    v.col(2) << 6, 5, 4, 3, 2, 1;
    const auto s = copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L", std::nullopt));
    for (int r = 1; r < 6; ++r) {
        EXPECT_GT(s.scores(r, 0), s.scores(r - 1, 0));
        EXPECT_LT(s.scores(r, 2), s.scores(r - 1, 2));
    }
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(s.scores.col(c).mean(), 0.0, 1e-15);
}

TEST(CopulaTransform, ConstantColumnIsDegenerate) {
    Eigen::MatrixXd v(3, 3);
    v << 2, 1, 0, 2, 2, 1, 2, 3, 4;
    EXPECT_THROW(copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L")), DegenerateVariableError);
}

TEST(CopulaTransform, TiesUseAverageRanksUnlessJittered) {
    Eigen::MatrixXd v(4, 3);
    v << 0, 0, 1, 1, 1, 2, 1, 2, 3, 2, 3, 4;
    const auto avg = copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L"));
    EXPECT_DOUBLE_EQ(avg.scores(1, 0), avg.scores(2, 0));
    const auto j1 = copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L"), 7);
    const auto j2 = copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L"), 7);
    EXPECT_NE(j1.scores(1, 0), j1.scores(2, 0));
    EXPECT_EQ(j1.scores, j2.scores);
}

TEST(GaussianEntropy, SpotValues) {
    const double h1 = 0.5 * std::log(2 * M_PI * M_E);
    EXPECT_NEAR(gaussian_entropy(Eigen::MatrixXd::Identity(1, 1)), h1, 1e-9);
    EXPECT_NEAR(h1, 1.4189, 1e-4);
    EXPECT_NEAR(gaussian_entropy(Eigen::MatrixXd::Identity(2, 2)), 2 * h1, 1e-9);
    Eigen::MatrixXd c(2, 2);
    c << 1, 0.5, 0.5, 1;
    EXPECT_NEAR(gaussian_entropy(c), 2 * h1 + 0.5 * std::log(0.75), 1e-9);
    EXPECT_NEAR(gaussian_entropy(c), 2.6940, 1e-4);
}

TEST(GaussianEntropy, SingularThrows) {
    Eigen::MatrixXd c(2, 2);
    c << 1, 1, 1, 1;
    c(0, 1) = c(1, 0) = 1.0 + 1e-6;
    EXPECT_THROW(gaussian_entropy(c), SingularCovarianceError);
}

TEST(OInformation, AnalyticSpotValues) {
    EXPECT_EQ(omega_from_correlation(Eigen::MatrixXd::Identity(4, 4)), 0.0);
    EXPECT_NEAR(omega_from_correlation(corr3(0.5, 0.5, 0.5)), omega3_by_hand(0.5, 0.5, 0.5), 1e-9);
    EXPECT_NEAR(omega3_by_hand(0.5, 0.5, 0.5), 0.5 * std::log(0.5 / std::pow(0.75, 3)), 1e-15);
    EXPECT_NEAR(omega_from_correlation(corr3(0.5, 0.5, 0.5)), 0.0849, 1e-4);
    EXPECT_NEAR(omega_from_correlation(corr3(0.0, 0.6, 0.6)), omega3_by_hand(0.0, 0.6, 0.6), 1e-9);
    EXPECT_NEAR(omega_from_correlation(corr3(0.0, 0.6, 0.6)), -0.1902, 1e-4);
}

TEST(OInformation, ConstantsCancelBetweenBothForms) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 3 + trial % 3;
        const auto c = random_correlation(k, rng);
        EXPECT_NEAR(omega_from_correlation(c), omega_entropy_form(c), 1e-10);
    }
}

TEST(OInformation, PermutationSymmetry) {
    std::mt19937_64 rng(5);
    const auto c = random_correlation(5, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 2, 1;
    const Eigen::MatrixXd pc = perm * c * perm.transpose();
    EXPECT_NEAR(omega_from_correlation(c), omega_from_correlation(pc), 1e-12);

    const auto data = gaussian_sample(c, 200, 3);
    const auto scores = copula_transform(data);
    EXPECT_EQ(o_information(scores, Multiplet({4, 1, 2})).omega, o_information(scores, Multiplet({1, 2, 4})).omega);
}

TEST(OInformation, IndependenceNullAtLargeN) {
    const auto data = gaussian_sample(Eigen::MatrixXd::Identity(3, 3), 50000, 2024);
    const auto scores = copula_transform(data);
    EXPECT_LT(std::abs(o_information(scores, Multiplet({0, 1, 2})).omega), 0.01);
}

TEST(OInformation, ConsistentWithAnalyticValue) {
    for (auto c : {corr3(0.5, 0.5, 0.5), corr3(0.0, 0.6, 0.6)}) {
        const auto scores = copula_transform(gaussian_sample(c, 50000, 99));
        EXPECT_NEAR(o_information(scores, Multiplet({0, 1, 2})).omega, omega3_by_hand(c(0, 1), c(0, 2), c(1, 2)), 0.02);
    }
}

TEST(OInformation, SingularSubmatrixThrows) {
    Eigen::MatrixXd v(5, 3);
    v << 1, 1, 3, 2, 2, 1, 3, 3, 2, 4, 4, 5, 5, 5, 4;
    const auto scores = copula_transform(ResponseMatrix(v, {"a", "b", "c"}, "L", std::nullopt));
    EXPECT_THROW(o_information(scores, Multiplet({0, 1, 2})), SingularCovarianceError);
}

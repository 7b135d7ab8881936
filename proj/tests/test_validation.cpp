#include <gtest/gtest.h>

#include "homux/validation.hpp"
#include "support.hpp"

using namespace homux;
using homux::testing::block_diagonal;
using homux::testing::equicorrelated;
using homux::testing::gaussian_scores;

namespace {

Eigen::MatrixXd common_effect() {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
    c(0, 2) = c(2, 0) = c(1, 2) = c(2, 1) = 0.6;
    return c;
}

CandidateSet single(const Multiplet& m) {
    CandidateSet s;
    s.add(m, Provenance::network_based);
    return s;
}

// Stage-2 record for one candidate, whatever stage 1 decided.
StageRecord survivor(const CopulaScores& scores, const Multiplet& m, const ValidationConfig& cfg) {
    auto rec = stage1_permutation(scores, single(m), cfg).records.at(0);
    rec.passed = true;
    return stage2_bootstrap(scores, {rec}, cfg).records.at(0);
}

} // namespace

TEST(ValidationConfig, Invariants) {
    ValidationConfig c;
    EXPECT_NO_THROW(c.check());
    c.n_perm = 99;
    EXPECT_THROW(c.check(), ConfigError);
    c = {};
    c.n_boot = 999;
    EXPECT_THROW(c.check(), ConfigError);
    c = {};
    c.alpha_fdr = 1.0;
    EXPECT_THROW(c.check(), ConfigError);
    c = {};
    c.effect_floor = -0.1;
    EXPECT_THROW(c.check(), ConfigError);
}

TEST(Stage1, PlantedRedundantTripletAndTheFloor) {
    const auto scores = gaussian_scores(equicorrelated(3, 0.5), 2000, 7);
    ValidationConfig cfg;
    const auto at_default = stage1_permutation(scores, single(Multiplet({0, 1, 2})), cfg).records.at(0);
    EXPECT_FALSE(at_default.passed);
    EXPECT_EQ(at_default.reason, FailReason::below_floor);
    EXPECT_LT(at_default.p_adj, 0.05);
    cfg.effect_floor = 0.05;
    const auto lowered = stage1_permutation(scores, single(Multiplet({0, 1, 2})), cfg).records.at(0);
    EXPECT_TRUE(lowered.passed);
    EXPECT_GT(lowered.omega, 0.05);
}

TEST(Stage1, NoiseCandidatesRarelyPass) {
    const auto scores = gaussian_scores(Eigen::MatrixXd::Identity(20, 20), 400, 11);
    CandidateSet cands;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> item(0, 19);
    while (cands.size() < 100) {
        std::set<int> s;
        while (s.size() < 3) s.insert(item(rng));
        cands.add(Multiplet(ItemSet(s.begin(), s.end())), Provenance::subscale_inter);
    }
    ValidationConfig cfg;
    cfg.effect_floor = 0.0;
    cfg.n_perm = 200;
    const auto rep = stage1_permutation(scores, cands, cfg);
    ASSERT_EQ(rep.records.size(), 100u);
    EXPECT_LE(rep.survivors().size(), 5u);
    for (const auto& r : rep.records) {
        EXPECT_GE(r.p_raw, 1.0 / 201.0);
        EXPECT_LE(r.p_raw, 1.0);
        EXPECT_GE(r.p_adj, r.p_raw);
    }
}

TEST(Stage1, SingularCandidateIsRecordedNotFatal) {
    Eigen::MatrixXd x = homux::testing::gaussian_draws(Eigen::MatrixXd::Identity(4, 4), 300, 3);
    x.col(1) = x.col(0);
    const auto scores = copula_transform(ResponseMatrix(x, homux::testing::labels(4), "L", std::nullopt));
    CandidateSet cands;
    cands.add(Multiplet({0, 1, 2}), Provenance::network_based);
    cands.add(Multiplet({0, 2, 3}), Provenance::network_based);
    const auto rep = stage1_permutation(scores, cands, ValidationConfig{});
    ASSERT_EQ(rep.records.size(), 2u);
    EXPECT_EQ(rep.records[0].reason, FailReason::not_significant);
    EXPECT_NE(rep.records[0].note.find("singular"), std::string::npos);
    EXPECT_EQ(rep.records[1].note.find("singular"), std::string::npos);
    EXPECT_TRUE(std::isfinite(rep.records[1].omega));
}

TEST(Stage1, EarlyStopNeverChangesTheDecision) {
    const double alpha = 0.05;
    int stopped = 0, significant = 0;
    for (int t = 0; t < 40; ++t) {
        // Weak dependence so that p lands on both sides of alpha.
        const auto scores = gaussian_scores(equicorrelated(4, 0.01 * (t % 8)), 300, 100 + t);
        const Multiplet m({0, 1, 2, 3});
        const auto full = permutation_test(scores, m, 400, 7 + t);
        const auto fast = permutation_test(scores, m, 400, 7 + t, alpha);
        EXPECT_EQ(full.omega, fast.omega);
        EXPECT_EQ(full.p <= alpha, fast.p <= alpha) << t;
        EXPECT_LE(fast.p, full.p);
        if (fast.stopped_early) {
            ++stopped;
            EXPECT_GT(fast.p, alpha);
            EXPECT_LT(fast.performed, full.performed);
        } else {
            EXPECT_EQ(fast.p, full.p);
        }
        significant += full.p <= alpha;
    }
    EXPECT_GT(stopped, 0);
    EXPECT_GT(significant, 0);
}

TEST(Stage2, StrongSynergyHasNegativeInterval) {
    const auto scores = gaussian_scores(common_effect(), 5000, 21);
    const auto rec = survivor(scores, Multiplet({0, 1, 2}), ValidationConfig{});
    EXPECT_TRUE(rec.passed);
    EXPECT_LT(rec.ci_high, 0.0);
    EXPECT_LE(rec.ci_low, rec.omega);
    EXPECT_GE(rec.ci_high, rec.omega);
}

TEST(Stage2, NoiseIntervalsUsuallySpanZero) {
    const auto scores = gaussian_scores(Eigen::MatrixXd::Identity(9, 9), 1000, 4);
    ValidationConfig cfg;
    std::vector<StageRecord> in;
    for (int b = 0; b < 3; ++b) {
        ValidationConfig loose = cfg;
        loose.effect_floor = 0.0;
        auto r = stage1_permutation(scores, single(Multiplet({3 * b, 3 * b + 1, 3 * b + 2})), loose).records[0];
        in.push_back(r);
    }
    const auto rep = stage2_bootstrap(scores, in, cfg);
    int spans = 0;
    for (const auto& r : rep.records) spans += r.reason == FailReason::ci_spans_zero;
    EXPECT_GE(spans, 2);
}

TEST(Stage3, PaddedTripletIsRemovedAndGenuineQuadrupletKept) {
    // items 0-2: synergistic triplet; 3: independent noise; 4-7: equicorrelated 4-block
    const auto corr = block_diagonal({common_effect(), Eigen::MatrixXd::Identity(1, 1), equicorrelated(4, 0.5)});
    const auto scores = gaussian_scores(corr, 5000, 33);
    ValidationConfig cfg;
    const auto triplet = survivor(scores, Multiplet({0, 1, 2}), cfg);
    const auto padded = survivor(scores, Multiplet({0, 1, 2, 3}), cfg);
    const auto genuine = survivor(scores, Multiplet({4, 5, 6, 7}), cfg);
    ASSERT_TRUE(triplet.passed);
    ASSERT_TRUE(padded.passed);
    ASSERT_TRUE(genuine.passed);
    const auto rep = stage3_hierarchical({triplet, padded, genuine}, scores, cfg);
    ASSERT_EQ(rep.records.size(), 3u);
    EXPECT_TRUE(rep.records[0].passed);
    EXPECT_FALSE(rep.records[1].passed);
    EXPECT_EQ(rep.records[1].reason, FailReason::subsumed_by_suborder);
    EXPECT_TRUE(rep.records[2].passed);
}

TEST(Stage3, SubMultipletsOfAQuintuplet) {
    const auto subs = sub_multiplets(Multiplet({1, 4, 6, 8, 9}));
    ASSERT_EQ(subs.size(), 5u);
    for (const auto& s : subs) EXPECT_EQ(s.order(), 4);
    EXPECT_EQ(subs.front(), Multiplet({1, 4, 6, 8}));
}

TEST(ValidateAll, EmptyInput) {
    const auto scores = gaussian_scores(Eigen::MatrixXd::Identity(3, 3), 50, 1);
    const auto res = validate_all(scores, CandidateSet{}, ValidationConfig{});
    EXPECT_TRUE(res.redundancy.empty());
    EXPECT_TRUE(res.synergy.empty());
    EXPECT_TRUE(res.report.records.empty());
}

TEST(ValidateAll, DeterministicAcrossJobsAndMonotoneFiltering) {
    const auto corr = block_diagonal({common_effect(), equicorrelated(3, 0.7), Eigen::MatrixXd::Identity(3, 3)});
    const auto scores = gaussian_scores(corr, 1500, 8);
    CandidateSet cands;
    for_each_subset({0, 1, 2, 3, 4, 5, 6, 7, 8}, 3,
                    [&](const std::vector<int>& s) { cands.add(Multiplet(s), Provenance::subscale_intra); });
    cands.add(Multiplet({0, 1, 2, 6}), Provenance::network_based);
    ValidationConfig cfg;
    cfg.seed = 77;
    cfg.n_perm = 300;
    cfg.n_boot = 1000;
    const auto a = validate_all(scores, cands, cfg, 1);
    const auto b = validate_all(scores, cands, cfg, 4);
    ASSERT_EQ(a.report.records.size(), b.report.records.size());
    for (std::size_t i = 0; i < a.report.records.size(); ++i) {
        const auto& x = a.report.records[i];
        const auto& y = b.report.records[i];
        EXPECT_EQ(x.multiplet, y.multiplet);
        EXPECT_EQ(x.omega, y.omega);
        EXPECT_EQ(x.p_raw, y.p_raw);
        EXPECT_EQ(x.p_adj, y.p_adj);
        EXPECT_EQ(std::isnan(x.ci_low) ? 0.0 : x.ci_low, std::isnan(y.ci_low) ? 0.0 : y.ci_low);
        EXPECT_EQ(x.passed, y.passed);
        EXPECT_EQ(x.reason, y.reason);
    }

    std::map<Stage, std::set<Multiplet>> entered, passed;
    for (const auto& r : a.report.records) {
        EXPECT_TRUE(entered[r.stage].insert(r.multiplet).second);
        if (r.passed) {
            passed[r.stage].insert(r.multiplet);
            EXPECT_EQ(r.reason, FailReason::none);
        } else {
            EXPECT_NE(r.reason, FailReason::none);
        }
    }
    EXPECT_EQ(entered[Stage::permutation].size(), cands.size());
    EXPECT_EQ(entered[Stage::bootstrap], passed[Stage::permutation]);
    EXPECT_EQ(entered[Stage::hierarchical], passed[Stage::bootstrap]);

    ASSERT_EQ(a.synergy.size(), 1u);
    EXPECT_EQ(a.synergy[0].multiplet, Multiplet({0, 1, 2}));
    ASSERT_EQ(a.redundancy.size(), 1u);
    EXPECT_EQ(a.redundancy[0].multiplet, Multiplet({3, 4, 5}));
    for (const auto* set : {&a.synergy, &a.redundancy})
        for (const auto& e : *set) {
            EXPECT_NO_THROW(e.check(cfg.effect_floor));
            EXPECT_EQ(e.ci_low > 0, e.omega > 0);
            EXPECT_EQ(e.ci_high < 0, e.omega < 0);
        }
}

TEST(Bootstrap, SeedControlsDraws) {
    const auto scores = gaussian_scores(common_effect(), 600, 2);
    ValidationConfig cfg;
    const auto a = bootstrap_omega(scores, Multiplet({0, 1, 2}), cfg, 5);
    const auto b = bootstrap_omega(scores, Multiplet({0, 1, 2}), cfg, 5);
    const auto c = bootstrap_omega(scores, Multiplet({0, 1, 2}), cfg, 6);
    EXPECT_EQ(a.ci.lo, b.ci.lo);
    EXPECT_EQ(a.ci.hi, b.ci.hi);
    EXPECT_NE(a.ci.lo, c.ci.lo);
    EXPECT_EQ(a.dropped, 0);
}

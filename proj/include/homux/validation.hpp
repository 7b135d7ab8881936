#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "homux/candidates.hpp"
#include "homux/data_model.hpp"
#include "homux/error.hpp"
#include "homux/inference.hpp"
#include "homux/info.hpp"
#include "homux/parallel.hpp"
#include "homux/rng.hpp"

namespace homux {

struct ValidationConfig {
    int n_perm = 1000;
    double alpha_fdr = 0.05;
    double effect_floor = 0.15; // nats
    int n_boot = 2000;
    double ci_level = 0.95;
    std::uint64_t seed = 0;
    double stability_level = 0.99;     // point estimate must sit inside this central bootstrap range
    double max_dropped_fraction = 0.05; // singular resamples tolerated before a candidate is unstable

    void check() const {
        if (n_perm < 100) throw ConfigError("n_perm must be >= 100");
        if (n_boot < 1000) throw ConfigError("n_boot must be >= 1000");
        if (!(alpha_fdr > 0 && alpha_fdr < 1)) throw ConfigError("alpha_fdr must be in (0,1)");
        if (!(ci_level > 0 && ci_level < 1)) throw ConfigError("ci_level must be in (0,1)");
        if (!(effect_floor >= 0)) throw ConfigError("effect_floor must be >= 0");
        if (!(stability_level > 0 && stability_level < 1)) throw ConfigError("stability_level must be in (0,1)");
        if (!(max_dropped_fraction >= 0 && max_dropped_fraction < 1))
            throw ConfigError("max_dropped_fraction must be in [0,1)");
    }
};

enum class Stage { permutation = 1, bootstrap = 2, hierarchical = 3 };

enum class FailReason { none, not_significant, below_floor, ci_spans_zero, unstable_point, subsumed_by_suborder };

inline std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::permutation: return "permutation";
    case Stage::bootstrap: return "bootstrap";
    case Stage::hierarchical: return "hierarchical";
    }
    return "?";
}

inline std::string_view to_string(FailReason r) {
    switch (r) {
    case FailReason::none: return "";
    case FailReason::not_significant: return "not_significant";
    case FailReason::below_floor: return "below_floor";
    case FailReason::ci_spans_zero: return "ci_spans_zero";
    case FailReason::unstable_point: return "unstable_point";
    case FailReason::subsumed_by_suborder: return "subsumed_by_suborder";
    }
    return "?";
}

struct StageRecord {
    Multiplet multiplet;
    Provenance provenance = Provenance::network_based;
    Stage stage = Stage::permutation;
    double omega = std::numeric_limits<double>::quiet_NaN();
    double p_raw = std::numeric_limits<double>::quiet_NaN();
    double p_adj = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    bool passed = false;
    FailReason reason = FailReason::none;
    int dropped = 0; // singular permutations/resamples
    std::string note;
};

/// One record per candidate entering the stage.
struct StageReport {
    std::vector<StageRecord> records;

    std::vector<StageRecord> survivors() const {
        std::vector<StageRecord> out;
        for (const auto& r : records)
            if (r.passed) out.push_back(r);
        return out;
    }
};

// ---------------------------------------------------------------------------
// resampling kernels

namespace detail {

/// Correlation from raw first/second moments; nullopt when a variance vanishes.
inline std::optional<Eigen::MatrixXd> correlation_from_moments(const Eigen::VectorXd& sum, const Eigen::MatrixXd& cross,
                                                               double n) {
    Eigen::MatrixXd cov = cross - sum * sum.transpose() / n;
    Eigen::VectorXd sd = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    if ((sd.array() <= 1e-12 * n).any()) return std::nullopt;
    Eigen::VectorXd inv = sd.cwiseInverse();
    Eigen::MatrixXd r = inv.asDiagonal() * cov * inv.asDiagonal();
    r.diagonal().setOnes();
    return r;
}

inline std::optional<double> try_omega(const Eigen::MatrixXd& corr) {
    try {
        return omega_from_correlation(corr);
    } catch (const SingularCovarianceError&) {
        return std::nullopt;
    }
}

} // namespace detail

struct BootstrapSummary {
    double point = 0.0;
    Interval ci;
    Interval stability; // central stability_level range of the bootstrap distribution
    int dropped = 0;
    bool unstable = false; // too many singular resamples
};

/// Row bootstrap of Omega with a BCa interval (acceleration from the row jackknife).
inline BootstrapSummary bootstrap_omega(const CopulaScores& scores, const Multiplet& m, const ValidationConfig& cfg,
                                        std::uint64_t seed) {
    const int n = scores.respondents();
    const int k = m.order();
    const Eigen::MatrixXd x = gather_columns(scores, m);
    BootstrapSummary out;

    Eigen::VectorXd full_sum = x.colwise().sum().transpose();
    Eigen::MatrixXd full_cross = x.transpose() * x;
    const auto point_corr = detail::correlation_from_moments(full_sum, full_cross, n);
    const auto point = point_corr ? detail::try_omega(*point_corr) : std::nullopt;
    if (!point) {
        out.unstable = true;
        out.dropped = cfg.n_boot;
        out.ci = {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        return out;
    }
    out.point = *point;

    Engine rng = make_engine(seed);
    std::vector<double> boot;
    boot.reserve(static_cast<std::size_t>(cfg.n_boot));
    Eigen::VectorXd sum(k);
    Eigen::MatrixXd cross(k, k);
    // A resample is a vector of row multiplicities; its moments are weighted
    // column products.
    Eigen::VectorXd w(n), xw(n);
    BoundedDraws draw(rng);
    for (int b = 0; b < cfg.n_boot; ++b) {
        w.setZero();
        for (int r = 0; r < n; ++r) w[draw(static_cast<std::uint32_t>(n))] += 1.0;
        for (int i = 0; i < k; ++i) {
            xw = x.col(i).cwiseProduct(w);
            sum[i] = xw.sum();
            for (int j = 0; j <= i; ++j) cross(i, j) = cross(j, i) = xw.dot(x.col(j));
        }
        const auto corr = detail::correlation_from_moments(sum, cross, n);
        const auto om = corr ? detail::try_omega(*corr) : std::nullopt;
        if (om) boot.push_back(*om);
        else ++out.dropped;
    }
    if (out.dropped > cfg.max_dropped_fraction * cfg.n_boot || boot.size() < 2) {
        out.unstable = true;
        out.ci = {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        return out;
    }
    std::sort(boot.begin(), boot.end());

    std::vector<double> jack;
    jack.reserve(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const Eigen::VectorXd row = x.row(r).transpose();
        const auto corr = detail::correlation_from_moments(full_sum - row, full_cross - row * row.transpose(), n - 1.0);
        const auto om = corr ? detail::try_omega(*corr) : std::nullopt;
        if (om) jack.push_back(*om);
    }
    out.ci = bca_interval(boot, out.point, jack, cfg.ci_level);
    out.stability = percentile_interval(boot, cfg.stability_level);
    return out;
}

inline std::uint64_t candidate_seed(const ValidationConfig& cfg, std::string_view stage, const std::string& layer,
                                    const Multiplet& m) {
    return derive_seed(cfg.seed, {stage, layer, m.label()});
}

// ---------------------------------------------------------------------------
// stage 1: column permutation null, BH per order family, effect floor

struct PermutationResult {
    double omega = 0.0;
    double p = 1.0;
    int dropped = 0;
    int performed = 0;
    bool stopped_early = false; // p is then a lower bound that already exceeds stop_above
};

/// Two-tailed permutation p-value. Column 0 stays in place and every other
/// column is shuffled with its own stream; only relative row alignment enters
/// Omega, so this has the same null distribution as shuffling every column.
/// The loop stops once (1 + extreme) / (n_perm + 1), a lower bound on the
/// final p-value, exceeds stop_above.
inline PermutationResult permutation_test(const CopulaScores& scores, const Multiplet& m, int n_perm,
                                          std::uint64_t seed, double stop_above = 1.0) {
    Eigen::MatrixXd x = gather_columns(scores, m);
    PermutationResult out;
    out.omega = omega_from_correlation(centered_correlation(x));
    const double observed = std::abs(out.omega);
    // Shuffling keeps column means and norms, so on centered unit-norm columns
    // the correlation of every permuted sample is the Gram matrix.
    x.rowwise() -= x.colwise().mean();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double norm = x.col(c).norm();
        if (norm > 0) x.col(c) /= norm;
    }
    const int k = m.order();
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<Engine> streams;
    for (int c = 0; c < k; ++c) streams.push_back(make_engine(derive_seed(seed, static_cast<std::uint64_t>(c))));
    int extreme = 0, used = 0;
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(k, k);
    for (int b = 0; b < n_perm; ++b) {
        for (int c = 1; c < k; ++c) shuffle(x.col(c).data(), n, streams[c]);
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) corr(i, j) = corr(j, i) = x.col(i).dot(x.col(j));
        ++out.performed;
        const auto om = detail::try_omega(corr);
        if (!om) {
            ++out.dropped;
            continue;
        }
        ++used;
        if (std::abs(*om) >= observed && (1.0 + ++extreme) / (n_perm + 1.0) > stop_above) {
            out.stopped_early = b + 1 < n_perm;
            out.p = (1.0 + extreme) / (n_perm + 1.0);
            return out;
        }
    }
    out.p = (1.0 + extreme) / (used + 1.0);
    return out;
}

inline StageReport stage1_permutation(const CopulaScores& scores, const CandidateSet& cands, const ValidationConfig& cfg,
                                      std::size_t jobs = 1) {
    cfg.check();
    const auto list = cands.flatten();
    StageReport report;
    report.records.resize(list.size());
    std::vector<char> singular(list.size(), 0);
    parallel_for(list.size(), jobs, [&](std::size_t i) {
        auto& rec = report.records[i];
        rec.multiplet = list[i].multiplet;
        rec.provenance = list[i].provenance;
        rec.stage = Stage::permutation;
        try {
            const auto res = permutation_test(scores, rec.multiplet, cfg.n_perm,
                                              candidate_seed(cfg, "stage1", scores.layer_id, rec.multiplet), cfg.alpha_fdr);
            rec.omega = res.omega;
            rec.p_raw = res.p;
            rec.dropped = res.dropped;
            if (res.stopped_early)
                rec.note = "stopped after " + std::to_string(res.performed) + " permutations; p is a lower bound";
        } catch (const SingularCovarianceError&) {
            rec.p_raw = 1.0;
            rec.note = "singular correlation";
            singular[i] = 1;
        }
    });
    // BH within each order family of this layer
    std::map<int, std::vector<std::size_t>> families;
    for (std::size_t i = 0; i < report.records.size(); ++i) families[report.records[i].multiplet.order()].push_back(i);
    for (const auto& [order, idx] : families) {
        std::vector<double> p;
        for (auto i : idx) p.push_back(report.records[i].p_raw);
        const auto adj = bh_adjust(p);
        for (std::size_t t = 0; t < idx.size(); ++t) {
            auto& rec = report.records[idx[t]];
            rec.p_adj = adj[t];
            if (singular[idx[t]] || rec.p_adj > cfg.alpha_fdr) {
                rec.reason = FailReason::not_significant;
            } else if (std::abs(rec.omega) < cfg.effect_floor) {
                rec.reason = FailReason::below_floor;
            } else {
                rec.passed = true;
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// stage 2: row bootstrap, BCa sign stability

inline StageReport stage2_bootstrap(const CopulaScores& scores, const std::vector<StageRecord>& survivors,
                                    const ValidationConfig& cfg, std::size_t jobs = 1) {
    cfg.check();
    StageReport report;
    report.records.resize(survivors.size());
    parallel_for(survivors.size(), jobs, [&](std::size_t i) {
        auto& rec = report.records[i];
        rec = survivors[i];
        rec.stage = Stage::bootstrap;
        rec.passed = false;
        rec.reason = FailReason::none;
        rec.note.clear();
        const auto bs = bootstrap_omega(scores, rec.multiplet, cfg, candidate_seed(cfg, "stage2", scores.layer_id, rec.multiplet));
        rec.dropped = bs.dropped;
        rec.ci_low = bs.ci.lo;
        rec.ci_high = bs.ci.hi;
        if (bs.unstable) {
            rec.reason = FailReason::unstable_point;
            rec.note = "too many singular resamples";
        } else if (bs.ci.contains(0.0)) {
            rec.reason = FailReason::ci_spans_zero;
        } else if (!bs.stability.contains(rec.omega)) {
            rec.reason = FailReason::unstable_point;
            rec.note = "point estimate outside central bootstrap range";
        } else if (!bs.ci.contains(rec.omega)) {
            rec.reason = FailReason::unstable_point;
            rec.note = "point estimate outside its BCa interval";
        } else {
            rec.passed = true;
        }
    });
    return report;
}

// ---------------------------------------------------------------------------
// stage 3: hierarchical comparison with (k-1)-sub-multiplets

inline std::vector<Multiplet> sub_multiplets(const Multiplet& m) {
    std::vector<Multiplet> out;
    for (int drop = 0; drop < m.order(); ++drop) {
        ItemSet s;
        for (int j = 0; j < m.order(); ++j)
            if (j != drop) s.push_back(m[j]);
        out.emplace_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline StageReport stage3_hierarchical(const std::vector<StageRecord>& survivors, const CopulaScores& scores,
                                       const ValidationConfig& cfg, std::size_t jobs = 1) {
    cfg.check();
    StageReport report;
    report.records.reserve(survivors.size());
    std::vector<std::vector<Multiplet>> subs_of;
    std::vector<std::size_t> pending;
    for (const auto& in : survivors) {
        StageRecord rec = in;
        rec.stage = Stage::hierarchical;
        rec.passed = true;
        rec.reason = FailReason::none;
        rec.note.clear();
        subs_of.push_back(rec.multiplet.order() >= 4 ? sub_multiplets(rec.multiplet) : std::vector<Multiplet>{});
        if (!subs_of.back().empty()) pending.push_back(report.records.size());
        report.records.push_back(std::move(rec));
    }

    // Sub-multiplets are checked in sorted order and a candidate stops at its
    // first overlap, so round r only bootstraps the r-th sub of candidates
    // still undecided. Seeds depend on the sub's label alone.
    std::map<Multiplet, BootstrapSummary> sub_ci;
    for (std::size_t round = 0; !pending.empty(); ++round) {
        std::set<Multiplet> needed;
        for (auto i : pending)
            if (!sub_ci.count(subs_of[i][round])) needed.insert(subs_of[i][round]);
        const std::vector<Multiplet> todo(needed.begin(), needed.end());
        std::vector<BootstrapSummary> fresh(todo.size());
        parallel_for(todo.size(), jobs, [&](std::size_t t) {
            fresh[t] = bootstrap_omega(scores, todo[t], cfg, candidate_seed(cfg, "stage3", scores.layer_id, todo[t]));
        });
        for (std::size_t t = 0; t < todo.size(); ++t) sub_ci.emplace(todo[t], std::move(fresh[t]));

        std::vector<std::size_t> still;
        for (auto i : pending) {
            auto& rec = report.records[i];
            const auto& s = subs_of[i][round];
            const auto& sub = sub_ci.at(s);
            if (sub.unstable || Interval{rec.ci_low, rec.ci_high}.overlaps(sub.ci)) {
                rec.passed = false;
                rec.reason = FailReason::subsumed_by_suborder;
                rec.note = sub.unstable ? "sub-multiplet " + s.label() + " singular" : "overlaps " + s.label();
            } else if (round + 1 < subs_of[i].size()) {
                still.push_back(i);
            }
        }
        pending = std::move(still);
    }
    return report;
}

// ---------------------------------------------------------------------------

struct ValidationResult {
    std::vector<ValidatedHyperedge> redundancy;
    std::vector<ValidatedHyperedge> synergy;
    StageReport report; // stage 1 records, then stage 2, then stage 3
};

inline ValidationResult validate_all(const CopulaScores& scores, const CandidateSet& cands, const ValidationConfig& cfg,
                                     std::size_t jobs = 1) {
    ValidationResult out;
    if (cands.empty()) return out;
    const auto s1 = stage1_permutation(scores, cands, cfg, jobs);
    const auto s2 = stage2_bootstrap(scores, s1.survivors(), cfg, jobs);
    const auto s3 = stage3_hierarchical(s2.survivors(), scores, cfg, jobs);
    for (const auto* stage : {&s1, &s2, &s3})
        out.report.records.insert(out.report.records.end(), stage->records.begin(), stage->records.end());
    for (const auto& r : s3.survivors()) {
        ValidatedHyperedge e{r.multiplet, r.omega, r.ci_low, r.ci_high, r.p_adj, interaction_of(r.omega), r.provenance};
        e.check(cfg.effect_floor);
        (r.omega > 0 ? out.redundancy : out.synergy).push_back(std::move(e));
    }
    return out;
}

} // namespace homux

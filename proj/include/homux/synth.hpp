#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "homux/data_model.hpp"
#include "homux/error.hpp"
#include "homux/info.hpp"
#include "homux/rng.hpp"

namespace homux {

/// Single-factor triplet: X_i = a_i F + e_i, Var(e_i) = 1 - a_i^2, Cov(e_1, e_2) = e_cov.
struct TripletSpec {
    std::array<double, 3> loadings{0.6, 0.6, 0.6};
    double e_cov = 0.0;

    std::string describe() const {
        return "triplet(a=" + std::to_string(loadings[0]) + "," + std::to_string(loadings[1]) + "," +
               std::to_string(loadings[2]) + "; e_cov=" + std::to_string(e_cov) + ")";
    }
};

inline Eigen::Matrix3d triplet_covariance(const TripletSpec& spec) {
    const auto& a = spec.loadings;
    for (double v : a)
        if (!(std::abs(v) <= 1.0)) throw SpecificationError(spec.describe() + ": loadings must lie in [-1, 1]");
    Eigen::Matrix3d c = Eigen::Matrix3d::Identity();
    c(0, 1) = c(1, 0) = a[0] * a[1] + spec.e_cov;
    c(0, 2) = c(2, 0) = a[0] * a[2];
    c(1, 2) = c(2, 1) = a[1] * a[2];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw SpecificationError(spec.describe() + ": implied correlation matrix is not positive definite");
    return c;
}

inline double analytic_omega(const TripletSpec& spec) {
    return omega_from_correlation(triplet_covariance(spec));
}

enum class Regime { near_zero, redundant, synergistic, mixed };

/// Residual covariances defining the three pure regimes.
inline constexpr double kNearZeroECov = -0.15;
inline constexpr double kRedundantECov = 0.22;
inline constexpr double kSynergisticECov = -0.39;

inline std::string_view to_string(Regime r) {
    switch (r) {
    case Regime::near_zero: return "near_zero";
    case Regime::redundant: return "redundant";
    case Regime::synergistic: return "synergistic";
    case Regime::mixed: return "mixed";
    }
    return "?";
}

inline Regime regime_from_string(std::string_view s) {
    if (s == "near_zero") return Regime::near_zero;
    if (s == "redundant") return Regime::redundant;
    if (s == "synergistic") return Regime::synergistic;
    if (s == "mixed") return Regime::mixed;
    throw ConfigError("unknown regime '" + std::string(s) + "'");
}

struct RegimeCalibration {
    std::array<double, 3> loadings{};
    double omega_near_zero = 0.0;
    double omega_redundant = 0.0;
    double omega_synergistic = 0.0;
    double margin = -std::numeric_limits<double>::infinity(); // min distance to the floor constraints
    bool feasible = false;
};

namespace detail {

/// Residual covariance must itself be a valid covariance of (e_1, e_2).
inline bool residuals_valid(const std::array<double, 3>& a, double e_cov) {
    return std::abs(e_cov) <= std::sqrt((1.0 - a[0] * a[0]) * (1.0 - a[1] * a[1]));
}

inline std::optional<double> min_eigenvalue(const TripletSpec& spec) {
    try {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(triplet_covariance(spec), Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    } catch (const SpecificationError&) {
        return std::nullopt;
    }
}

} // namespace detail

/// Analytic Omega of the three regimes for the given loadings.
inline RegimeCalibration evaluate_regimes(const std::array<double, 3>& loadings, double floor) {
    RegimeCalibration c;
    c.loadings = loadings;
    for (double e : {kNearZeroECov, kRedundantECov, kSynergisticECov})
        if (!detail::residuals_valid(loadings, e) || !detail::min_eigenvalue({loadings, e})) return c;
    c.omega_near_zero = analytic_omega({loadings, kNearZeroECov});
    c.omega_redundant = analytic_omega({loadings, kRedundantECov});
    c.omega_synergistic = analytic_omega({loadings, kSynergisticECov});
    c.margin = std::min({floor - std::abs(c.omega_near_zero), c.omega_redundant - floor, -c.omega_synergistic - floor});
    c.feasible = c.margin > 0;
    return c;
}

/// Grid search over loadings (a, a, b) for the largest margin such that the
/// regimes give |Omega| < floor, Omega > floor and Omega < -floor.
inline RegimeCalibration calibrate_loadings(double floor, double step = 0.005, double max_loading = 0.95,
                                            double min_eigenvalue = 0.02) {
    RegimeCalibration best;
    const int steps = static_cast<int>(std::floor(max_loading / step + 1e-9));
    for (int i = 1; i <= steps; ++i) {
        for (int j = 1; j <= steps; ++j) {
            const std::array<double, 3> a{i * step, i * step, j * step};
            bool ok = true;
            for (double e : {kNearZeroECov, kRedundantECov, kSynergisticECov}) {
                const auto ev = detail::min_eigenvalue({a, e});
                ok = ok && ev && *ev >= min_eigenvalue;
            }
            if (!ok) continue;
            auto c = evaluate_regimes(a, floor);
            if (c.margin > best.margin) best = c;
        }
    }
    return best;
}

struct BlockSystemSpec {
    std::vector<TripletSpec> triplets;
    int n_samples = 5000;
    std::uint64_t seed = 1;
};

/// Nine triplets of one regime (mixed cycles near-zero, redundant, synergistic).
inline BlockSystemSpec regime_system(Regime regime, const std::array<double, 3>& loadings, int n_samples,
                                     std::uint64_t seed, int n_triplets = 9) {
    BlockSystemSpec spec{{}, n_samples, seed};
    static constexpr std::array<double, 3> cycle{kNearZeroECov, kRedundantECov, kSynergisticECov};
    for (int t = 0; t < n_triplets; ++t) {
        double e = 0.0;
        switch (regime) {
        case Regime::near_zero: e = kNearZeroECov; break;
        case Regime::redundant: e = kRedundantECov; break;
        case Regime::synergistic: e = kSynergisticECov; break;
        case Regime::mixed: e = cycle[static_cast<std::size_t>(t) % 3]; break;
        }
        spec.triplets.push_back({loadings, e});
    }
    return spec;
}

struct PlantedTriplet {
    std::array<int, 3> items{};
    TripletSpec spec;
    double omega = 0.0;
};

struct SyntheticSystem {
    Eigen::MatrixXd data;     // n x 3T, standardized columns
    std::vector<int> block_of; // column -> triplet index
    std::vector<PlantedTriplet> planted;
};

/// Draws from the block-diagonal Gaussian and standardizes every column
/// (zero mean, unit sample variance with n - 1).
inline SyntheticSystem sample_system(const BlockSystemSpec& spec) {
    if (spec.n_samples < 3) throw SpecificationError("synthetic systems need at least 3 samples");
    const int t = static_cast<int>(spec.triplets.size());
    SyntheticSystem out;
    out.data.resize(spec.n_samples, 3 * t);
    Engine rng = make_engine(derive_seed(spec.seed, "synth"));
    std::normal_distribution<double> normal;
    std::vector<Eigen::Matrix3d> chol;
    for (int b = 0; b < t; ++b) {
        const Eigen::Matrix3d c = triplet_covariance(spec.triplets[b]);
        chol.push_back(Eigen::LLT<Eigen::Matrix3d>(c).matrixL());
        out.planted.push_back({{3 * b, 3 * b + 1, 3 * b + 2}, spec.triplets[b], omega_from_correlation(c)});
        for (int j = 0; j < 3; ++j) out.block_of.push_back(b);
    }
    for (int r = 0; r < spec.n_samples; ++r) {
        for (int b = 0; b < t; ++b) {
            Eigen::Vector3d z;
            for (int j = 0; j < 3; ++j) z[j] = normal(rng);
            out.data.row(r).segment<3>(3 * b) = (chol[b] * z).transpose();
        }
    }
    for (Eigen::Index c = 0; c < out.data.cols(); ++c) {
        auto col = out.data.col(c);
        col.array() -= col.mean();
        col /= std::sqrt(col.squaredNorm() / (spec.n_samples - 1.0));
    }
    return out;
}

/// Quantile-bin discretization of every column into `levels` ordered codes 0..levels-1.
inline Eigen::MatrixXd likert_discretize(const Eigen::MatrixXd& data, int levels) {
    if (levels < 2) throw SpecificationError("Likert discretization needs at least 2 levels");
    Eigen::MatrixXd out(data.rows(), data.cols());
    const auto n = static_cast<std::size_t>(data.rows());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return data(a, c) < data(b, c); });
        for (std::size_t r = 0; r < n; ++r)
            out(static_cast<Eigen::Index>(order[r]), c) = static_cast<double>(r * static_cast<std::size_t>(levels) / n);
    }
    return out;
}

inline std::vector<std::string> synthetic_item_ids(int n_items) {
    std::vector<std::string> ids;
    for (int i = 0; i < n_items; ++i) ids.push_back("V" + std::to_string(i + 1));
    return ids;
}

inline ResponseMatrix to_response_matrix(const SyntheticSystem& sys, const std::string& layer, int likert_levels = 0) {
    const auto ids = synthetic_item_ids(static_cast<int>(sys.data.cols()));
    if (likert_levels > 0)
        return ResponseMatrix(likert_discretize(sys.data, likert_levels), ids, layer, LikertRange{0, likert_levels - 1});
    return ResponseMatrix(sys.data, ids, layer, std::nullopt);
}

/// One scale per planted block ("B1".."BT").
inline ScaleMap block_scale_map(const SyntheticSystem& sys) {
    std::map<std::string, std::set<int>> scales;
    for (std::size_t b = 0; b < sys.planted.size(); ++b)
        scales["B" + std::to_string(b + 1)] = std::set<int>(sys.planted[b].items.begin(), sys.planted[b].items.end());
    return ScaleMap(static_cast<int>(sys.data.cols()), std::move(scales), {});
}

} // namespace homux

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "homux/data_model.hpp"
#include "homux/error.hpp"
#include "homux/rng.hpp"

namespace homux {

// Gaussian-copula estimator of entropies and O-information. All values in nats.

inline constexpr double kRidge = 1e-10;

inline double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, p);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Normal scores of each item column, centered to zero sample mean.
struct CopulaScores {
    Eigen::MatrixXd scores;
    std::vector<std::string> item_ids;
    std::string layer_id;

    int respondents() const noexcept { return static_cast<int>(scores.rows()); }
    int items() const noexcept { return static_cast<int>(scores.cols()); }
};

/// Average ranks (1-based) of x; with an engine, ties are broken uniformly at random instead.
inline std::vector<double> ranks(const Eigen::Ref<const Eigen::VectorXd>& x, Engine* tie_breaker = nullptr) {
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (tie_breaker) std::shuffle(order.begin(), order.end(), *tie_breaker);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    if (tie_breaker) {
        for (std::size_t i = 0; i < n; ++i) r[order[i]] = static_cast<double>(i + 1);
        return r;
    }
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline CopulaScores copula_transform(const ResponseMatrix& data, std::optional<std::uint64_t> tie_jitter_seed = {}) {
    const int n = data.respondents();
    if (n < 3) throw SchemaError("copula transform needs at least 3 respondents");
    CopulaScores out{Eigen::MatrixXd(n, data.items()), data.item_ids(), data.layer_id()};
    for (int c = 0; c < data.items(); ++c) {
        auto column = data.values().col(c);
        if (column.maxCoeff() == column.minCoeff())
            throw DegenerateVariableError("item '" + data.item_ids()[c] + "' is constant");
        std::optional<Engine> engine;
        if (tie_jitter_seed) engine.emplace(derive_seed(*tie_jitter_seed, static_cast<std::uint64_t>(c)));
        const auto r = ranks(column, engine ? &*engine : nullptr);
        for (int i = 0; i < n; ++i) out.scores(i, c) = normal_quantile(r[i] / (n + 1.0));
        out.scores.col(c).array() -= out.scores.col(c).mean();
    }
    return out;
}

namespace detail {

// smallest eigenvalue > kRidge  <=>  m - kRidge I is positive definite
inline bool min_eigenvalue_above_ridge(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() -= kRidge;
    return Eigen::LLT<Eigen::MatrixXd>(shifted).info() == Eigen::Success;
}

} // namespace detail

/// log det of a symmetric matrix after a tiny diagonal ridge; throws if not positive definite.
/// ln det of (m + eps I) / (1 + eps). Rescaling keeps a unit diagonal unit, so the
/// ridge cannot leak into marginal entropies. A smallest eigenvalue of m at or
/// below ridge scale is treated as singular: the determinant would be the ridge's.
inline double log_det_spd(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    Eigen::MatrixXd a = m;
    a.diagonal().array() += kRidge;
    a /= 1.0 + kRidge;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success || !detail::min_eigenvalue_above_ridge(m))
        throw SingularCovarianceError("covariance of order " + std::to_string(m.rows()) + " is not positive definite");
    const auto& l = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

inline double gaussian_entropy(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
    const double k = static_cast<double>(cov.rows());
    return 0.5 * (k * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_spd(cov));
}

namespace detail {

inline Eigen::MatrixXd drop_index(const Eigen::Ref<const Eigen::MatrixXd>& m, Eigen::Index skip) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd out(n - 1, n - 1);
    for (Eigen::Index i = 0, r = 0; i < n; ++i) {
        if (i == skip) continue;
        for (Eigen::Index j = 0, c = 0; j < n; ++j) {
            if (j == skip) continue;
            out(r, c++) = m(i, j);
        }
        ++r;
    }
    return out;
}

} // namespace detail

/// O-information of a Gaussian with the given correlation matrix, log-determinant form:
/// 0.5 * [ (n-2) ln det S - sum_i ln det S_{-i} ].
/// With ln det S_{-i} = ln det S + ln (S^-1)_ii this needs one factorization:
/// -ln det S - 0.5 * sum_i ln (S^-1)_ii (ridged as in log_det_spd).
inline double omega_from_correlation(const Eigen::Ref<const Eigen::MatrixXd>& corr) {
    const Eigen::Index n = corr.rows();
    if (n < 3) throw StructuralError("O-information needs at least 3 variables");
    Eigen::MatrixXd a = corr;
    a.diagonal().array() += kRidge;
    a /= 1.0 + kRidge;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success || !detail::min_eigenvalue_above_ridge(corr))
        throw SingularCovarianceError("covariance of order " + std::to_string(n) + " is not positive definite");
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixLLT()(i, i));
    log_det *= 2.0;
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    double acc = -log_det;
    for (Eigen::Index i = 0; i < n; ++i) acc -= 0.5 * std::log(inv(i, i));
    return acc;
}

/// Same quantity via entropies: (n-2) H(X) + sum_i [H(X_i) - H(X_{-i})].
inline double omega_entropy_form(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
    const Eigen::Index n = cov.rows();
    if (n < 3) throw StructuralError("O-information needs at least 3 variables");
    double acc = static_cast<double>(n - 2) * gaussian_entropy(cov);
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += gaussian_entropy(cov.block(i, i, 1, 1));
        acc -= gaussian_entropy(detail::drop_index(cov, i));
    }
    return acc;
}

/// Pearson correlation of the columns of x (centered internally).
inline Eigen::MatrixXd column_correlation(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd g = centered.transpose() * centered;
    Eigen::VectorXd inv = g.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd r = inv.asDiagonal() * g * inv.asDiagonal();
    r.triangularView<Eigen::StrictlyLower>() = r.transpose();
    r.diagonal().setOnes();
    return r;
}

/// Correlation of columns already centered: Gram matrix scaled to unit diagonal.
inline Eigen::MatrixXd centered_correlation(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    Eigen::MatrixXd g = x.transpose() * x;
    Eigen::VectorXd inv = g.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd r = inv.asDiagonal() * g * inv.asDiagonal();
    r.triangularView<Eigen::StrictlyLower>() = r.transpose();
    r.diagonal().setOnes();
    return r;
}

inline Eigen::MatrixXd gather_columns(const CopulaScores& s, const Multiplet& m) {
    m.check_bounds(s.items());
    Eigen::MatrixXd out(s.respondents(), m.order());
    for (int j = 0; j < m.order(); ++j) out.col(j) = s.scores.col(m[j]);
    return out;
}

struct OmegaEstimate {
    double omega = 0.0;
    int order = 0;
};

inline OmegaEstimate o_information(const CopulaScores& scores, const Multiplet& m) {
    return {omega_from_correlation(centered_correlation(gather_columns(scores, m))), m.order()};
}

} // namespace homux

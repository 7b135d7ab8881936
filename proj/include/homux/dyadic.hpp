#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "homux/bvn.hpp"
#include "homux/data_model.hpp"
#include "homux/error.hpp"
#include "homux/info.hpp"
#include "homux/parallel.hpp"

namespace homux {

enum class CorrelationMethod { nonparanormal, polychoric };

inline std::string_view to_string(CorrelationMethod m) {
    return m == CorrelationMethod::nonparanormal ? "nonparanormal" : "polychoric";
}

inline CorrelationMethod correlation_method_from_string(std::string_view s) {
    if (s == "nonparanormal") return CorrelationMethod::nonparanormal;
    if (s == "polychoric") return CorrelationMethod::polychoric;
    throw ConfigError("unknown correlation method '" + std::string(s) + "'");
}

struct CorrelationEstimate {
    Eigen::MatrixXd matrix;
    CorrelationMethod method = CorrelationMethod::nonparanormal;
};

struct DyadicNetwork {
    Eigen::MatrixXd partial_corr; // zero diagonal
    Eigen::MatrixXd precision;
    double lambda_selected = 0.0;
    double ebic_gamma = 0.5;
    CorrelationMethod method = CorrelationMethod::nonparanormal;
    std::vector<std::string> warnings;

    int n_nodes() const noexcept { return static_cast<int>(partial_corr.rows()); }
    bool has_edge(int i, int j) const { return i != j && partial_corr(i, j) != 0.0; }
    int edge_count() const {
        int e = 0;
        for (int i = 0; i < n_nodes(); ++i)
            for (int j = i + 1; j < n_nodes(); ++j) e += has_edge(i, j);
        return e;
    }
};

// ---------------------------------------------------------------------------
// Correlation estimators

/// Normal-scores correlation. With `winsorize`, ranks are mapped through the
/// truncated empirical CDF of Liu, Lafferty & Wasserman before the quantile step.
inline CorrelationEstimate nonparanormal_corr(const ResponseMatrix& data, bool winsorize = false) {
    Eigen::MatrixXd scores;
    if (!winsorize) {
        scores = copula_transform(data).scores;
    } else {
        const int n = data.respondents();
        if (n < 3) throw SchemaError("nonparanormal correlation needs at least 3 respondents");
        const double delta = 1.0 / (4.0 * std::pow(n, 0.25) * std::sqrt(std::numbers::pi * std::log(n)));
        scores.resize(n, data.items());
        for (int c = 0; c < data.items(); ++c) {
            auto column = data.values().col(c);
            if (column.maxCoeff() == column.minCoeff())
                throw DegenerateVariableError("item '" + data.item_ids()[c] + "' is constant");
            const auto r = ranks(column);
            for (int i = 0; i < n; ++i)
                scores(i, c) = normal_quantile(std::clamp(r[i] / n, delta, 1.0 - delta));
        }
    }
    CorrelationEstimate out{column_correlation(scores), CorrelationMethod::nonparanormal};
    out.matrix = out.matrix.cwiseMax(-1.0).cwiseMin(1.0);
    out.matrix.diagonal().setOnes();
    return out;
}

namespace detail {

/// Observed categories of an ordinal column mapped to 0..C-1 (unobserved codes merge away).
struct OrdinalColumn {
    std::vector<int> codes;
    std::vector<double> thresholds; // C+1 entries, -inf .. +inf
    int categories = 0;
};

inline OrdinalColumn ordinalize(const Eigen::Ref<const Eigen::VectorXd>& x, const std::string& item) {
    std::vector<double> levels(x.data(), x.data() + x.size());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() < 2) throw DegenerateVariableError("item '" + item + "' has fewer than 2 observed categories");
    OrdinalColumn out;
    out.categories = static_cast<int>(levels.size());
    out.codes.resize(static_cast<std::size_t>(x.size()));
    std::vector<double> counts(levels.size(), 0.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto c = std::lower_bound(levels.begin(), levels.end(), x[i]) - levels.begin();
        out.codes[static_cast<std::size_t>(i)] = static_cast<int>(c);
        counts[static_cast<std::size_t>(c)] += 1.0;
    }
    const double inf = std::numeric_limits<double>::infinity();
    out.thresholds.assign(levels.size() + 1, 0.0);
    out.thresholds.front() = -inf;
    out.thresholds.back() = inf;
    double cum = 0.0;
    for (std::size_t c = 0; c + 1 < levels.size(); ++c) {
        cum += counts[c];
        out.thresholds[c + 1] = normal_quantile(cum / static_cast<double>(x.size()));
    }
    return out;
}

inline double polychoric_pair(const OrdinalColumn& a, const OrdinalColumn& b, const std::string& pair_name) {
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(a.categories, b.categories);
    for (std::size_t i = 0; i < a.codes.size(); ++i) table(a.codes[i], b.codes[i]) += 1.0;
    auto negloglik = [&](double rho) {
        double s = 0.0;
        for (int i = 0; i < a.categories; ++i) {
            for (int j = 0; j < b.categories; ++j) {
                if (table(i, j) == 0.0) continue;
                const double p = bvn_rectangle(a.thresholds[i], a.thresholds[i + 1], b.thresholds[j],
                                               b.thresholds[j + 1], rho);
                s -= table(i, j) * std::log(std::max(p, 1e-300));
            }
        }
        return s;
    };
    constexpr double edge = 1e-4;
    boost::uintmax_t max_iter = 200;
    const auto [rho, value] =
        boost::math::tools::brent_find_minima(negloglik, -1.0 + edge, 1.0 - edge, 40, max_iter);
    if (!std::isfinite(rho) || !std::isfinite(value) || max_iter >= 200)
        throw EstimationError("polychoric estimation did not converge for pair " + pair_name);
    return rho;
}

} // namespace detail

/// Two-step polychoric correlation matrix (thresholds from marginals, rho by
/// bounded 1-D maximum likelihood per pair).
inline CorrelationEstimate polychoric_corr(const ResponseMatrix& data, std::size_t jobs = 1) {
    if (!data.likert())
        throw DegenerateVariableError("polychoric correlation requires ordinal (Likert) data in layer '" +
                                      data.layer_id() + "'");
    const int p = data.items();
    std::vector<detail::OrdinalColumn> cols;
    cols.reserve(static_cast<std::size_t>(p));
    for (int c = 0; c < p; ++c) cols.push_back(detail::ordinalize(data.values().col(c), data.item_ids()[c]));

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
    std::vector<double> rho(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t t) {
        const auto [i, j] = pairs[t];
        rho[t] = detail::polychoric_pair(cols[i], cols[j], data.item_ids()[i] + "~" + data.item_ids()[j]);
    });
    CorrelationEstimate out{Eigen::MatrixXd::Identity(p, p), CorrelationMethod::polychoric};
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        out.matrix(pairs[t].first, pairs[t].second) = rho[t];
        out.matrix(pairs[t].second, pairs[t].first) = rho[t];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graphical lasso with EBIC selection

struct GlassoFit {
    Eigen::MatrixXd precision;
    Eigen::MatrixXd covariance; // W, the dual variable
    double lambda = 0.0;
    double duality_gap = std::numeric_limits<double>::infinity();
    int sweeps = 0;
    bool converged = false;
};

struct GlassoOptions {
    double gap_tolerance = 1e-6;
    double change_tolerance = 1e-10;
    int max_sweeps = 5000;
};

namespace detail {

inline double soft_threshold(double x, double t) {
    return x > t ? x - t : (x < -t ? x + t : 0.0);
}

inline double off_diagonal_l1(const Eigen::MatrixXd& m) {
    return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

/// Primal objective minus dual objective for the off-diagonal-penalized problem.
inline double glasso_duality_gap(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, const Eigen::MatrixXd& w,
                                 double lambda) {
    Eigen::LLT<Eigen::MatrixXd> lt(theta), lw(w);
    if (lt.info() != Eigen::Success || lw.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& l) {
        return 2.0 * l.matrixLLT().diagonal().array().log().sum();
    };
    const double primal = -logdet(lt) + (s.cwiseProduct(theta)).sum() + lambda * off_diagonal_l1(theta);
    const double dual = logdet(lw) + static_cast<double>(s.rows());
    return primal - dual;
}

} // namespace detail

/// Friedman-Hastie-Tibshirani block coordinate descent; the diagonal is not penalized.
/// `warm_w` seeds the dual variable; `beta_io`, when given, seeds and receives the
/// per-column regression coefficients.
inline GlassoFit graphical_lasso(const Eigen::MatrixXd& s, double lambda, const GlassoOptions& opt = {},
                                 const Eigen::MatrixXd* warm_w = nullptr, Eigen::MatrixXd* beta_io = nullptr) {
    const Eigen::Index p = s.rows();
    GlassoFit fit;
    fit.lambda = lambda;
    Eigen::MatrixXd w = warm_w ? *warm_w : s;
    w.diagonal() = s.diagonal();
    Eigen::MatrixXd beta = beta_io ? *beta_io : Eigen::MatrixXd::Zero(p, p); // column j: coefficients of j
    Eigen::VectorXd wb(p);

    auto build_theta = [&] {
        Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            double dot = 0.0;
            for (Eigen::Index i = 0; i < p; ++i)
                if (i != j) dot += w(i, j) * beta(i, j);
            theta(j, j) = 1.0 / (w(j, j) - dot);
        }
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = i + 1; j < p; ++j) {
                const double a = -beta(i, j) * theta(j, j);
                const double b = -beta(j, i) * theta(i, i);
                const double v = (a == 0.0 || b == 0.0) ? 0.0 : 0.5 * (a + b);
                theta(i, j) = theta(j, i) = v;
            }
        }
        return theta;
    };

    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            // inner lasso: min 0.5 b'W11 b - b's12 + lambda |b|_1, coordinates i != j
            wb.setZero();
            for (Eigen::Index m = 0; m < p; ++m)
                if (m != j && beta(m, j) != 0.0)
                    for (Eigen::Index l = 0; l < p; ++l) wb(l) += w(l, m) * beta(m, j);
            for (int it = 0; it < 10000; ++it) {
                double delta = 0.0;
                for (Eigen::Index l = 0; l < p; ++l) {
                    if (l == j) continue;
                    const double old = beta(l, j);
                    const double rl = s(l, j) - wb(l) + w(l, l) * old;
                    const double nb = detail::soft_threshold(rl, lambda) / w(l, l);
                    if (nb != old) {
                        const double d = nb - old;
                        beta(l, j) = nb;
                        for (Eigen::Index m = 0; m < p; ++m) wb(m) += w(m, l) * d;
                        delta = std::max(delta, std::abs(d));
                    }
                }
                if (delta < 1e-13) break;
            }
            for (Eigen::Index l = 0; l < p; ++l) {
                if (l == j) continue;
                max_change = std::max(max_change, std::abs(wb(l) - w(l, j)));
                w(l, j) = w(j, l) = wb(l);
            }
        }
        fit.sweeps = sweep;
        if (max_change <= opt.change_tolerance || sweep == opt.max_sweeps) {
            Eigen::MatrixXd theta = build_theta();
            fit.duality_gap = detail::glasso_duality_gap(s, theta, w, lambda);
            if (fit.duality_gap <= opt.gap_tolerance) {
                fit.converged = true;
                fit.precision = std::move(theta);
                break;
            }
            if (sweep == opt.max_sweeps) {
                fit.precision = std::move(theta);
                break;
            }
        }
    }
    fit.covariance = std::move(w);
    if (beta_io) *beta_io = std::move(beta);
    return fit;
}

inline Eigen::MatrixXd partial_correlations(const Eigen::MatrixXd& theta) {
    const Eigen::Index p = theta.rows();
    Eigen::MatrixXd pc = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (i != j && theta(i, j) != 0.0) pc(i, j) = -theta(i, j) / std::sqrt(theta(i, i) * theta(j, j));
    return pc;
}

inline int upper_edge_count(const Eigen::MatrixXd& theta) {
    int e = 0;
    for (Eigen::Index i = 0; i < theta.rows(); ++i)
        for (Eigen::Index j = i + 1; j < theta.cols(); ++j) e += theta(i, j) != 0.0;
    return e;
}

/// 100 log-spaced values from max |off-diagonal| down to ratio * max.
inline std::vector<double> default_lambda_grid(const Eigen::MatrixXd& s, int n_lambda = 100, double min_ratio = 0.01) {
    double lmax = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = i + 1; j < s.cols(); ++j) lmax = std::max(lmax, std::abs(s(i, j)));
    if (lmax <= 0.0) return {1.0};
    std::vector<double> grid(static_cast<std::size_t>(n_lambda));
    for (int t = 0; t < n_lambda; ++t) {
        const double frac = n_lambda == 1 ? 0.0 : static_cast<double>(t) / (n_lambda - 1);
        grid[static_cast<std::size_t>(t)] = lmax * std::pow(min_ratio, frac);
    }
    return grid;
}

struct EbicPoint {
    double lambda = 0.0;
    double ebic = std::numeric_limits<double>::infinity();
    int edges = 0;
    double duality_gap = 0.0;
    bool converged = false;
};

struct EbicPath {
    std::vector<EbicPoint> points;
    std::size_t selected = 0;
};

/// Makes a correlation matrix positive definite: unchanged when it already is,
/// otherwise shifts the spectrum by a ridge and rescales to unit diagonal.
inline Eigen::MatrixXd regularize_correlation(const Eigen::MatrixXd& s, std::vector<std::string>* warnings = nullptr) {
    Eigen::MatrixXd a = s;
    a.diagonal().array() += kRidge;
    if (Eigen::LLT<Eigen::MatrixXd>(a).info() == Eigen::Success) return s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const double ridge = -es.eigenvalues().minCoeff() + 1e-3;
    Eigen::MatrixXd out = (s + ridge * Eigen::MatrixXd::Identity(s.rows(), s.cols())) / (1.0 + ridge);
    out.diagonal().setOnes();
    if (warnings)
        warnings->push_back("correlation matrix was not positive definite; applied ridge " + std::to_string(ridge));
    return out;
}

/// Fits every lambda of a strictly decreasing grid (warm-started along the
/// path) and returns the EBIC-minimizing network.
inline DyadicNetwork ebic_glasso(const CorrelationEstimate& corr, int n, double gamma,
                                 std::vector<double> lambda_grid = {}, EbicPath* path_out = nullptr,
                                 const GlassoOptions& opt = {}) {
    if (gamma < 0) throw ConfigError("EBIC gamma must be >= 0");
    if (n < 2) throw ConfigError("EBIC needs a sample size >= 2");
    DyadicNetwork net;
    net.method = corr.method;
    net.ebic_gamma = gamma;
    const Eigen::MatrixXd s = regularize_correlation(corr.matrix, &net.warnings);
    if (lambda_grid.empty()) lambda_grid = default_lambda_grid(s);
    for (std::size_t t = 0; t < lambda_grid.size(); ++t) {
        if (!(lambda_grid[t] > 0)) throw ConfigError("lambda grid values must be positive");
        if (t && !(lambda_grid[t] < lambda_grid[t - 1])) throw ConfigError("lambda grid must be strictly decreasing");
    }
    const auto p = static_cast<double>(s.rows());
    EbicPath path;
    std::optional<GlassoFit> best;
    std::string diagnostics;
    Eigen::MatrixXd warm_w = s;
    Eigen::MatrixXd warm_beta = Eigen::MatrixXd::Zero(s.rows(), s.cols());
    for (double lambda : lambda_grid) {
        GlassoFit fit = graphical_lasso(s, lambda, opt, &warm_w, &warm_beta);
        EbicPoint pt{lambda, std::numeric_limits<double>::infinity(), 0, fit.duality_gap, fit.converged};
        if (fit.converged) {
            warm_w = fit.covariance;
            const int e = upper_edge_count(fit.precision);
            Eigen::LLT<Eigen::MatrixXd> llt(fit.precision);
            const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
            const double loglik = 0.5 * n * (logdet - s.cwiseProduct(fit.precision).sum());
            pt.edges = e;
            pt.ebic = -2.0 * loglik + e * std::log(static_cast<double>(n)) + 4.0 * e * gamma * std::log(p);
            if (!best || pt.ebic < path.points[path.selected].ebic) {
                path.selected = path.points.size();
                best = std::move(fit);
            }
        } else {
            warm_beta.setZero();
            diagnostics += " lambda=" + std::to_string(lambda) + " gap=" + std::to_string(fit.duality_gap) + ";";
        }
        path.points.push_back(pt);
    }
    if (!best) throw EstimationError("graphical lasso did not converge for any lambda:" + diagnostics);
    net.lambda_selected = best->lambda;
    net.precision = best->precision;
    net.partial_corr = partial_correlations(best->precision);
    if (path_out) *path_out = std::move(path);
    return net;
}

/// Connected components of the network skeleton (component id per node).
inline std::vector<int> connected_components(const DyadicNetwork& net) {
    const int p = net.n_nodes();
    std::vector<int> comp(static_cast<std::size_t>(p), -1);
    int next = 0;
    for (int s = 0; s < p; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> stack{s};
        comp[s] = next;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < p; ++v)
                if (comp[v] < 0 && net.has_edge(u, v)) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return comp;
}

/// Adds a warning when the selected network is disconnected.
inline void note_connectivity(DyadicNetwork& net) {
    const auto comp = connected_components(net);
    const int n_comp = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
    if (n_comp > 1)
        net.warnings.push_back("selected " + std::string(to_string(net.method)) + " network has " +
                               std::to_string(n_comp) + " connected components; candidates are drawn per component");
}

} // namespace homux

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homux/data_model.hpp"
#include "homux/info.hpp"

namespace homux::testing {

inline Eigen::MatrixXd gaussian_draws(const Eigen::MatrixXd& corr, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(corr).matrixL();
    Eigen::MatrixXd x(n, corr.rows());
    Eigen::VectorXd v(corr.rows());
    for (int r = 0; r < n; ++r) {
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = z(rng);
        x.row(r) = (l * v).transpose();
    }
    return x;
}

inline std::vector<std::string> labels(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back("x" + std::to_string(i + 1));
    return out;
}

inline CopulaScores gaussian_scores(const Eigen::MatrixXd& corr, int n, std::uint64_t seed,
                                    const std::string& layer = "L") {
    return copula_transform(ResponseMatrix(gaussian_draws(corr, n, seed), labels(corr.rows()), layer, std::nullopt));
}

/// Block-diagonal correlation from the given blocks.
inline Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks) {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        out.block(at, at, b.rows(), b.cols()) = b;
        at += b.rows();
    }
    return out;
}

inline Eigen::MatrixXd equicorrelated(int k, double rho) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(k, k, rho);
    c.diagonal().setOnes();
    return c;
}

} // namespace homux::testing

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homux/dyadic.hpp"
#include "homux/parallel.hpp"
#include "homux/rng.hpp"

namespace homux {

struct AnnealSchedule {
    double t_start = 1.0;
    double t_stop = 0.01;
    double cooling = 0.99; // geometric factor per sweep
};

struct SpinglassOptions {
    double gamma = 1.0; // resolution of the configuration null model
    int spins_max = 25;
    int restarts = 5;
    AnnealSchedule anneal;
    std::uint64_t seed = 1;
};

struct CommunityDecomposition {
    std::vector<int> membership; // item -> community, labels 0..C-1 in order of first appearance
    Eigen::MatrixXd affinity;    // C x C mean |weight| of edges between communities
    double energy = 0.0;
    std::vector<std::string> warnings;

    int n_communities() const noexcept { return static_cast<int>(affinity.rows()); }
};

namespace detail {

/// Signed Potts model with configuration null models for the positive and the
/// negative parts of the weight matrix (Traag & Bruggeman form).
class SignedPotts {
public:
    SignedPotts(const Eigen::MatrixXd& a, double gamma)
        : pos_(a.cwiseMax(0.0)), neg_((-a).cwiseMax(0.0)), gamma_(gamma) {
        pos_.diagonal().setZero();
        neg_.diagonal().setZero();
        kpos_ = pos_.rowwise().sum();
        kneg_ = neg_.rowwise().sum();
        two_mpos_ = kpos_.sum();
        two_mneg_ = kneg_.sum();
    }

    int size() const { return static_cast<int>(pos_.rows()); }

    /// Coupling of node i to spin group s (members other than i); higher is better.
    void couplings(int i, const std::vector<int>& spin, int n_spins, const Eigen::VectorXd& kpos_sum,
                   const Eigen::VectorXd& kneg_sum, std::vector<double>& out) const {
        out.assign(static_cast<std::size_t>(n_spins), 0.0);
        for (int j = 0; j < size(); ++j) {
            if (j == i) continue;
            out[spin[j]] += pos_(i, j) - neg_(i, j);
        }
        for (int s = 0; s < n_spins; ++s) {
            double kp = kpos_sum[s], kn = kneg_sum[s];
            if (spin[i] == s) {
                kp -= kpos_[i];
                kn -= kneg_[i];
            }
            if (two_mpos_ > 0) out[s] -= gamma_ * kpos_[i] * kp / two_mpos_;
            if (two_mneg_ > 0) out[s] += gamma_ * kneg_[i] * kn / two_mneg_;
        }
    }

    double energy(const std::vector<int>& spin) const {
        double e = 0.0;
        for (int i = 0; i < size(); ++i) {
            for (int j = i + 1; j < size(); ++j) {
                if (spin[i] != spin[j]) continue;
                double c = pos_(i, j) - neg_(i, j);
                if (two_mpos_ > 0) c -= gamma_ * kpos_[i] * kpos_[j] / two_mpos_;
                if (two_mneg_ > 0) c += gamma_ * kneg_[i] * kneg_[j] / two_mneg_;
                e -= c;
            }
        }
        return e;
    }

    const Eigen::VectorXd& kpos() const { return kpos_; }
    const Eigen::VectorXd& kneg() const { return kneg_; }

private:
    Eigen::MatrixXd pos_, neg_;
    Eigen::VectorXd kpos_, kneg_;
    double two_mpos_ = 0, two_mneg_ = 0;
    double gamma_;
};

inline std::vector<int> anneal_once(const SignedPotts& model, const SpinglassOptions& opt, std::uint64_t seed) {
    const int n = model.size();
    const int q = std::max(1, std::min(opt.spins_max, n));
    Engine rng = make_engine(seed);
    std::uniform_int_distribution<int> pick(0, q - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> spin(static_cast<std::size_t>(n));
    for (auto& s : spin) s = pick(rng);
    Eigen::VectorXd kpos_sum = Eigen::VectorXd::Zero(q), kneg_sum = Eigen::VectorXd::Zero(q);
    for (int i = 0; i < n; ++i) {
        kpos_sum[spin[i]] += model.kpos()[i];
        kneg_sum[spin[i]] += model.kneg()[i];
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> c, prob(static_cast<std::size_t>(q));

    auto move = [&](int i, int s) {
        kpos_sum[spin[i]] -= model.kpos()[i];
        kneg_sum[spin[i]] -= model.kneg()[i];
        spin[i] = s;
        kpos_sum[s] += model.kpos()[i];
        kneg_sum[s] += model.kneg()[i];
    };

    for (double t = opt.anneal.t_start; t >= opt.anneal.t_stop; t *= opt.anneal.cooling) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int i : order) {
            model.couplings(i, spin, q, kpos_sum, kneg_sum, c);
            const double top = *std::max_element(c.begin(), c.end());
            double z = 0.0;
            for (int s = 0; s < q; ++s) z += prob[s] = std::exp((c[s] - top) / t);
            double u = unit(rng) * z;
            int chosen = q - 1;
            for (int s = 0; s < q; ++s) {
                u -= prob[s];
                if (u <= 0.0) {
                    chosen = s;
                    break;
                }
            }
            if (chosen != spin[i]) move(i, chosen);
        }
    }
    // zero-temperature polish
    for (bool changed = true; changed;) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            model.couplings(i, spin, q, kpos_sum, kneg_sum, c);
            int best = spin[i];
            for (int s = 0; s < q; ++s)
                if (c[s] > c[best] + 1e-12) best = s;
            if (best != spin[i]) {
                move(i, best);
                changed = true;
            }
        }
    }
    return spin;
}

inline std::vector<int> canonical_labels(const std::vector<int>& spin) {
    std::map<int, int> relabel;
    std::vector<int> out(spin.size());
    for (std::size_t i = 0; i < spin.size(); ++i) {
        auto [it, fresh] = relabel.try_emplace(spin[i], static_cast<int>(relabel.size()));
        out[i] = it->second;
    }
    return out;
}

} // namespace detail

/// Mean |weight| over existing edges between (and within) communities.
inline Eigen::MatrixXd community_affinity(const Eigen::MatrixXd& weights, const std::vector<int>& membership) {
    const int c = membership.empty() ? 0 : *std::max_element(membership.begin(), membership.end()) + 1;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(c, c), count = Eigen::MatrixXd::Zero(c, c);
    const auto n = static_cast<Eigen::Index>(membership.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (weights(i, j) == 0.0) continue;
            const int a = membership[i], b = membership[j];
            sum(a, b) += std::abs(weights(i, j));
            count(a, b) += 1.0;
            if (a != b) {
                sum(b, a) += std::abs(weights(i, j));
                count(b, a) += 1.0;
            }
        }
    }
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(c, c);
    for (int a = 0; a < c; ++a)
        for (int b = 0; b < c; ++b)
            if (count(a, b) > 0) w(a, b) = sum(a, b) / count(a, b);
    return w;
}

/// Simulated-annealing minimization of the signed Potts Hamiltonian; the best
/// of `restarts` independent runs is kept (ties go to the lowest restart index).
inline CommunityDecomposition spinglass_communities(const DyadicNetwork& net, const SpinglassOptions& opt = {},
                                                    std::size_t jobs = 1) {
    const int n = net.n_nodes();
    CommunityDecomposition out;
    if (net.edge_count() == 0) {
        out.membership.assign(static_cast<std::size_t>(n), 0);
        out.affinity = Eigen::MatrixXd::Zero(n > 0 ? 1 : 0, n > 0 ? 1 : 0);
        out.warnings.push_back("network has no edges; all items placed in one community");
        return out;
    }
    if (opt.restarts < 1 || opt.spins_max < 1 || !(opt.anneal.cooling > 0 && opt.anneal.cooling < 1))
        throw ConfigError("invalid spinglass options");
    detail::SignedPotts model(net.partial_corr, opt.gamma);
    std::vector<std::vector<int>> runs(static_cast<std::size_t>(opt.restarts));
    std::vector<double> energies(runs.size());
    parallel_for(runs.size(), jobs, [&](std::size_t r) {
        runs[r] = detail::anneal_once(model, opt, derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
        energies[r] = model.energy(runs[r]);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (energies[r] < energies[best]) best = r;
    out.membership = detail::canonical_labels(runs[best]);
    out.energy = energies[best];
    out.affinity = community_affinity(net.partial_corr, out.membership);
    return out;
}

} // namespace homux

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "homux/communities.hpp"
#include "homux/data_model.hpp"
#include "homux/dyadic.hpp"
#include "homux/rng.hpp"

namespace homux {

struct Candidate {
    Multiplet multiplet;
    Provenance provenance = Provenance::network_based;
};

/// Candidate multiplets grouped by order, deduplicated on the item set.
/// A multiplet reached by several strategies keeps the first provenance in
/// enum order (network_based < subscale_intra < subscale_inter).
class CandidateSet {
public:
    void add(const Multiplet& m, Provenance p) {
        auto& bucket = by_order_[m.order()];
        auto [it, fresh] = bucket.try_emplace(m, p);
        if (!fresh && p < it->second) it->second = p;
    }

    void merge(const CandidateSet& other) {
        for (const auto& [k, bucket] : other.by_order_)
            for (const auto& [m, p] : bucket) add(m, p);
    }

    const std::map<int, std::map<Multiplet, Provenance>>& by_order() const noexcept { return by_order_; }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [k, bucket] : by_order_) n += bucket.size();
        return n;
    }
    bool empty() const { return size() == 0; }

    /// Ordered by (order, items).
    std::vector<Candidate> flatten() const {
        std::vector<Candidate> out;
        out.reserve(size());
        for (const auto& [k, bucket] : by_order_)
            for (const auto& [m, p] : bucket) out.push_back({m, p});
        return out;
    }

private:
    std::map<int, std::map<Multiplet, Provenance>> by_order_;
};

// ---------------------------------------------------------------------------
// combinatorics helpers

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

inline double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

/// Calls fn(subset) for every k-subset of `pool` in lexicographic index order.
template <typename Fn>
void for_each_subset(const std::vector<int>& pool, int k, Fn&& fn) {
    const int n = static_cast<int>(pool.size());
    if (k > n || k < 0) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[i] = i;
    std::vector<int> subset(static_cast<std::size_t>(k));
    for (;;) {
        for (int i = 0; i < k; ++i) subset[i] = pool[idx[i]];
        fn(subset);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// ---------------------------------------------------------------------------
// network-based candidates

/// Boolean adjacency of the network skeleton.
inline std::vector<std::vector<char>> skeleton(const DyadicNetwork& net, bool positive_only = false) {
    const int n = net.n_nodes();
    std::vector<std::vector<char>> adj(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) {
                const double w = net.partial_corr(i, j);
                adj[i][j] = positive_only ? w > 0.0 : w != 0.0;
            }
    return adj;
}

namespace detail {

inline void bron_kerbosch(const std::vector<std::vector<char>>& adj, std::vector<int>& r, std::vector<int> p,
                          std::vector<int> x, std::vector<ItemSet>& out) {
    if (p.empty() && x.empty()) {
        ItemSet c = r;
        std::sort(c.begin(), c.end());
        out.push_back(std::move(c));
        return;
    }
    // pivot: vertex of P u X with most neighbours in P
    int pivot = -1, best = -1;
    for (const auto* set : {&p, &x})
        for (int u : *set) {
            int cnt = 0;
            for (int v : p) cnt += adj[u][v];
            if (cnt > best) {
                best = cnt;
                pivot = u;
            }
        }
    std::vector<int> candidates;
    for (int v : p)
        if (!adj[pivot][v]) candidates.push_back(v);
    for (int v : candidates) {
        std::vector<int> np, nx;
        for (int u : p)
            if (adj[v][u]) np.push_back(u);
        for (int u : x)
            if (adj[v][u]) nx.push_back(u);
        r.push_back(v);
        bron_kerbosch(adj, r, std::move(np), std::move(nx), out);
        r.pop_back();
        p.erase(std::find(p.begin(), p.end(), v));
        x.push_back(v);
    }
}

} // namespace detail

/// All maximal cliques of an adjacency matrix (sorted item sets, sorted list).
inline std::vector<ItemSet> all_maximal_cliques(const std::vector<std::vector<char>>& adj) {
    std::vector<ItemSet> out;
    std::vector<int> r, p;
    for (int i = 0; i < static_cast<int>(adj.size()); ++i) p.push_back(i);
    detail::bron_kerbosch(adj, r, std::move(p), {}, out);
    std::sort(out.begin(), out.end());
    return out;
}

/// Maximal cliques with size in [k_min, k_max]; larger cliques are split into
/// all their k_max-subsets.
inline std::set<ItemSet> maximal_cliques(const DyadicNetwork& net, int k_min, int k_max, bool positive_only = false) {
    if (k_min < 3 || k_max < k_min) throw ConfigError("clique bounds need 3 <= k_min <= k_max");
    std::set<ItemSet> out;
    for (const auto& c : all_maximal_cliques(skeleton(net, positive_only))) {
        const int size = static_cast<int>(c.size());
        if (size < k_min) continue;
        if (size <= k_max) {
            out.insert(c);
        } else {
            for_each_subset(c, k_max, [&](const std::vector<int>& s) { out.insert(s); });
        }
    }
    return out;
}

/// Community-informed structural score: (1/|e|!) * sum over pairs of W[c(i), c(j)].
inline double score_seed(const ItemSet& e, const CommunityDecomposition& comm) {
    double s = 0.0;
    for (std::size_t a = 0; a < e.size(); ++a)
        for (std::size_t b = a + 1; b < e.size(); ++b)
            s += comm.affinity(comm.membership.at(e[a]), comm.membership.at(e[b]));
    return s / factorial(static_cast<int>(e.size()));
}

struct ScoredSeed {
    ItemSet items;
    double score = 0.0;
};

struct ExpansionOptions {
    int top_m = 200;
    double min_gain = 0.02; // relative score increase required to grow a set
    int k_min = 3;
    int k_max = 5;
};

/// Greedy growth of the best seeds: add the skeleton neighbour with the highest
/// resulting score while the relative gain stays above `min_gain`.
inline CandidateSet expand_seeds(std::vector<ScoredSeed> seeds, const DyadicNetwork& net,
                                 const CommunityDecomposition& comm, const ExpansionOptions& opt,
                                 bool positive_only = false) {
    if (opt.top_m < 1) throw ConfigError("top_m must be >= 1");
    std::stable_sort(seeds.begin(), seeds.end(), [](const ScoredSeed& a, const ScoredSeed& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.items < b.items;
    });
    if (static_cast<int>(seeds.size()) > opt.top_m) seeds.resize(static_cast<std::size_t>(opt.top_m));
    const auto adj = skeleton(net, positive_only);
    const int n = net.n_nodes();
    CandidateSet out;
    auto emit = [&](ItemSet s) {
        const int k = static_cast<int>(s.size());
        if (k >= opt.k_min && k <= opt.k_max && k >= 3) out.add(Multiplet(std::move(s)), Provenance::network_based);
    };
    for (auto& seed : seeds) {
        ItemSet current = seed.items;
        std::sort(current.begin(), current.end());
        double score = score_seed(current, comm);
        emit(current);
        while (static_cast<int>(current.size()) < opt.k_max) {
            int best_node = -1;
            double best_score = -std::numeric_limits<double>::infinity();
            for (int v = 0; v < n; ++v) {
                if (std::binary_search(current.begin(), current.end(), v)) continue;
                bool neighbour = false;
                for (int u : current) neighbour = neighbour || adj[u][v];
                if (!neighbour) continue;
                ItemSet grown = current;
                grown.insert(std::upper_bound(grown.begin(), grown.end(), v), v);
                const double sc = score_seed(grown, comm);
                if (sc > best_score) {
                    best_score = sc;
                    best_node = v;
                }
            }
            if (best_node < 0) break;
            double gain;
            if (score != 0.0) gain = (best_score - score) / std::abs(score);
            else gain = best_score > 0 ? std::numeric_limits<double>::infinity() : 0.0;
            if (!(gain >= opt.min_gain)) break;
            current.insert(std::upper_bound(current.begin(), current.end(), best_node), best_node);
            score = best_score;
            emit(current);
        }
    }
    return out;
}

struct NetworkCandidateOptions {
    int k_min = 3;
    int k_max = 5;
    bool positive_only = false;
    SpinglassOptions spinglass;
    ExpansionOptions expansion;
};

struct NetworkCandidates {
    CandidateSet candidates;
    CommunityDecomposition communities;
    std::size_t clique_seeds = 0;
};

inline NetworkCandidates network_candidates(const DyadicNetwork& net, const NetworkCandidateOptions& opt,
                                            std::size_t jobs = 1) {
    NetworkCandidates out;
    out.communities = spinglass_communities(net, opt.spinglass, jobs);
    const auto cliques = maximal_cliques(net, opt.k_min, opt.k_max, opt.positive_only);
    out.clique_seeds = cliques.size();
    std::vector<ScoredSeed> seeds;
    for (const auto& c : cliques) seeds.push_back({c, score_seed(c, out.communities)});
    ExpansionOptions ex = opt.expansion;
    ex.k_min = opt.k_min;
    ex.k_max = opt.k_max;
    out.candidates = expand_seeds(std::move(seeds), net, out.communities, ex, opt.positive_only);
    return out;
}

// ---------------------------------------------------------------------------
// subscale-guided candidates

struct SubscaleOptions {
    int k_min = 3;
    int k_max = 5;
    int sample_per_pair = 20; // order >= 4 mixed combinations sampled per scale pair
    int intra_cap = 5000;     // 0 disables the cap
    std::uint64_t seed = 1;
};

struct SubscaleCandidates {
    CandidateSet candidates;
    std::vector<std::string> notes;
};

namespace detail {

/// Up to `count` distinct k-subsets of pool accepted by `keep`, drawn uniformly.
template <typename Keep>
std::set<ItemSet> sample_subsets(const std::vector<int>& pool, int k, std::size_t count, Engine& rng, Keep&& keep) {
    std::set<ItemSet> out;
    std::vector<int> work = pool;
    while (out.size() < count) {
        // partial Fisher-Yates picks k items uniformly without replacement
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> d(static_cast<std::size_t>(i), work.size() - 1);
            std::swap(work[static_cast<std::size_t>(i)], work[d(rng)]);
        }
        ItemSet s(work.begin(), work.begin() + k);
        std::sort(s.begin(), s.end());
        if (keep(s)) out.insert(std::move(s));
    }
    return out;
}

} // namespace detail

/// Number of k-subsets of the union of two disjoint scales of sizes a, b that
/// contain at least one item of each.
inline double mixed_subset_count(int a, int b, int k) {
    return binomial(a + b, k) - binomial(a, k) - binomial(b, k);
}

inline SubscaleCandidates subscale_candidates(const ScaleMap& map, const SubscaleOptions& opt) {
    if (opt.k_min < 3 || opt.k_max < opt.k_min) throw ConfigError("subscale bounds need 3 <= k_min <= k_max");
    if (opt.sample_per_pair < 0) throw ConfigError("sample_per_pair must be >= 0");
    SubscaleCandidates out;
    std::vector<std::pair<std::string, std::vector<int>>> scales;
    for (const auto& [name, items] : map.scales()) scales.emplace_back(name, std::vector<int>(items.begin(), items.end()));

    for (const auto& [name, items] : scales) {
        for (int k = opt.k_min; k <= opt.k_max; ++k) {
            const int size = static_cast<int>(items.size());
            if (size < k) {
                out.notes.push_back("scale '" + name + "' has " + std::to_string(size) + " items; no order-" +
                                    std::to_string(k) + " intra candidates");
                continue;
            }
            if (opt.intra_cap > 0 && binomial(size, k) > opt.intra_cap) {
                Engine rng = make_engine(derive_seed(opt.seed, {"intra", name, std::to_string(k)}));
                for (auto& s : detail::sample_subsets(items, k, static_cast<std::size_t>(opt.intra_cap), rng,
                                                      [](const ItemSet&) { return true; }))
                    out.candidates.add(Multiplet(s), Provenance::subscale_intra);
                out.notes.push_back("scale '" + name + "': sampled " + std::to_string(opt.intra_cap) + " of " +
                                    std::to_string(static_cast<long long>(binomial(size, k))) + " order-" +
                                    std::to_string(k) + " subsets");
            } else {
                for_each_subset(items, k,
                                [&](const std::vector<int>& s) { out.candidates.add(Multiplet(s), Provenance::subscale_intra); });
            }
        }
    }

    for (std::size_t a = 0; a < scales.size(); ++a) {
        for (std::size_t b = a + 1; b < scales.size(); ++b) {
            const auto& sa = scales[a].second;
            const auto& sb = scales[b].second;
            std::vector<int> pool = sa;
            pool.insert(pool.end(), sb.begin(), sb.end());
            std::sort(pool.begin(), pool.end());
            auto mixed = [&](const ItemSet& s) {
                bool in_a = false, in_b = false;
                for (int i : s) {
                    in_a = in_a || std::binary_search(sa.begin(), sa.end(), i);
                    in_b = in_b || std::binary_search(sb.begin(), sb.end(), i);
                }
                return in_a && in_b;
            };
            for (int k = opt.k_min; k <= opt.k_max; ++k) {
                const double total = mixed_subset_count(static_cast<int>(sa.size()), static_cast<int>(sb.size()), k);
                if (total <= 0) continue;
                if (k == 3 || total <= opt.sample_per_pair) {
                    if (k != 3 && opt.sample_per_pair == 0) continue;
                    for_each_subset(pool, k, [&](const std::vector<int>& s) {
                        if (mixed(s)) out.candidates.add(Multiplet(s), Provenance::subscale_inter);
                    });
                } else if (opt.sample_per_pair > 0) {
                    Engine rng = make_engine(
                        derive_seed(opt.seed, {"inter", scales[a].first, scales[b].first, std::to_string(k)}));
                    for (auto& s : detail::sample_subsets(pool, k, static_cast<std::size_t>(opt.sample_per_pair), rng, mixed))
                        out.candidates.add(Multiplet(s), Provenance::subscale_inter);
                }
            }
        }
    }
    return out;
}

} // namespace homux

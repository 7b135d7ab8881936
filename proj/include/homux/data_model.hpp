#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "homux/error.hpp"

namespace homux {

// Item indices are 0-based in memory and 1-based in every file and report.

using ItemSet = std::vector<int>;

struct LikertRange {
    int min = 0;
    int max = 4;
    friend bool operator==(const LikertRange&, const LikertRange&) = default;
};

/// Respondents x items. `likert` is nullopt for continuous (synthetic) data.
class ResponseMatrix {
public:
    ResponseMatrix(Eigen::MatrixXd values, std::vector<std::string> item_ids, std::string layer_id,
                   std::optional<LikertRange> likert = LikertRange{})
        : values_(std::move(values)), item_ids_(std::move(item_ids)), layer_id_(std::move(layer_id)),
          likert_(likert) {
        if (static_cast<Eigen::Index>(item_ids_.size()) != values_.cols())
            throw SchemaError("item label count does not match column count");
        if (item_ids_.size() < 3) throw SchemaError("a response matrix needs at least 3 items");
        std::unordered_set<std::string> seen;
        for (const auto& id : item_ids_)
            if (!seen.insert(id).second) throw SchemaError("duplicate item label '" + id + "'");
        if (likert_ && likert_->min >= likert_->max) throw SchemaError("empty Likert range");
        for (Eigen::Index r = 0; r < values_.rows(); ++r) {
            for (Eigen::Index c = 0; c < values_.cols(); ++c) {
                double v = values_(r, c);
                if (!std::isfinite(v))
                    throw SchemaError("non-finite value at respondent " + std::to_string(r + 1));
                if (likert_ && (v != std::floor(v) || v < likert_->min || v > likert_->max))
                    throw SchemaError("value outside Likert range at respondent " + std::to_string(r + 1) +
                                      ", item '" + item_ids_[c] + "'");
            }
        }
    }

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
    const std::string& layer_id() const noexcept { return layer_id_; }
    const std::optional<LikertRange>& likert() const noexcept { return likert_; }
    int respondents() const noexcept { return static_cast<int>(values_.rows()); }
    int items() const noexcept { return static_cast<int>(values_.cols()); }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> item_ids_;
    std::string layer_id_;
    std::optional<LikertRange> likert_;
};

/// Row-concatenation of two layers over the same items (a first, then b).
inline ResponseMatrix merge_layers(const ResponseMatrix& a, const ResponseMatrix& b) {
    if (a.item_ids() != b.item_ids())
        throw SchemaError("cannot merge layers '" + a.layer_id() + "' and '" + b.layer_id() +
                          "': item sets differ");
    if (a.likert() != b.likert())
        throw SchemaError("cannot merge layers '" + a.layer_id() + "' and '" + b.layer_id() +
                          "': Likert ranges differ");
    Eigen::MatrixXd values(a.respondents() + b.respondents(), a.items());
    values.topRows(a.respondents()) = a.values();
    values.bottomRows(b.respondents()) = b.values();
    std::string name = a.layer_id().empty() || b.layer_id().empty() ? a.layer_id() + b.layer_id()
                                                                    : a.layer_id() + "/" + b.layer_id();
    return ResponseMatrix(std::move(values), a.item_ids(), std::move(name), a.likert());
}

/// Named subscales plus the items that belong to none of them.
class ScaleMap {
public:
    ScaleMap(int n_items, std::map<std::string, std::set<int>> scales, std::set<int> unassigned)
        : n_items_(n_items), scales_(std::move(scales)), unassigned_(std::move(unassigned)) {
        std::vector<int> owner(static_cast<std::size_t>(n_items), 0);
        auto claim = [&](int item, const std::string& who) {
            if (item < 0 || item >= n_items)
                throw StructuralError("scale map: item " + std::to_string(item + 1) + " in '" + who +
                                      "' is outside 1.." + std::to_string(n_items));
            if (owner[item]++)
                throw StructuralError("scale map: item " + std::to_string(item + 1) + " assigned twice");
        };
        for (const auto& [name, items] : scales_) {
            if (items.empty()) throw StructuralError("scale map: scale '" + name + "' is empty");
            for (int i : items) claim(i, name);
        }
        for (int i : unassigned_) claim(i, "unassigned");
        for (int i = 0; i < n_items; ++i)
            if (!owner[i]) throw StructuralError("scale map: item " + std::to_string(i + 1) + " is not covered");
    }

    /// Builds a map whose unlisted items become unassigned.
    static ScaleMap with_complement(int n_items, std::map<std::string, std::set<int>> scales) {
        std::set<int> rest;
        for (int i = 0; i < n_items; ++i) rest.insert(i);
        for (const auto& [name, items] : scales)
            for (int i : items) rest.erase(i);
        return ScaleMap(n_items, std::move(scales), std::move(rest));
    }

    int n_items() const noexcept { return n_items_; }
    const std::map<std::string, std::set<int>>& scales() const noexcept { return scales_; }
    const std::set<int>& unassigned() const noexcept { return unassigned_; }

    /// Scale name of an item, or nullopt when unassigned.
    std::optional<std::string> scale_of(int item) const {
        for (const auto& [name, items] : scales_)
            if (items.count(item)) return name;
        return std::nullopt;
    }

private:
    int n_items_;
    std::map<std::string, std::set<int>> scales_;
    std::set<int> unassigned_;
};

/// Sorted set of >= 3 distinct item indices.
class Multiplet {
public:
    Multiplet() = default;
    explicit Multiplet(ItemSet items) : items_(std::move(items)) {
        std::sort(items_.begin(), items_.end());
        if (items_.size() < 3) throw StructuralError("a multiplet needs at least 3 items");
        if (items_.front() < 0) throw StructuralError("negative item index in multiplet");
        if (std::adjacent_find(items_.begin(), items_.end()) != items_.end())
            throw StructuralError("repeated item in multiplet " + label());
    }

    const ItemSet& items() const noexcept { return items_; }
    int order() const noexcept { return static_cast<int>(items_.size()); }
    int operator[](std::size_t i) const noexcept { return items_[i]; }

    void check_bounds(int n_items) const {
        if (items_.back() >= n_items)
            throw StructuralError("multiplet " + label() + " references an item beyond " + std::to_string(n_items));
    }

    /// 1-based, dash-separated, e.g. "2-5-17". Used as a stable key.
    std::string label() const {
        std::string s;
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (i) s += '-';
            s += std::to_string(items_[i] + 1);
        }
        return s;
    }

    friend auto operator<=>(const Multiplet& a, const Multiplet& b) {
        if (a.items_.size() != b.items_.size()) return a.items_.size() <=> b.items_.size();
        return a.items_ <=> b.items_;
    }
    friend bool operator==(const Multiplet&, const Multiplet&) = default;

private:
    ItemSet items_;
};

enum class InteractionType { synergy, redundancy };
enum class Provenance { network_based, subscale_intra, subscale_inter };

inline std::string_view to_string(InteractionType t) {
    return t == InteractionType::synergy ? "synergy" : "redundancy";
}

inline std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::network_based: return "network_based";
    case Provenance::subscale_intra: return "subscale_intra";
    case Provenance::subscale_inter: return "subscale_inter";
    }
    return "?";
}

inline Provenance provenance_from_string(std::string_view s) {
    if (s == "network_based") return Provenance::network_based;
    if (s == "subscale_intra") return Provenance::subscale_intra;
    if (s == "subscale_inter") return Provenance::subscale_inter;
    throw SchemaError("unknown provenance '" + std::string(s) + "'");
}

inline InteractionType interaction_from_string(std::string_view s) {
    if (s == "synergy") return InteractionType::synergy;
    if (s == "redundancy") return InteractionType::redundancy;
    throw SchemaError("unknown interaction type '" + std::string(s) + "'");
}

struct ValidatedHyperedge {
    Multiplet multiplet;
    double omega = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_adj = 1.0;
    InteractionType interaction_type = InteractionType::redundancy;
    Provenance provenance = Provenance::network_based;

    /// Checks sign/CI/floor consistency; throws StructuralError on violation.
    void check(double effect_floor) const {
        const std::string who = "hyperedge " + multiplet.label();
        if (!std::isfinite(omega) || omega == 0.0) throw StructuralError(who + ": omega must be finite and nonzero");
        if ((omega > 0) != (interaction_type == InteractionType::redundancy))
            throw StructuralError(who + ": interaction type disagrees with the sign of omega");
        if (!(ci_low <= omega && omega <= ci_high)) throw StructuralError(who + ": omega outside its interval");
        if (ci_low <= 0.0 && 0.0 <= ci_high) throw StructuralError(who + ": interval contains zero");
        if (!(p_adj >= 0.0 && p_adj <= 1.0)) throw StructuralError(who + ": adjusted p outside [0,1]");
        if (std::abs(omega) < effect_floor) throw StructuralError(who + ": |omega| below the effect floor");
    }
};

inline InteractionType interaction_of(double omega) {
    return omega > 0 ? InteractionType::redundancy : InteractionType::synergy;
}

/// Shared node set, one hyperedge list per layer, a single interaction sign.
class MultiplexHypergraph {
public:
    MultiplexHypergraph(std::vector<std::string> node_ids, InteractionType type,
                        std::map<std::string, std::vector<ValidatedHyperedge>> layers = {})
        : node_ids_(std::move(node_ids)), type_(type) {
        for (auto& [name, edges] : layers) set_layer(name, std::move(edges));
    }

    void set_layer(const std::string& name, std::vector<ValidatedHyperedge> edges) {
        const int n = static_cast<int>(node_ids_.size());
        for (const auto& e : edges) {
            e.multiplet.check_bounds(n);
            if (e.interaction_type != type_)
                throw StructuralError("layer '" + name + "': hyperedge " + e.multiplet.label() + " is " +
                                      std::string(to_string(e.interaction_type)) + ", multiplex is " +
                                      std::string(to_string(type_)));
            if ((e.omega > 0) != (type_ == InteractionType::redundancy))
                throw StructuralError("layer '" + name + "': hyperedge " + e.multiplet.label() +
                                      " has the wrong sign");
        }
        std::sort(edges.begin(), edges.end(),
                  [](const auto& a, const auto& b) { return a.multiplet < b.multiplet; });
        for (std::size_t i = 1; i < edges.size(); ++i)
            if (edges[i].multiplet == edges[i - 1].multiplet)
                throw StructuralError("layer '" + name + "': duplicate hyperedge " + edges[i].multiplet.label());
        layers_[name] = std::move(edges);
    }

    const std::vector<std::string>& node_ids() const noexcept { return node_ids_; }
    InteractionType interaction_type() const noexcept { return type_; }
    const std::map<std::string, std::vector<ValidatedHyperedge>>& layers() const noexcept { return layers_; }
    int n_nodes() const noexcept { return static_cast<int>(node_ids_.size()); }

private:
    std::vector<std::string> node_ids_;
    InteractionType type_;
    std::map<std::string, std::vector<ValidatedHyperedge>> layers_;
};

struct Incidence {
    Eigen::MatrixXd h;       // N x E, 0/1
    Eigen::VectorXd weights; // E
};

inline Incidence incidence(const std::vector<ValidatedHyperedge>& layer, int n_items) {
    Incidence out{Eigen::MatrixXd::Zero(n_items, static_cast<Eigen::Index>(layer.size())),
                  Eigen::VectorXd(static_cast<Eigen::Index>(layer.size()))};
    for (std::size_t e = 0; e < layer.size(); ++e) {
        for (int i : layer[e].multiplet.items()) {
            if (i >= n_items)
                throw StructuralError("incidence: item " + std::to_string(i + 1) + " outside 1.." +
                                      std::to_string(n_items));
            out.h(i, static_cast<Eigen::Index>(e)) = 1.0;
        }
        out.weights(static_cast<Eigen::Index>(e)) = layer[e].omega;
    }
    return out;
}

/// Inverse of incidence() for the (items, omega) content of each hyperedge.
inline std::vector<std::pair<Multiplet, double>> edges_from_incidence(const Incidence& inc) {
    std::vector<std::pair<Multiplet, double>> out;
    for (Eigen::Index e = 0; e < inc.h.cols(); ++e) {
        ItemSet items;
        for (Eigen::Index i = 0; i < inc.h.rows(); ++i)
            if (inc.h(i, e) != 0.0) items.push_back(static_cast<int>(i));
        out.emplace_back(Multiplet(std::move(items)), inc.weights(e));
    }
    return out;
}

} // namespace homux

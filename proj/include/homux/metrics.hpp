#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "homux/data_model.hpp"

namespace homux {

struct LayerDegrees {
    std::vector<double> raw;        // k_i = sum_e H_ie w_e
    std::vector<double> normalized; // |k_i| / sum_e |w_e|
    double total_abs_weight = 0.0;
};

struct NodeDegreeProfile {
    std::vector<std::string> node_ids;
    std::map<std::string, LayerDegrees> layers;
};

inline NodeDegreeProfile weighted_degrees(const MultiplexHypergraph& mux) {
    NodeDegreeProfile out{mux.node_ids(), {}};
    const auto n = static_cast<std::size_t>(mux.n_nodes());
    for (const auto& [name, edges] : mux.layers()) {
        LayerDegrees d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0};
        for (const auto& e : edges) {
            d.total_abs_weight += std::abs(e.omega);
            for (int i : e.multiplet.items()) d.raw[i] += e.omega;
        }
        if (d.total_abs_weight > 0)
            for (std::size_t i = 0; i < n; ++i) d.normalized[i] = std::abs(d.raw[i]) / d.total_abs_weight;
        out.layers[name] = std::move(d);
    }
    return out;
}

struct NswdResult {
    std::map<std::string, std::map<std::string, double>> by_layer; // layer -> scale -> v_s
    std::vector<std::string> warnings;
};

/// Normalized Scale Weighted Degree: per-item mean of normalized degrees within
/// each scale, rescaled to sum to one across scales. Unassigned items are ignored.
inline NswdResult nswd(const NodeDegreeProfile& profile, const ScaleMap& map) {
    NswdResult out;
    for (const auto& [layer, d] : profile.layers) {
        std::map<std::string, double> mean;
        double total = 0.0;
        for (const auto& [scale, items] : map.scales()) {
            double s = 0.0;
            for (int i : items) s += d.normalized.at(static_cast<std::size_t>(i));
            s /= static_cast<double>(items.size());
            mean[scale] = s;
            total += s;
        }
        if (total <= 0.0) {
            out.warnings.push_back("layer '" + layer + "' has no scale activity; NSWD undefined");
            out.by_layer[layer] = {};
            continue;
        }
        for (auto& [scale, v] : mean) v /= total;
        out.by_layer[layer] = std::move(mean);
    }
    return out;
}

inline const std::string kUnassignedScale = "UNASSIGNED";

struct ScalePattern {
    std::set<std::string> scale_set;
    std::set<int> orders_present;
    int hyperedge_count = 0;
    double cumulative_weight = 0.0;

    bool monoscale() const { return scale_set.size() == 1; }
    bool unassigned_only() const { return scale_set.size() == 1 && *scale_set.begin() == kUnassignedScale; }
};

/// Scale set touched by a hyperedge; unassigned items add nothing unless the
/// hyperedge has no scale items at all.
inline std::set<std::string> scale_set_of(const Multiplet& m, const ScaleMap& map) {
    std::set<std::string> out;
    for (int i : m.items())
        if (auto s = map.scale_of(i)) out.insert(*s);
    if (out.empty()) out.insert(kUnassignedScale);
    return out;
}

/// Patterns per layer ranked by |cumulative weight|, then hyperedge count, then scale set.
inline std::map<std::string, std::vector<ScalePattern>> extract_patterns(const MultiplexHypergraph& mux,
                                                                         const ScaleMap& map) {
    std::map<std::string, std::vector<ScalePattern>> out;
    for (const auto& [layer, edges] : mux.layers()) {
        std::map<std::set<std::string>, ScalePattern> agg;
        for (const auto& e : edges) {
            auto key = scale_set_of(e.multiplet, map);
            auto& p = agg[key];
            p.scale_set = key;
            p.orders_present.insert(e.multiplet.order());
            p.hyperedge_count += 1;
            p.cumulative_weight += e.omega;
        }
        std::vector<ScalePattern> ranked;
        for (auto& [key, p] : agg) ranked.push_back(std::move(p));
        std::stable_sort(ranked.begin(), ranked.end(), [](const ScalePattern& a, const ScalePattern& b) {
            if (std::abs(a.cumulative_weight) != std::abs(b.cumulative_weight))
                return std::abs(a.cumulative_weight) > std::abs(b.cumulative_weight);
            if (a.hyperedge_count != b.hyperedge_count) return a.hyperedge_count > b.hyperedge_count;
            return a.scale_set < b.scale_set;
        });
        out[layer] = std::move(ranked);
    }
    return out;
}

} // namespace homux

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "homux/candidates.hpp"
#include "homux/data_model.hpp"
#include "homux/dyadic.hpp"
#include "homux/error.hpp"
#include "homux/metrics.hpp"
#include "homux/validation.hpp"

#ifndef HOMUX_VERSION
#define HOMUX_VERSION "0.0.0"
#endif

namespace homux::io {

using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = HOMUX_VERSION;

/// Stamped on every artifact.
struct Meta {
    std::string config_sha256;

    std::string header_line() const {
        return "# homux " + std::string(kToolVersion) + " config_sha256=" + config_sha256 + "\n";
    }
    json to_json() const { return {{"tool", "homux"}, {"version", kToolVersion}, {"config_sha256", config_sha256}}; }
};

// ---------------------------------------------------------------------------
// primitives

/// Shortest round-trip representation; NaN becomes "NA".
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    if (s == "NA" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError(where + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

inline int parse_int(std::string_view s, const std::string& where) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError(where + ": cannot parse integer '" + std::string(s) + "'");
    return v;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        std::string_view line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.emplace_back(line);
        start = pos + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw SchemaError("cannot write '" + p.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw SchemaError("write failed for '" + p.string() + "'");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json(std::string_view text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

/// Item id -> column index.
class ItemIndex {
public:
    explicit ItemIndex(const std::vector<std::string>& ids) : ids_(&ids) {
        for (std::size_t i = 0; i < ids.size(); ++i) pos_[ids[i]] = static_cast<int>(i);
    }
    int at(const std::string& id, const std::string& where) const {
        auto it = pos_.find(id);
        if (it == pos_.end()) throw SchemaError(where + ": unknown item '" + id + "'");
        return it->second;
    }
    std::string items_of(const Multiplet& m) const {
        std::vector<std::string> out;
        for (int i : m.items()) out.push_back((*ids_)[static_cast<std::size_t>(i)]);
        return join(out, ",");
    }
    Multiplet parse(const std::string& items, const std::string& where) const {
        ItemSet s;
        for (const auto& id : split(items, ',')) s.push_back(at(id, where));
        std::sort(s.begin(), s.end());
        try {
            return Multiplet(std::move(s));
        } catch (const Error& e) {
            throw SchemaError(where + ": " + e.what());
        }
    }

private:
    const std::vector<std::string>* ids_;
    std::unordered_map<std::string, int> pos_;
};

/// Non-comment lines of a TSV, header first.
inline std::vector<std::vector<std::string>> read_tsv(std::string_view text, const std::vector<std::string>& header,
                                                      const std::string& where) {
    std::vector<std::vector<std::string>> rows;
    bool seen_header = false;
    for (const auto& line : lines_of(text)) {
        if (line.empty() || line.front() == '#') continue;
        auto cells = split(line, '\t');
        if (!seen_header) {
            if (cells != header) throw SchemaError(where + ": unexpected header '" + line + "'");
            seen_header = true;
            continue;
        }
        if (cells.size() != header.size())
            throw SchemaError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    if (!seen_header) throw SchemaError(where + ": missing header");
    return rows;
}

inline std::string tsv_header(const Meta& meta, const std::vector<std::string>& cols) {
    return meta.header_line() + join(cols, "\t") + "\n";
}

// ---------------------------------------------------------------------------
// response matrices: CSV, header row of item ids, one respondent per row.
// Directives before the header: "# likert: MIN MAX" or "# continuous".
// Without a directive the matrix is Likert over the observed integer range,
// or continuous if any value is fractional.

inline ResponseMatrix parse_response_csv(std::string_view text, const std::string& layer, const std::string& where) {
    std::optional<std::optional<LikertRange>> declared;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    for (const auto& raw : lines_of(text)) {
        ++line_no;
        const auto line = std::string(trim(raw));
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto body = std::string(trim(std::string_view(line).substr(1)));
            if (body.rfind("likert:", 0) == 0) {
                std::istringstream ss(body.substr(7));
                LikertRange r;
                if (!(ss >> r.min >> r.max)) throw SchemaError(where + ": malformed likert directive");
                declared = std::optional<LikertRange>(r);
            } else if (body == "continuous") {
                declared = std::optional<LikertRange>();
            }
            continue;
        }
        auto cells = split(line, ',');
        if (ids.empty()) {
            ids = std::move(cells);
            continue;
        }
        if (cells.size() != ids.size())
            throw SchemaError(where + ":" + std::to_string(line_no) + ": expected " + std::to_string(ids.size()) +
                              " values, got " + std::to_string(cells.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            if (c.empty()) throw SchemaError(where + ":" + std::to_string(line_no) + ": missing value");
            row.push_back(parse_double(c, where + ":" + std::to_string(line_no)));
        }
        rows.push_back(std::move(row));
    }
    if (ids.empty()) throw SchemaError(where + ": no header row");
    if (rows.empty()) throw SchemaError(where + ": no respondents");
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < ids.size(); ++c) values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    std::optional<LikertRange> likert;
    if (declared) {
        likert = *declared;
    } else if ((values.array() == values.array().floor()).all()) {
        likert = LikertRange{static_cast<int>(values.minCoeff()), static_cast<int>(values.maxCoeff())};
        if (likert->min == likert->max) throw SchemaError(where + ": every value is identical");
    }
    try {
        return ResponseMatrix(std::move(values), std::move(ids), layer, likert);
    } catch (const SchemaError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline std::string format_response_csv(const ResponseMatrix& m, const Meta& meta) {
    std::string out = meta.header_line();
    if (m.likert())
        out += "# likert: " + std::to_string(m.likert()->min) + " " + std::to_string(m.likert()->max) + "\n";
    else
        out += "# continuous\n";
    out += join(m.item_ids(), ",") + "\n";
    for (Eigen::Index r = 0; r < m.values().rows(); ++r) {
        for (Eigen::Index c = 0; c < m.values().cols(); ++c) {
            if (c) out += ',';
            out += format_double(m.values()(r, c));
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// scale map: {"scales": {"name": [item ids]}, "unassigned": [item ids]}
// Items listed nowhere are unassigned.

inline ScaleMap parse_scale_map_json(std::string_view text, const std::vector<std::string>& ids, const std::string& where) {
    const auto j = parse_json(text, where);
    if (!j.is_object() || !j.contains("scales") || !j["scales"].is_object())
        throw SchemaError(where + ": expected an object with a \"scales\" object");
    const ItemIndex index(ids);
    std::map<std::string, std::set<int>> scales;
    try {
        for (const auto& [name, items] : j["scales"].items()) {
            if (!items.is_array()) throw SchemaError(where + ": scale '" + name + "' must list item ids");
            for (const auto& id : items) scales[name].insert(index.at(id.get<std::string>(), where));
        }
        if (j.contains("unassigned")) {
            std::set<int> un;
            for (const auto& id : j["unassigned"]) un.insert(index.at(id.get<std::string>(), where));
            auto map = ScaleMap::with_complement(static_cast<int>(ids.size()), scales);
            if (map.unassigned() != un) throw StructuralError("unassigned list does not match the scale complement");
            return map;
        }
        return ScaleMap::with_complement(static_cast<int>(ids.size()), std::move(scales));
    } catch (const StructuralError& e) {
        throw StructuralError(where + ": " + e.what());
    } catch (const json::exception& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline std::string format_scale_map_json(const ScaleMap& map, const std::vector<std::string>& ids, const Meta& meta) {
    json scales = json::object();
    for (const auto& [name, items] : map.scales()) {
        json list = json::array();
        for (int i : items) list.push_back(ids[static_cast<std::size_t>(i)]);
        scales[name] = list;
    }
    json un = json::array();
    for (int i : map.unassigned()) un.push_back(ids[static_cast<std::size_t>(i)]);
    return dump({{"meta", meta.to_json()}, {"scales", scales}, {"unassigned", un}});
}

// ---------------------------------------------------------------------------
// dyadic network: edge TSV (upper triangle, nonzero partial correlations)
// plus a JSON sidecar with the selection details.

inline const std::vector<std::string> kNetworkColumns{"item_a", "item_b", "partial_corr"};

inline std::string format_network_tsv(const DyadicNetwork& net, const std::vector<std::string>& ids, const Meta& meta) {
    std::string out = tsv_header(meta, kNetworkColumns);
    for (int i = 0; i < net.n_nodes(); ++i)
        for (int j = i + 1; j < net.n_nodes(); ++j)
            if (net.has_edge(i, j))
                out += ids[static_cast<std::size_t>(i)] + "\t" + ids[static_cast<std::size_t>(j)] + "\t" +
                       format_double(net.partial_corr(i, j)) + "\n";
    return out;
}

inline std::string format_network_json(const DyadicNetwork& net, const std::vector<std::string>& ids, const Meta& meta) {
    return dump({{"meta", meta.to_json()},
                 {"method", to_string(net.method)},
                 {"lambda_selected", format_double(net.lambda_selected)},
                 {"ebic_gamma", format_double(net.ebic_gamma)},
                 {"n_nodes", net.n_nodes()},
                 {"n_edges", upper_edge_count(net.partial_corr)},
                 {"items", ids},
                 {"warnings", net.warnings}});
}

/// Rebuilds the network as far as candidate generation needs it (partial
/// correlations, selection details); the precision matrix is not stored.
inline DyadicNetwork parse_network(std::string_view tsv, std::string_view sidecar, const std::vector<std::string>& ids,
                                   const std::string& where) {
    const auto j = parse_json(sidecar, where + ".json");
    DyadicNetwork net;
    try {
        if (j.at("items").get<std::vector<std::string>>() != ids)
            throw SchemaError(where + ": item list does not match the data");
        net.method = correlation_method_from_string(j.at("method").get<std::string>());
        net.lambda_selected = parse_double(j.at("lambda_selected").get<std::string>(), where);
        net.ebic_gamma = parse_double(j.at("ebic_gamma").get<std::string>(), where);
        net.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw SchemaError(where + ".json: " + e.what());
    }
    const auto n = static_cast<Eigen::Index>(ids.size());
    net.partial_corr = Eigen::MatrixXd::Zero(n, n);
    const ItemIndex index(ids);
    for (const auto& row : read_tsv(tsv, kNetworkColumns, where)) {
        const int a = index.at(row[0], where), b = index.at(row[1], where);
        net.partial_corr(a, b) = net.partial_corr(b, a) = parse_double(row[2], where);
    }
    return net;
}

inline std::string format_communities_tsv(const CommunityDecomposition& c, const std::vector<std::string>& ids,
                                          const Meta& meta) {
    std::string out = tsv_header(meta, {"item", "community"});
    for (std::size_t i = 0; i < c.membership.size(); ++i) out += ids[i] + "\t" + std::to_string(c.membership[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// candidates: JSON lines, one meta line then one object per multiplet.

inline std::string format_candidates_jsonl(const CandidateSet& set, const std::vector<std::string>& ids, const Meta& meta,
                                           const std::vector<std::string>& notes = {}) {
    std::string out = json{{"meta", meta.to_json()}, {"notes", notes}}.dump() + "\n";
    for (const auto& c : set.flatten()) {
        std::vector<std::string> items;
        for (int i : c.multiplet.items()) items.push_back(ids[static_cast<std::size_t>(i)]);
        out += json{{"items", items}, {"order", c.multiplet.order()}, {"provenance", to_string(c.provenance)}}.dump() + "\n";
    }
    return out;
}

inline CandidateSet parse_candidates_jsonl(std::string_view text, const std::vector<std::string>& ids,
                                           const std::string& where) {
    CandidateSet out;
    const ItemIndex index(ids);
    int line_no = 0;
    for (const auto& line : lines_of(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto at = where + ":" + std::to_string(line_no);
        const auto j = parse_json(line, at);
        if (j.contains("meta")) continue;
        try {
            ItemSet s;
            for (const auto& id : j.at("items")) s.push_back(index.at(id.get<std::string>(), at));
            std::sort(s.begin(), s.end());
            Multiplet m(std::move(s));
            if (m.order() != j.at("order").get<int>()) throw SchemaError(at + ": order does not match items");
            out.add(m, provenance_from_string(j.at("provenance").get<std::string>()));
        } catch (const json::exception& e) {
            throw SchemaError(at + ": " + e.what());
        } catch (const StructuralError& e) {
            throw SchemaError(at + ": " + e.what());
        }
    }
    return out;
}

/// Generation notes stored on the meta line.
inline std::vector<std::string> parse_candidate_notes(std::string_view text, const std::string& where) {
    for (const auto& line : lines_of(text)) {
        if (trim(line).empty()) continue;
        const auto j = parse_json(line, where);
        if (!j.contains("meta")) break;
        try {
            return j.value("notes", std::vector<std::string>{});
        } catch (const json::exception& e) {
            throw SchemaError(where + ": " + e.what());
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// validation stage report

inline const std::vector<std::string> kStageColumns{"stage", "label",  "items",  "order",  "provenance", "omega",
                                                    "p_raw", "p_adj",  "ci_low", "ci_high", "passed",    "reason",
                                                    "dropped", "note"};

inline std::string format_stage_report_tsv(const StageReport& rep, const std::vector<std::string>& ids, const Meta& meta) {
    const ItemIndex index(ids);
    std::string out = tsv_header(meta, kStageColumns);
    for (const auto& r : rep.records) {
        out += std::string(to_string(r.stage)) + "\t" + r.multiplet.label() + "\t" + index.items_of(r.multiplet) + "\t" +
               std::to_string(r.multiplet.order()) + "\t" + std::string(to_string(r.provenance)) + "\t" +
               format_double(r.omega) + "\t" + format_double(r.p_raw) + "\t" + format_double(r.p_adj) + "\t" +
               format_double(r.ci_low) + "\t" + format_double(r.ci_high) + "\t" + (r.passed ? "1" : "0") + "\t" +
               std::string(to_string(r.reason)) + "\t" + std::to_string(r.dropped) + "\t" + r.note + "\n";
    }
    return out;
}

inline Stage stage_from_string(std::string_view s) {
    if (s == "permutation") return Stage::permutation;
    if (s == "bootstrap") return Stage::bootstrap;
    if (s == "hierarchical") return Stage::hierarchical;
    throw SchemaError("unknown validation stage '" + std::string(s) + "'");
}

inline FailReason fail_reason_from_string(std::string_view s) {
    for (auto r : {FailReason::none, FailReason::not_significant, FailReason::below_floor, FailReason::ci_spans_zero,
                   FailReason::unstable_point, FailReason::subsumed_by_suborder})
        if (to_string(r) == s) return r;
    throw SchemaError("unknown failure reason '" + std::string(s) + "'");
}

inline StageReport parse_stage_report_tsv(std::string_view text, const std::vector<std::string>& ids,
                                          const std::string& where) {
    const ItemIndex index(ids);
    StageReport rep;
    for (const auto& row : read_tsv(text, kStageColumns, where)) {
        StageRecord r;
        r.stage = stage_from_string(row[0]);
        r.multiplet = index.parse(row[2], where);
        r.provenance = provenance_from_string(row[4]);
        r.omega = parse_double(row[5], where);
        r.p_raw = parse_double(row[6], where);
        r.p_adj = parse_double(row[7], where);
        r.ci_low = parse_double(row[8], where);
        r.ci_high = parse_double(row[9], where);
        r.passed = row[10] == "1";
        r.reason = fail_reason_from_string(row[11]);
        r.dropped = parse_int(row[12], where);
        r.note = row[13];
        rep.records.push_back(std::move(r));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// validated hyperedges

inline const std::vector<std::string> kHyperedgeColumns{"label",   "items", "order",           "omega",     "ci_low",
                                                        "ci_high", "p_adj", "interaction_type", "provenance"};

inline std::string format_hyperedges_tsv(const std::vector<ValidatedHyperedge>& edges, const std::vector<std::string>& ids,
                                         const Meta& meta) {
    const ItemIndex index(ids);
    std::string out = tsv_header(meta, kHyperedgeColumns);
    for (const auto& e : edges)
        out += e.multiplet.label() + "\t" + index.items_of(e.multiplet) + "\t" + std::to_string(e.multiplet.order()) +
               "\t" + format_double(e.omega) + "\t" + format_double(e.ci_low) + "\t" + format_double(e.ci_high) + "\t" +
               format_double(e.p_adj) + "\t" + std::string(to_string(e.interaction_type)) + "\t" +
               std::string(to_string(e.provenance)) + "\n";
    return out;
}

inline std::vector<ValidatedHyperedge> parse_hyperedges_tsv(std::string_view text, const std::vector<std::string>& ids,
                                                            const std::string& where) {
    const ItemIndex index(ids);
    std::vector<ValidatedHyperedge> out;
    for (const auto& row : read_tsv(text, kHyperedgeColumns, where)) {
        ValidatedHyperedge e;
        e.multiplet = index.parse(row[1], where);
        e.omega = parse_double(row[3], where);
        e.ci_low = parse_double(row[4], where);
        e.ci_high = parse_double(row[5], where);
        e.p_adj = parse_double(row[6], where);
        e.interaction_type = interaction_from_string(row[7]);
        e.provenance = provenance_from_string(row[8]);
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// multiplex hypergraph

inline json hyperedge_json(const ValidatedHyperedge& e, const ItemIndex& index) {
    return {{"items", split(index.items_of(e.multiplet), ',')},
            {"label", e.multiplet.label()},
            {"omega", format_double(e.omega)},
            {"ci_low", format_double(e.ci_low)},
            {"ci_high", format_double(e.ci_high)},
            {"p_adj", format_double(e.p_adj)},
            {"provenance", to_string(e.provenance)}};
}

inline std::string format_multiplex_json(const MultiplexHypergraph& mux, const Meta& meta) {
    const ItemIndex index(mux.node_ids());
    json layers = json::object();
    for (const auto& [name, edges] : mux.layers()) {
        json list = json::array();
        for (const auto& e : edges) list.push_back(hyperedge_json(e, index));
        layers[name] = list;
    }
    return dump({{"meta", meta.to_json()},
                 {"interaction_type", to_string(mux.interaction_type())},
                 {"nodes", mux.node_ids()},
                 {"layers", layers}});
}

inline MultiplexHypergraph parse_multiplex_json(std::string_view text, const std::string& where) {
    const auto j = parse_json(text, where);
    try {
        const auto type = interaction_from_string(j.at("interaction_type").get<std::string>());
        MultiplexHypergraph mux(j.at("nodes").get<std::vector<std::string>>(), type);
        const ItemIndex index(mux.node_ids());
        for (const auto& [name, list] : j.at("layers").items()) {
            std::vector<ValidatedHyperedge> edges;
            for (const auto& e : list) {
                ValidatedHyperedge h;
                h.multiplet = index.parse(join(e.at("items").get<std::vector<std::string>>(), ","), where);
                h.omega = parse_double(e.at("omega").get<std::string>(), where);
                h.ci_low = parse_double(e.at("ci_low").get<std::string>(), where);
                h.ci_high = parse_double(e.at("ci_high").get<std::string>(), where);
                h.p_adj = parse_double(e.at("p_adj").get<std::string>(), where);
                h.interaction_type = type;
                h.provenance = provenance_from_string(e.at("provenance").get<std::string>());
                edges.push_back(std::move(h));
            }
            mux.set_layer(name, std::move(edges));
        }
        return mux;
    } catch (const json::exception& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// metrics

inline const std::vector<std::string> kItemMetricColumns{"item", "scale", "raw_degree", "normalized_degree"};
inline const std::vector<std::string> kNswdColumns{"scale", "n_items", "nswd"};
inline const std::vector<std::string> kPatternColumns{"rank",   "scales",          "n_scales", "kind",
                                                      "orders", "hyperedge_count", "cumulative_weight"};

inline std::string format_item_metrics_tsv(const LayerDegrees& d, const std::vector<std::string>& ids, const ScaleMap& map,
                                           const Meta& meta) {
    std::string out = tsv_header(meta, kItemMetricColumns);
    for (std::size_t i = 0; i < ids.size(); ++i)
        out += ids[i] + "\t" + map.scale_of(static_cast<int>(i)).value_or(kUnassignedScale) + "\t" +
               format_double(d.raw[i]) + "\t" + format_double(d.normalized[i]) + "\n";
    return out;
}

inline std::string format_nswd_tsv(const std::map<std::string, double>& v, const ScaleMap& map, const Meta& meta) {
    std::string out = tsv_header(meta, kNswdColumns);
    for (const auto& [scale, items] : map.scales()) {
        auto it = v.find(scale);
        out += scale + "\t" + std::to_string(items.size()) + "\t" +
               format_double(it == v.end() ? std::numeric_limits<double>::quiet_NaN() : it->second) + "\n";
    }
    return out;
}

inline std::string format_patterns_tsv(const std::vector<ScalePattern>& patterns, const Meta& meta) {
    std::string out = tsv_header(meta, kPatternColumns);
    int rank = 0;
    for (const auto& p : patterns) {
        std::vector<std::string> scales(p.scale_set.begin(), p.scale_set.end());
        std::vector<std::string> orders;
        for (int k : p.orders_present) orders.push_back(std::to_string(k));
        const char* kind = p.unassigned_only() ? "unassigned" : (p.monoscale() ? "monoscale" : "multiscale");
        out += std::to_string(++rank) + "\t" + join(scales, ",") + "\t" + std::to_string(p.scale_set.size()) + "\t" +
               kind + "\t" + join(orders, ",") + "\t" + std::to_string(p.hyperedge_count) + "\t" +
               format_double(p.cumulative_weight) + "\n";
    }
    return out;
}

} // namespace homux::io

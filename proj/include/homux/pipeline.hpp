#pragma once

#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "homux/candidates.hpp"
#include "homux/dyadic.hpp"
#include "homux/io.hpp"
#include "homux/metrics.hpp"
#include "homux/parallel.hpp"
#include "homux/rng.hpp"
#include "homux/synth.hpp"
#include "homux/validation.hpp"

namespace homux {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class PipelineStage { network = 0, candidates = 1, validate = 2, multiplex = 3, metrics = 4 };

inline std::string_view to_string(PipelineStage s) {
    switch (s) {
    case PipelineStage::network: return "network";
    case PipelineStage::candidates: return "candidates";
    case PipelineStage::validate: return "validate";
    case PipelineStage::multiplex: return "multiplex";
    case PipelineStage::metrics: return "metrics";
    }
    return "?";
}

inline PipelineStage pipeline_stage_from_string(std::string_view s) {
    for (auto st : {PipelineStage::network, PipelineStage::candidates, PipelineStage::validate, PipelineStage::multiplex,
                    PipelineStage::metrics})
        if (to_string(st) == s) return st;
    throw ConfigError("unknown stage '" + std::string(s) + "'");
}

/// A failure inside one layer or stage; keeps the category of the cause.
class PipelineError : public Error {
public:
    PipelineError(Category category, std::string layer, std::string stage, const std::string& what)
        : Error(category, "layer '" + layer + "', stage '" + stage + "': " + what), layer_(std::move(layer)),
          stage_(std::move(stage)) {}

    const std::string& layer() const noexcept { return layer_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string layer_;
    std::string stage_;
};

// ---------------------------------------------------------------------------
// configuration

struct LayerSource {
    std::string id;
    std::vector<std::string> paths; // as written in the config
    std::vector<fs::path> resolved;
};

struct SyntheticSource {
    std::vector<Regime> regimes;
    int n_samples = 5000;
    int n_triplets = 9;
    int likert_levels = 0; // 0 keeps the data continuous
    std::optional<std::array<double, 3>> loadings;
};

struct PipelineConfig {
    std::vector<LayerSource> layers;
    std::optional<SyntheticSource> synthetic;
    std::optional<std::string> scale_map;
    std::optional<fs::path> scale_map_resolved;

    std::vector<CorrelationMethod> methods{CorrelationMethod::nonparanormal};
    double ebic_gamma = 0.5;
    int n_lambda = 100;
    double lambda_min_ratio = 0.01;

    int k_min = 3;
    int k_max = 5;
    bool network_based = true;
    bool subscale = true;
    bool positive_only = false;
    SpinglassOptions spinglass;
    ExpansionOptions expansion;
    int sample_per_pair = 20;
    int intra_cap = 5000;

    ValidationConfig validation;

    fs::path output_dir;
    std::uint64_t seed = 0;

    std::vector<std::string> layer_ids() const {
        std::vector<std::string> out;
        if (synthetic)
            for (auto r : synthetic->regimes) out.emplace_back(to_string(r));
        for (const auto& l : layers) out.push_back(l.id);
        return out;
    }

    /// Effective configuration with every default filled in; the output
    /// directory is a location, not a parameter, and is left out.
    json to_json() const {
        json j;
        j["seed"] = seed;
        json layers_j = json::array();
        for (const auto& l : layers) layers_j.push_back({{"id", l.id}, {"paths", l.paths}});
        j["layers"] = layers_j;
        if (synthetic) {
            json regimes = json::array();
            for (auto r : synthetic->regimes) regimes.push_back(to_string(r));
            j["synthetic"] = {{"regimes", regimes},
                              {"n_samples", synthetic->n_samples},
                              {"n_triplets", synthetic->n_triplets},
                              {"likert_levels", synthetic->likert_levels}};
            if (synthetic->loadings) j["synthetic"]["loadings"] = *synthetic->loadings;
        }
        j["scale_map"] = scale_map ? json(*scale_map) : json(nullptr);
        json methods_j = json::array();
        for (auto m : methods) methods_j.push_back(to_string(m));
        j["network"] = {{"methods", methods_j},
                        {"ebic_gamma", ebic_gamma},
                        {"n_lambda", n_lambda},
                        {"lambda_min_ratio", lambda_min_ratio}};
        j["candidates"] = {{"k_min", k_min},
                           {"k_max", k_max},
                           {"network_based", network_based},
                           {"subscale", subscale},
                           {"positive_only", positive_only},
                           {"spinglass",
                            {{"gamma", spinglass.gamma},
                             {"spins_max", spinglass.spins_max},
                             {"restarts", spinglass.restarts},
                             {"t_start", spinglass.anneal.t_start},
                             {"t_stop", spinglass.anneal.t_stop},
                             {"cooling", spinglass.anneal.cooling}}},
                           {"expansion", {{"top_m", expansion.top_m}, {"min_gain", expansion.min_gain}}},
                           {"sample_per_pair", sample_per_pair},
                           {"intra_cap", intra_cap}};
        j["validation"] = {{"n_perm", validation.n_perm},
                           {"alpha_fdr", validation.alpha_fdr},
                           {"effect_floor", validation.effect_floor},
                           {"n_boot", validation.n_boot},
                           {"ci_level", validation.ci_level},
                           {"stability_level", validation.stability_level},
                           {"max_dropped_fraction", validation.max_dropped_fraction}};
        return j;
    }

    std::string sha256() const { return io::sha256_hex(to_json().dump()); }
};

namespace detail {

/// Reads the keys of one JSON object, rejecting anything unexpected.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }
    ~ObjectReader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (const auto& [key, v] : j_.items())
            if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
    }
    ObjectReader(const ObjectReader&) = delete;
    ObjectReader& operator=(const ObjectReader&) = delete;

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    void mark(const std::string& key) { used_.insert(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        used_.insert(key);
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

inline std::string checked_path(const std::string& given, const fs::path& base, fs::path& resolved,
                                const std::string& what) {
    resolved = fs::path(given).is_absolute() ? fs::path(given) : base / given;
    if (!fs::is_regular_file(resolved)) throw ConfigError(what + " '" + given + "' does not exist");
    return given;
}

} // namespace detail

/// `base` resolves relative paths. A missing seed is an error unless `seed_override` is set.
inline PipelineConfig parse_config(const json& j, const fs::path& base, std::optional<std::uint64_t> seed_override = {}) {
    PipelineConfig cfg;
    detail::ObjectReader top(j, "config");

    if (seed_override) {
        cfg.seed = *seed_override;
        top.mark("seed");
    } else {
        if (!top.has("seed")) throw ConfigError("config needs a \"seed\" (or pass --seed)");
        top.read("seed", cfg.seed);
    }

    std::string out_dir;
    top.read("output_dir", out_dir);
    if (!out_dir.empty()) cfg.output_dir = fs::path(out_dir).is_absolute() ? fs::path(out_dir) : base / out_dir;

    if (top.has("layers")) {
        const auto& arr = top.raw("layers");
        if (!arr.is_array()) throw ConfigError("layers must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            detail::ObjectReader lr(arr[i], "layers[" + std::to_string(i) + "]");
            LayerSource src;
            lr.read("id", src.id);
            if (src.id.empty()) throw ConfigError("layers[" + std::to_string(i) + "] needs an id");
            std::string single;
            lr.read("path", single);
            lr.read("paths", src.paths);
            if (!single.empty()) src.paths.insert(src.paths.begin(), single);
            if (src.paths.empty()) throw ConfigError("layer '" + src.id + "' needs a path");
            for (const auto& p : src.paths) {
                fs::path r;
                detail::checked_path(p, base, r, "layer '" + src.id + "' data file");
                src.resolved.push_back(r);
            }
            cfg.layers.push_back(std::move(src));
        }
    } else {
        top.mark("layers");
    }

    if (top.has("synthetic")) {
        detail::ObjectReader sr(top.raw("synthetic"), "synthetic");
        SyntheticSource s;
        std::vector<std::string> regimes;
        sr.read("regimes", regimes);
        for (const auto& r : regimes) s.regimes.push_back(regime_from_string(r));
        if (s.regimes.empty()) throw ConfigError("synthetic.regimes must list at least one regime");
        sr.read("n_samples", s.n_samples);
        sr.read("n_triplets", s.n_triplets);
        sr.read("likert_levels", s.likert_levels);
        if (sr.has("loadings")) {
            std::array<double, 3> a{};
            sr.read("loadings", a);
            s.loadings = a;
        } else {
            sr.mark("loadings");
        }
        if (s.n_samples < 10) throw ConfigError("synthetic.n_samples must be >= 10");
        if (s.n_triplets < 1) throw ConfigError("synthetic.n_triplets must be >= 1");
        if (s.likert_levels == 1 || s.likert_levels < 0) throw ConfigError("synthetic.likert_levels must be 0 or >= 2");
        cfg.synthetic = s;
    } else {
        top.mark("synthetic");
    }

    if (top.has("scale_map")) {
        std::string p;
        top.read("scale_map", p);
        fs::path r;
        cfg.scale_map = detail::checked_path(p, base, r, "scale map");
        cfg.scale_map_resolved = r;
    } else {
        top.mark("scale_map");
    }

    if (top.has("network")) {
        detail::ObjectReader nr(top.raw("network"), "network");
        std::vector<std::string> methods;
        nr.read("methods", methods);
        if (nr.has("methods")) {
            cfg.methods.clear();
            for (const auto& m : methods) {
                auto cm = correlation_method_from_string(m);
                if (std::find(cfg.methods.begin(), cfg.methods.end(), cm) == cfg.methods.end()) cfg.methods.push_back(cm);
            }
        }
        nr.read("ebic_gamma", cfg.ebic_gamma);
        nr.read("n_lambda", cfg.n_lambda);
        nr.read("lambda_min_ratio", cfg.lambda_min_ratio);
    } else {
        top.mark("network");
    }

    if (top.has("candidates")) {
        detail::ObjectReader cr(top.raw("candidates"), "candidates");
        cr.read("k_min", cfg.k_min);
        cr.read("k_max", cfg.k_max);
        cr.read("network_based", cfg.network_based);
        cr.read("subscale", cfg.subscale);
        cr.read("positive_only", cfg.positive_only);
        if (cr.has("spinglass")) {
            detail::ObjectReader gr(cr.raw("spinglass"), "candidates.spinglass");
            gr.read("gamma", cfg.spinglass.gamma);
            gr.read("spins_max", cfg.spinglass.spins_max);
            gr.read("restarts", cfg.spinglass.restarts);
            gr.read("t_start", cfg.spinglass.anneal.t_start);
            gr.read("t_stop", cfg.spinglass.anneal.t_stop);
            gr.read("cooling", cfg.spinglass.anneal.cooling);
        } else {
            cr.mark("spinglass");
        }
        if (cr.has("expansion")) {
            detail::ObjectReader er(cr.raw("expansion"), "candidates.expansion");
            er.read("top_m", cfg.expansion.top_m);
            er.read("min_gain", cfg.expansion.min_gain);
        } else {
            cr.mark("expansion");
        }
        cr.read("sample_per_pair", cfg.sample_per_pair);
        cr.read("intra_cap", cfg.intra_cap);
    } else {
        top.mark("candidates");
    }

    if (top.has("validation")) {
        detail::ObjectReader vr(top.raw("validation"), "validation");
        vr.read("n_perm", cfg.validation.n_perm);
        vr.read("alpha_fdr", cfg.validation.alpha_fdr);
        vr.read("effect_floor", cfg.validation.effect_floor);
        vr.read("n_boot", cfg.validation.n_boot);
        vr.read("ci_level", cfg.validation.ci_level);
        vr.read("stability_level", cfg.validation.stability_level);
        vr.read("max_dropped_fraction", cfg.validation.max_dropped_fraction);
    } else {
        top.mark("validation");
    }

    if (cfg.layers.empty() && !cfg.synthetic) throw ConfigError("config needs \"layers\" or \"synthetic\"");
    if (cfg.methods.empty()) throw ConfigError("network.methods must not be empty");
    if (cfg.k_min < 3 || cfg.k_max > 5 || cfg.k_min > cfg.k_max)
        throw ConfigError("candidate orders must satisfy 3 <= k_min <= k_max <= 5");
    if (cfg.n_lambda < 2) throw ConfigError("network.n_lambda must be >= 2");
    if (!(cfg.lambda_min_ratio > 0 && cfg.lambda_min_ratio < 1))
        throw ConfigError("network.lambda_min_ratio must be in (0,1)");
    if (cfg.ebic_gamma < 0) throw ConfigError("network.ebic_gamma must be >= 0");
    if (cfg.sample_per_pair < 0 || cfg.intra_cap < 0) throw ConfigError("candidate sampling limits must be >= 0");
    if (cfg.expansion.top_m < 0) throw ConfigError("candidates.expansion.top_m must be >= 0");
    cfg.validation.check();

    std::set<std::string> ids;
    for (const auto& id : cfg.layer_ids()) {
        if (!ids.insert(id).second) throw ConfigError("duplicate layer id '" + id + "'");
    }
    return cfg;
}

inline PipelineConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override = {}) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error&) {
        throw ConfigError("cannot read config '" + path.string() + "'");
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."), seed_override);
}

// ---------------------------------------------------------------------------
// execution

struct RunOptions {
    PipelineStage from = PipelineStage::network;
    PipelineStage to = PipelineStage::metrics;
    std::size_t jobs = 1;
    std::function<void(const std::string&)> log;
};

/// relative path -> file content
using ArtifactTree = std::map<std::string, std::string>;

struct PipelineResult {
    ArtifactTree artifacts; // includes manifest.json
    json manifest;
};

/// File-name form of a layer id (BED/OSFED -> BED_OSFED).
inline std::string layer_stem(const std::string& id) {
    std::string s = id;
    for (auto& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

namespace detail {

struct LayerState {
    std::string id;
    std::string stem;
    std::optional<ResponseMatrix> data;
    std::optional<SyntheticSystem> truth;
    std::map<CorrelationMethod, DyadicNetwork> networks;
    std::optional<CandidateSet> candidates;
    std::vector<std::string> candidate_notes;
    std::optional<std::vector<ValidatedHyperedge>> hyperedges;
    ArtifactTree produced;
    std::exception_ptr failure;
    std::string failed_stage;
};

inline const std::map<PipelineStage, std::vector<std::string>> kStageDirs{
    {PipelineStage::network, {"data/", "network/"}},
    {PipelineStage::candidates, {"candidates/"}},
    {PipelineStage::validate, {"validation/", "hyperedges/"}},
    {PipelineStage::multiplex, {"multiplex/"}},
    {PipelineStage::metrics, {"metrics/"}},
};

inline bool owned_by_stage_at_or_after(const std::string& rel, PipelineStage from) {
    for (const auto& [stage, dirs] : kStageDirs)
        if (stage >= from)
            for (const auto& d : dirs)
                if (rel.rfind(d, 0) == 0) return true;
    return false;
}

inline const std::string& need(const ArtifactTree& tree, const std::string& rel, PipelineStage stage) {
    auto it = tree.find(rel);
    if (it == tree.end())
        throw SchemaError("missing artifact '" + rel + "' required by stage '" + std::string(to_string(stage)) +
                          "'; run the earlier stages first");
    return it->second;
}

inline ArtifactTree load_tree(const fs::path& root) {
    ArtifactTree tree;
    if (!fs::is_directory(root)) return tree;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "manifest.json" || rel.rfind("failed/", 0) == 0) continue;
        tree[rel] = io::read_file(entry.path());
    }
    return tree;
}

inline void clear_owned(const fs::path& root) {
    if (!fs::is_directory(root)) return;
    for (const char* d : {"data", "network", "candidates", "validation", "hyperedges", "multiplex", "metrics", "failed"})
        fs::remove_all(root / d);
    fs::remove(root / "manifest.json");
}

inline void write_tree(const fs::path& root, const ArtifactTree& tree) {
    for (const auto& [rel, content] : tree) io::write_file(root / rel, content);
}

inline std::string expected_class(double omega, double floor) {
    if (std::abs(omega) < floor) return "none";
    return omega > 0 ? "redundancy" : "synergy";
}

inline json recovery_summary(const LayerState& st, const std::vector<ValidatedHyperedge>& edges, double floor) {
    json planted = json::array();
    std::map<Multiplet, const ValidatedHyperedge*> found;
    for (const auto& e : edges) found[e.multiplet] = &e;
    int expected = 0, recovered = 0, sign_errors = 0, null_hits = 0;
    for (const auto& p : st.truth->planted) {
        const Multiplet m(ItemSet(p.items.begin(), p.items.end()));
        const auto cls = expected_class(p.omega, floor);
        auto it = found.find(m);
        json entry{{"items", io::split(io::ItemIndex(st.data->item_ids()).items_of(m), ',')},
                   {"e_cov", p.spec.e_cov},
                   {"analytic_omega", io::format_double(p.omega)},
                   {"expected", cls},
                   {"validated", nullptr},
                   {"omega_hat", nullptr}};
        if (it != found.end()) {
            entry["validated"] = to_string(it->second->interaction_type);
            entry["omega_hat"] = io::format_double(it->second->omega);
        }
        if (cls != "none") {
            ++expected;
            if (it != found.end()) {
                if (to_string(it->second->interaction_type) == cls)
                    ++recovered;
                else
                    ++sign_errors;
            }
        } else if (it != found.end()) {
            ++null_hits;
        }
        planted.push_back(entry);
    }
    int cross_block = 0;
    for (const auto& e : edges) {
        std::set<int> blocks;
        for (int i : e.multiplet.items()) blocks.insert(st.truth->block_of[static_cast<std::size_t>(i)]);
        cross_block += blocks.size() > 1;
    }
    return {{"planted", planted},
            {"expected_signal", expected},
            {"recovered", recovered},
            {"sign_errors", sign_errors},
            {"validated_near_zero", null_hits},
            {"cross_block_validated", cross_block}};
}

} // namespace detail

class Pipeline {
public:
    Pipeline(PipelineConfig cfg, RunOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {
        meta_.config_sha256 = cfg_.sha256();
        vcfg_ = cfg_.validation;
        vcfg_.seed = derive_seed(cfg_.seed, "validation");
    }

    /// Runs stages [from, to]; inputs of later stages come from the output directory.
    PipelineResult run() {
        if (cfg_.output_dir.empty()) throw ConfigError("no output directory (set output_dir or pass --out)");
        if (opt_.from > opt_.to) throw ConfigError("resume stage comes after the final stage");
        ArtifactTree tree;
        if (opt_.from > PipelineStage::network)
            for (auto& [rel, content] : detail::load_tree(cfg_.output_dir))
                if (!detail::owned_by_stage_at_or_after(rel, opt_.from)) tree.emplace(rel, std::move(content));

        try {
            load_layers();
        } catch (const PipelineError& e) {
            write_failure(tree, e.layer(), e.stage(), e.category(), e.what());
        }
        bool any_failed = false;
        const std::size_t outer = std::max<std::size_t>(1, std::min(opt_.jobs, layers_.size()));
        inner_jobs_ = std::max<std::size_t>(1, opt_.jobs / outer);
        parallel_for(layers_.size(), outer, [&](std::size_t i) { run_layer(layers_[i], tree); });
        for (auto& st : layers_) {
            for (auto& [rel, content] : st.produced) tree[rel] = std::move(content);
            any_failed = any_failed || st.failure;
        }
        if (any_failed) fail(tree);

        std::optional<MultiplexHypergraph> synergy, redundancy;
        const auto& ids = node_ids();
        try {
            if (runs(PipelineStage::multiplex)) {
                synergy.emplace(ids, InteractionType::synergy);
                redundancy.emplace(ids, InteractionType::redundancy);
                for (const auto& st : layers_) {
                    std::vector<ValidatedHyperedge> syn, red;
                    for (const auto& e : *st.hyperedges) (e.omega > 0 ? red : syn).push_back(e);
                    synergy->set_layer(st.id, syn);
                    redundancy->set_layer(st.id, red);
                }
                tree["multiplex/synergy.json"] = io::format_multiplex_json(*synergy, meta_);
                tree["multiplex/redundancy.json"] = io::format_multiplex_json(*redundancy, meta_);
                log("assembled multiplexes");
            } else if (opt_.to >= PipelineStage::metrics) {
                synergy = io::parse_multiplex_json(detail::need(tree, "multiplex/synergy.json", PipelineStage::metrics),
                                                   "multiplex/synergy.json");
                redundancy = io::parse_multiplex_json(
                    detail::need(tree, "multiplex/redundancy.json", PipelineStage::metrics), "multiplex/redundancy.json");
            }
        } catch (const Error& e) {
            fail_global(tree, "multiplex", e);
        }

        json metric_warnings = json::array();
        try {
            if (runs(PipelineStage::metrics)) {
                for (const auto* mux : {&*synergy, &*redundancy}) {
                    const auto type = std::string(to_string(mux->interaction_type()));
                    const auto prof = weighted_degrees(*mux);
                    const auto v = nswd(prof, *scale_map_);
                    const auto pats = extract_patterns(*mux, *scale_map_);
                    for (const auto& w : v.warnings) metric_warnings.push_back(type + ": " + w);
                    for (const auto& st : layers_) {
                        const auto base = "metrics/" + type + "/" + st.stem;
                        tree[base + ".items.tsv"] =
                            io::format_item_metrics_tsv(prof.layers.at(st.id), ids, *scale_map_, meta_);
                        tree[base + ".nswd.tsv"] = io::format_nswd_tsv(v.by_layer.at(st.id), *scale_map_, meta_);
                        tree[base + ".patterns.tsv"] = io::format_patterns_tsv(pats.at(st.id), meta_);
                    }
                }
                log("wrote metrics");
            }
        } catch (const Error& e) {
            fail_global(tree, "metrics", e);
        }

        PipelineResult out;
        out.manifest = manifest(tree, metric_warnings);
        tree["manifest.json"] = io::dump(out.manifest);
        detail::clear_owned(cfg_.output_dir);
        detail::write_tree(cfg_.output_dir, tree);
        out.artifacts = std::move(tree);
        return out;
    }

private:
    bool runs(PipelineStage s) const { return opt_.from <= s && s <= opt_.to; }
    bool needed(PipelineStage s) const { return s <= opt_.to; }

    void log(const std::string& msg) const {
        if (opt_.log) opt_.log(msg);
    }

    const std::vector<std::string>& node_ids() const { return layers_.front().data->item_ids(); }

    ResponseMatrix read_layer(const LayerSource& src) const {
        std::optional<ResponseMatrix> m;
        for (std::size_t i = 0; i < src.resolved.size(); ++i) {
            auto part = io::parse_response_csv(io::read_file(src.resolved[i]), src.id, src.paths[i]);
            m = m ? merge_layers(*m, part) : std::move(part);
        }
        return ResponseMatrix(m->values(), m->item_ids(), src.id, m->likert());
    }

    void load_layers() {
        std::optional<std::array<double, 3>> loadings;
        if (cfg_.synthetic) {
            loadings = cfg_.synthetic->loadings;
            if (!loadings) {
                const auto cal = calibrate_loadings(cfg_.validation.effect_floor);
                if (!cal.feasible)
                    throw ConfigError("no loadings separate the synthetic regimes at effect_floor " +
                                      io::format_double(cfg_.validation.effect_floor));
                loadings = cal.loadings;
            }
            calibrated_ = *loadings;
            for (auto r : cfg_.synthetic->regimes) {
                detail::LayerState st;
                st.id = std::string(to_string(r));
                try {
                    const auto spec = regime_system(r, *loadings, cfg_.synthetic->n_samples,
                                                    derive_seed(cfg_.seed, {"synth", st.id}), cfg_.synthetic->n_triplets);
                    st.truth = sample_system(spec);
                    st.data = to_response_matrix(*st.truth, st.id, cfg_.synthetic->likert_levels);
                } catch (const Error& e) {
                    throw PipelineError(e.category(), st.id, "load", e.what());
                }
                layers_.push_back(std::move(st));
            }
        }
        for (const auto& src : cfg_.layers) {
            detail::LayerState st;
            st.id = src.id;
            try {
                st.data = read_layer(src);
            } catch (const Error& e) {
                throw PipelineError(e.category(), st.id, "load", e.what());
            }
            layers_.push_back(std::move(st));
        }
        std::set<std::string> stems;
        for (auto& st : layers_) {
            st.stem = layer_stem(st.id);
            if (!stems.insert(st.stem).second)
                throw ConfigError("layer ids '" + st.id + "' collide after file-name normalization");
            if (st.data->item_ids() != layers_.front().data->item_ids())
                throw PipelineError(Error::Category::data, st.id, "load",
                                    "item set differs from layer '" + layers_.front().id + "'; layers share one node set");
        }
        const auto& ids = node_ids();
        try {
            if (cfg_.synthetic && cfg_.layers.empty()) {
                scale_map_ = block_scale_map(*layers_.front().truth);
            } else if (cfg_.scale_map_resolved) {
                scale_map_ = io::parse_scale_map_json(io::read_file(*cfg_.scale_map_resolved), ids, *cfg_.scale_map);
            } else {
                scale_map_ = ScaleMap::with_complement(static_cast<int>(ids.size()), {});
            }
        } catch (const Error& e) {
            throw PipelineError(e.category(), "*", "load", e.what());
        }
    }

    void run_layer(detail::LayerState& st, const ArtifactTree& tree) {
        const auto& ids = st.data->item_ids();
        auto& out = st.produced;
        const std::string base = st.stem;
        std::string stage = "network";
        try {
            if (runs(PipelineStage::network)) {
                if (st.truth) {
                    out["data/" + base + ".csv"] = io::format_response_csv(*st.data, meta_);
                    out["data/" + base + ".truth.json"] = truth_json(st);
                    if (&st == &layers_.front())
                        out["data/scale_map.json"] = io::format_scale_map_json(*scale_map_, ids, meta_);
                }
                for (auto method : cfg_.methods) {
                    if (method == CorrelationMethod::polychoric && !st.data->likert())
                        throw ConfigError("polychoric correlation needs Likert data");
                    const auto corr = method == CorrelationMethod::polychoric ? polychoric_corr(*st.data, inner_jobs_)
                                                                              : nonparanormal_corr(*st.data);
                    const auto grid = default_lambda_grid(regularize_correlation(corr.matrix), cfg_.n_lambda,
                                                          cfg_.lambda_min_ratio);
                    auto net = ebic_glasso(corr, st.data->respondents(), cfg_.ebic_gamma, grid);
                    note_connectivity(net);
                    const auto name = "network/" + base + "." + std::string(to_string(method));
                    out[name + ".tsv"] = io::format_network_tsv(net, ids, meta_);
                    out[name + ".json"] = io::format_network_json(net, ids, meta_);
                    st.networks[method] = std::move(net);
                }
                log("layer " + st.id + ": networks fitted");
            } else if (needed(PipelineStage::candidates) && runs(PipelineStage::candidates) && cfg_.network_based) {
                for (auto method : cfg_.methods) {
                    const auto name = "network/" + base + "." + std::string(to_string(method));
                    st.networks[method] = io::parse_network(detail::need(tree, name + ".tsv", PipelineStage::candidates),
                                                            detail::need(tree, name + ".json", PipelineStage::candidates),
                                                            ids, name);
                }
            }
            if (!needed(PipelineStage::candidates)) return;

            stage = "candidates";
            if (runs(PipelineStage::candidates)) {
                CandidateSet cands;
                if (cfg_.network_based) {
                    for (const auto& [method, net] : st.networks) {
                        NetworkCandidateOptions nopt;
                        nopt.k_min = cfg_.k_min;
                        nopt.k_max = cfg_.k_max;
                        nopt.positive_only = cfg_.positive_only;
                        nopt.spinglass = cfg_.spinglass;
                        nopt.spinglass.seed = derive_seed(cfg_.seed, {"spinglass", st.id, to_string(method)});
                        nopt.expansion = cfg_.expansion;
                        auto nc = network_candidates(net, nopt, inner_jobs_);
                        for (const auto& w : nc.communities.warnings)
                            st.candidate_notes.push_back(std::string(to_string(method)) + ": " + w);
                        out["candidates/" + base + "." + std::string(to_string(method)) + ".communities.tsv"] =
                            io::format_communities_tsv(nc.communities, ids, meta_);
                        cands.merge(nc.candidates);
                    }
                }
                if (cfg_.subscale && !scale_map_->scales().empty()) {
                    SubscaleOptions sopt;
                    sopt.k_min = cfg_.k_min;
                    sopt.k_max = cfg_.k_max;
                    sopt.sample_per_pair = cfg_.sample_per_pair;
                    sopt.intra_cap = cfg_.intra_cap;
                    sopt.seed = derive_seed(cfg_.seed, {"subscale", st.id});
                    auto sc = subscale_candidates(*scale_map_, sopt);
                    cands.merge(sc.candidates);
                    st.candidate_notes.insert(st.candidate_notes.end(), sc.notes.begin(), sc.notes.end());
                }
                out["candidates/" + base + ".jsonl"] = io::format_candidates_jsonl(cands, ids, meta_, st.candidate_notes);
                st.candidates = std::move(cands);
                log("layer " + st.id + ": " + std::to_string(st.candidates->size()) + " candidates");
            } else if (runs(PipelineStage::validate)) {
                const auto name = "candidates/" + base + ".jsonl";
                st.candidates = io::parse_candidates_jsonl(detail::need(tree, name, PipelineStage::validate), ids, name);
            }
            if (!needed(PipelineStage::validate)) return;

            stage = "validate";
            if (runs(PipelineStage::validate)) {
                const auto scores = copula_transform(*st.data);
                auto res = validate_all(scores, *st.candidates, vcfg_, inner_jobs_);
                std::vector<ValidatedHyperedge> all = res.synergy;
                all.insert(all.end(), res.redundancy.begin(), res.redundancy.end());
                std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.multiplet < b.multiplet; });
                out["validation/" + base + ".stages.tsv"] = io::format_stage_report_tsv(res.report, ids, meta_);
                out["validation/" + base + ".meta.json"] = validation_meta(st, res.report);
                out["hyperedges/" + base + ".tsv"] = io::format_hyperedges_tsv(all, ids, meta_);
                st.hyperedges = std::move(all);
                log("layer " + st.id + ": " + std::to_string(st.hyperedges->size()) + " hyperedges validated");
            } else {
                const auto name = "hyperedges/" + base + ".tsv";
                st.hyperedges = io::parse_hyperedges_tsv(detail::need(tree, name, PipelineStage::multiplex), ids, name);
            }
        } catch (...) {
            st.failure = std::current_exception();
            st.failed_stage = stage;
        }
    }

    std::string truth_json(const detail::LayerState& st) const {
        json planted = json::array();
        const io::ItemIndex index(st.data->item_ids());
        for (const auto& p : st.truth->planted) {
            const Multiplet m(ItemSet(p.items.begin(), p.items.end()));
            planted.push_back({{"items", io::split(index.items_of(m), ',')},
                               {"loadings", p.spec.loadings},
                               {"e_cov", p.spec.e_cov},
                               {"analytic_omega", io::format_double(p.omega)}});
        }
        return io::dump({{"meta", meta_.to_json()}, {"layer", st.id}, {"planted", planted}});
    }

    std::string validation_meta(const detail::LayerState& st, const StageReport& rep) const {
        return io::dump({{"meta", meta_.to_json()},
                         {"layer", st.id},
                         {"validation_seed", vcfg_.seed},
                         {"stage_counts", stage_counts(rep)}});
    }

    static json stage_counts(const StageReport& rep) {
        std::map<std::string, std::pair<int, int>> c;
        for (auto s : {Stage::permutation, Stage::bootstrap, Stage::hierarchical}) c[std::string(to_string(s))] = {0, 0};
        std::map<std::string, std::map<std::string, int>> reasons;
        for (const auto& r : rep.records) {
            auto& e = c[std::string(to_string(r.stage))];
            ++e.first;
            e.second += r.passed;
            if (!r.passed) ++reasons[std::string(to_string(r.stage))][std::string(to_string(r.reason))];
        }
        json out = json::object();
        for (const auto& [s, e] : c)
            out[s] = {{"entered", e.first}, {"passed", e.second}, {"rejected_by", reasons[s]}};
        return out;
    }

    // Built from the artifact tree so the manifest does not depend on which
    // stages ran in this invocation.
    json layer_summary(const detail::LayerState& st, const ArtifactTree& tree) const {
        const auto& ids = st.data->item_ids();
        json j{{"respondents", st.data->respondents()}, {"items", st.data->items()}};
        if (st.data->likert())
            j["likert"] = {st.data->likert()->min, st.data->likert()->max};
        else
            j["likert"] = nullptr;
        json nets = json::object();
        for (auto m : cfg_.methods) {
            const auto name = "network/" + st.stem + "." + std::string(to_string(m)) + ".json";
            if (!tree.count(name)) continue;
            const auto side = io::parse_json(tree.at(name), name);
            nets[std::string(to_string(m))] = {
                {"lambda_selected", side.at("lambda_selected")}, {"edges", side.at("n_edges")}, {"warnings", side.at("warnings")}};
        }
        if (!nets.empty()) j["networks"] = nets;
        const auto cand = "candidates/" + st.stem + ".jsonl";
        if (tree.count(cand)) {
            std::map<std::string, int> by_order, by_prov;
            const auto set = io::parse_candidates_jsonl(tree.at(cand), ids, cand);
            for (const auto& c : set.flatten()) {
                ++by_order[std::to_string(c.multiplet.order())];
                ++by_prov[std::string(to_string(c.provenance))];
            }
            j["candidates"] = {{"total", set.size()}, {"by_order", by_order}, {"by_provenance", by_prov}};
            const auto notes = io::parse_candidate_notes(tree.at(cand), cand);
            if (!notes.empty()) j["candidates"]["notes"] = notes;
        }
        const auto rep = "validation/" + st.stem + ".stages.tsv";
        if (tree.count(rep)) j["validation"] = stage_counts(io::parse_stage_report_tsv(tree.at(rep), ids, rep));
        if (const auto edges = stored_hyperedges(st, tree)) {
            int syn = 0, red = 0;
            for (const auto& e : *edges) (e.omega > 0 ? red : syn) += 1;
            j["hyperedges"] = {{"synergy", syn}, {"redundancy", red}};
        }
        return j;
    }

    std::optional<std::vector<ValidatedHyperedge>> stored_hyperedges(const detail::LayerState& st,
                                                                     const ArtifactTree& tree) const {
        const auto name = "hyperedges/" + st.stem + ".tsv";
        if (!tree.count(name)) return std::nullopt;
        return io::parse_hyperedges_tsv(tree.at(name), st.data->item_ids(), name);
    }

    json manifest(const ArtifactTree& tree, const json& metric_warnings) const {
        json seeds{{"master", cfg_.seed}, {"validation", vcfg_.seed}};
        json layers = json::object(), recovery = json::object();
        for (const auto& st : layers_) {
            json ls{{"spinglass", json::object()}, {"subscale", derive_seed(cfg_.seed, {"subscale", st.id})}};
            for (auto m : cfg_.methods)
                ls["spinglass"][std::string(to_string(m))] = derive_seed(cfg_.seed, {"spinglass", st.id, to_string(m)});
            if (st.truth) ls["synth"] = derive_seed(cfg_.seed, {"synth", st.id});
            seeds["layers"][st.id] = ls;
            layers[st.id] = layer_summary(st, tree);
            if (st.truth)
                if (const auto edges = stored_hyperedges(st, tree))
                    recovery[st.id] = detail::recovery_summary(st, *edges, cfg_.validation.effect_floor);
        }
        json artifacts = json::object();
        for (const auto& [rel, content] : tree) artifacts[rel] = io::sha256_hex(content);
        json m{{"tool", "homux"},
               {"version", io::kToolVersion},
               {"config_sha256", meta_.config_sha256},
               {"config", cfg_.to_json()},
               {"seeds", seeds},
               {"layers", layers},
               {"artifacts", artifacts},
               {"metric_warnings", metric_warnings}};
        if (calibrated_) m["synthetic_loadings"] = *calibrated_;
        if (!recovery.empty()) m["recovery"] = recovery;
        return m;
    }

    [[noreturn]] void write_failure(const ArtifactTree& tree, const std::string& layer, const std::string& stage,
                                    Error::Category cat, const std::string& what) {
        ArtifactTree failed;
        for (const auto& [rel, content] : tree) failed["failed/" + rel] = content;
        failed["failed/error.json"] = io::dump({{"meta", meta_.to_json()},
                                                {"layer", layer},
                                                {"stage", stage},
                                                {"exit_code", exit_code(cat)},
                                                {"message", what}});
        detail::clear_owned(cfg_.output_dir);
        detail::write_tree(cfg_.output_dir, failed);
        throw PipelineError(cat, layer, stage, what);
    }

    [[noreturn]] void fail(const ArtifactTree& tree) {
        for (const auto& st : layers_) {
            if (!st.failure) continue;
            try {
                std::rethrow_exception(st.failure);
            } catch (const Error& e) {
                write_failure(tree, st.id, st.failed_stage, e.category(), e.what());
            } catch (const std::exception& e) {
                write_failure(tree, st.id, st.failed_stage, Error::Category::estimation, e.what());
            }
        }
        throw std::logic_error("no failed layer");
    }

    [[noreturn]] void fail_global(const ArtifactTree& tree, const std::string& stage, const Error& e) {
        write_failure(tree, "*", stage, e.category(), e.what());
    }

    PipelineConfig cfg_;
    RunOptions opt_;
    io::Meta meta_;
    ValidationConfig vcfg_;
    std::vector<detail::LayerState> layers_;
    std::optional<ScaleMap> scale_map_;
    std::optional<std::array<double, 3>> calibrated_;
    std::size_t inner_jobs_ = 1;
};

inline PipelineResult run_pipeline(const PipelineConfig& cfg, const RunOptions& opt = {}) {
    return Pipeline(cfg, opt).run();
}

} // namespace homux

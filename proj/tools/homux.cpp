#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "homux/pipeline.hpp"

namespace {

using namespace homux;

struct StageArgs {
    std::string config;
    std::string out;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::string resume;
};

void add_common(CLI::App* cmd, StageArgs& a) {
    cmd->add_option("--config", a.config, "pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--jobs", a.jobs, "maximum worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a.seed, "master seed, overrides the config");
    cmd->add_option("--out", a.out, "output directory, overrides the config");
}

int run_stages(const StageArgs& a, PipelineStage from, PipelineStage to) {
    auto cfg = load_config(a.config, a.seed);
    if (!a.out.empty()) cfg.output_dir = a.out;
    RunOptions opt;
    opt.from = from;
    opt.to = to;
    opt.jobs = a.jobs;
    opt.log = [](const std::string& m) { spdlog::info("{}", m); };
    spdlog::info("config sha256 {}", cfg.sha256());
    const auto res = run_pipeline(cfg, opt);
    spdlog::info("wrote {} artifacts to {}", res.artifacts.size(), cfg.output_dir.string());
    return 0;
}

struct SynthArgs {
    std::vector<std::string> regimes{"near_zero", "redundant", "synergistic", "mixed"};
    int n = 5000;
    int triplets = 9;
    int likert = 0;
    std::uint64_t seed = 1;
    double floor = 0.15;
    std::string out;
};

// Writes one CSV per regime, the block scale map, ground truth, and a config
// that runs the pipeline on those files.
int run_synth(const SynthArgs& a) {
    const auto cal = calibrate_loadings(a.floor);
    if (!cal.feasible) throw ConfigError("no loadings separate the regimes at floor " + io::format_double(a.floor));
    json params{{"regimes", a.regimes}, {"n_samples", a.n},       {"n_triplets", a.triplets},
                {"likert_levels", a.likert}, {"seed", a.seed}, {"floor", a.floor}};
    const io::Meta meta{io::sha256_hex(params.dump())};
    const fs::path out(a.out);
    json layers = json::array();
    std::optional<SyntheticSystem> first;
    for (const auto& name : a.regimes) {
        const auto regime = regime_from_string(name);
        const auto sys = sample_system(regime_system(regime, cal.loadings, a.n, derive_seed(a.seed, {"synth", name}), a.triplets));
        const auto data = to_response_matrix(sys, name, a.likert);
        io::write_file(out / (name + ".csv"), io::format_response_csv(data, meta));
        json planted = json::array();
        for (const auto& p : sys.planted) {
            std::vector<std::string> items;
            for (int i : p.items) items.push_back(data.item_ids()[static_cast<std::size_t>(i)]);
            planted.push_back({{"items", items}, {"e_cov", p.spec.e_cov}, {"analytic_omega", io::format_double(p.omega)}});
        }
        io::write_file(out / (name + ".truth.json"),
                       io::dump({{"meta", meta.to_json()}, {"layer", name}, {"loadings", cal.loadings}, {"planted", planted}}));
        layers.push_back({{"id", name}, {"path", name + ".csv"}});
        if (!first) first = sys;
    }
    if (first) {
        io::write_file(out / "scale_map.json",
                       io::format_scale_map_json(block_scale_map(*first), synthetic_item_ids(static_cast<int>(first->data.cols())), meta));
    }
    json cfg{{"seed", a.seed},
             {"output_dir", "results"},
             {"layers", layers},
             {"scale_map", "scale_map.json"},
             {"validation", {{"effect_floor", a.floor}}}};
    io::write_file(out / "config.json", io::dump(cfg));
    spdlog::info("wrote {} synthetic layers to {}", a.regimes.size(), out.string());
    return 0;
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("homux");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("HOMUX_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Higher-order interaction analysis of questionnaire data"};
    app.set_version_flag("--version", std::string(homux::io::kToolVersion));
    app.require_subcommand(1);

    StageArgs stage_args;
    const std::vector<std::pair<std::string, homux::PipelineStage>> stages{
        {"network", homux::PipelineStage::network},     {"candidates", homux::PipelineStage::candidates},
        {"validate", homux::PipelineStage::validate},   {"multiplex", homux::PipelineStage::multiplex},
        {"metrics", homux::PipelineStage::metrics}};
    const std::map<std::string, std::string> help{
        {"network", "fit the per-layer dyadic networks"},
        {"candidates", "generate candidate multiplets from stored networks"},
        {"validate", "validate stored candidates"},
        {"multiplex", "assemble the synergy and redundancy multiplexes"},
        {"metrics", "compute degree, NSWD and pattern tables"}};
    std::map<CLI::App*, homux::PipelineStage> stage_of;
    for (const auto& [name, st] : stages) {
        auto* cmd = app.add_subcommand(name, help.at(name));
        add_common(cmd, stage_args);
        stage_of[cmd] = st;
    }
    auto* all = app.add_subcommand("run-all", "run every stage");
    add_common(all, stage_args);
    all->add_option("--resume", stage_args.resume, "start at this stage, reusing earlier artifacts")
        ->check(CLI::IsMember({"network", "candidates", "validate", "multiplex", "metrics"}));

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "write synthetic regime datasets with ground truth");
    synth->add_option("--regime", synth_args.regimes, "regimes to generate")
        ->check(CLI::IsMember({"near_zero", "redundant", "synergistic", "mixed"}));
    synth->add_option("--n", synth_args.n, "respondents per dataset")->check(CLI::Range(10, 100000000));
    synth->add_option("--triplets", synth_args.triplets, "planted triplets per dataset")->check(CLI::PositiveNumber);
    synth->add_option("--likert", synth_args.likert, "discretize into this many levels (0 keeps continuous)");
    synth->add_option("--seed", synth_args.seed, "seed")->required();
    synth->add_option("--floor", synth_args.floor, "effect floor used for loading calibration");
    synth->add_option("--out", synth_args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (all->parsed()) {
            const auto from = stage_args.resume.empty() ? homux::PipelineStage::network
                                                        : homux::pipeline_stage_from_string(stage_args.resume);
            return run_stages(stage_args, from, homux::PipelineStage::metrics);
        }
        for (const auto& [cmd, st] : stage_of)
            if (cmd->parsed()) return run_stages(stage_args, st, st);
    } catch (const homux::Error& e) {
        spdlog::error("{}", e.what());
        return homux::exit_code(e.category());
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return 1;
    }
    return 0;
}

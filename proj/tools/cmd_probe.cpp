#include <algorithm>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "commands.hpp"
#include "selfie/error.hpp"
#include "selfie/probe.hpp"
#include "selfie/rng.hpp"

namespace selfie::cli {

namespace {

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// Keeps positions [offset, offset + width) of the grid.
HeatmapGrid crop(const HeatmapGrid& g, std::size_t offset, std::size_t width) {
    HeatmapGrid out = g;
    out.positions.assign(g.positions.begin() + static_cast<std::ptrdiff_t>(offset),
                         g.positions.begin() + static_cast<std::ptrdiff_t>(offset + width));
    out.hits.clear();
    for (std::size_t li = 0; li < g.layers.size(); ++li) {
        for (std::size_t pi = offset; pi < offset + width; ++pi) out.hits.push_back(g.hit_count(li, pi));
    }
    out.alignment_offset = static_cast<int>(offset);
    return out;
}

std::string heatmap_csv(const HeatmapGrid& g) {
    std::ostringstream out;
    out.precision(6);
    out << "layer";
    for (auto p : g.positions) out << ",p" << p;
    out << '\n';
    for (std::size_t li = 0; li < g.layers.size(); ++li) {
        out << 'L' << g.layers[li];
        for (std::size_t pi = 0; pi < g.positions.size(); ++pi) out << ',' << g.rate(li, pi);
        out << '\n';
    }
    return out.str();
}

nlohmann::json records_json(const std::vector<GenerationRecord>& records) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : records) {
        out.push_back({{"text", r.text}, {"scale", r.scale}, {"seed", r.seed}, {"stop", to_string(r.stop_reason)}});
    }
    return out;
}

int probe_bridge(const SharedFlags& flags, const ProbeArgs& args, const RunConfig& config) {
    if (args.cases.empty()) throw UsageError("bridge probe needs a case file: pass --cases <file.jsonl>");
    const std::filesystem::path out = config.out;
    const auto cases = load_bridge_cases(args.cases);
    if (cases.empty()) fail(ErrorCode::empty_input, "case file '" + args.cases + "' has no cases");
    const auto lm = make_backend(config);
    const auto trained = require_checkpoint(flags, *lm);
    const auto untrained = Adapter::create(AdapterKind::scale_only, lm->dims(), 0, AdapterInit{1.0, config.seed});
    const auto rendered = render_template(*lm, config.prompt);
    const auto& p = config.probe;
    const auto layers = p.layers.empty() ? iota_n(lm->layer_count()) : p.layers;

    BridgeProbeConfig cfg;
    cfg.samples = p.samples;
    cfg.temperature = p.temperature;
    cfg.cycle_window = p.cycle_window;
    cfg.fixed_scale = p.fixed_scale;
    cfg.max_tokens = p.max_tokens;

    struct CaseGrids {
        HeatmapGrid trained, untrained;
        std::optional<std::size_t> offset;
    };
    std::vector<CaseGrids> grids;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto positions = p.positions.empty() ? iota_n(lm->tokenize(cases[c].prompt).size()) : p.positions;
        cfg.seed = derive_seed(config.seed, c);
        CaseGrids g{bridge_heatmap(trained, *lm, rendered, cases[c], layers, positions, config.scale_grid, cfg), {},
                    std::nullopt};
        std::map<std::string, std::vector<double>> series{{"trained", g.trained.max_over_layers()}};
        if (p.include_untrained) {
            g.untrained = bridge_heatmap(untrained, *lm, rendered, cases[c], layers, positions, config.scale_grid, cfg);
            series["untrained"] = g.untrained.max_over_layers();
        }
        g.offset = align_position_zero(series);
        grids.push_back(std::move(g));
    }

    // Aligned grids are cropped to the narrowest remaining width so every case shares one shape.
    std::size_t width = std::numeric_limits<std::size_t>::max();
    for (const auto& g : grids) width = std::min(width, g.trained.positions.size() - g.offset.value_or(0));

    nlohmann::json case_rows = nlohmann::json::array();
    std::vector<HeatmapGrid> aligned_trained, aligned_untrained;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& g = grids[c];
        nlohmann::json row = {{"prompt", cases[c].prompt},
                              {"bridge_aliases", cases[c].bridge_aliases},
                              {"alignment_offset", g.offset ? nlohmann::json(*g.offset) : nlohmann::json(nullptr)},
                              {"trained", g.trained.to_json()}};
        aligned_trained.push_back(crop(g.trained, g.offset.value_or(0), width));
        if (p.include_untrained) {
            row["untrained"] = g.untrained.to_json();
            aligned_untrained.push_back(crop(g.untrained, g.offset.value_or(0), width));
        }
        case_rows.push_back(std::move(row));
        if (flags.plot) {
            const auto stem = "heatmap_case" + std::to_string(c);
            write_text(out / (stem + "_trained.csv"), heatmap_csv(g.trained));
            plot_csv(out, out / (stem + "_trained.csv"), "heatmap", "Bridge detection, case " + std::to_string(c));
            if (p.include_untrained) {
                write_text(out / (stem + "_untrained.csv"), heatmap_csv(g.untrained));
                plot_csv(out, out / (stem + "_untrained.csv"), "heatmap",
                         "Bridge detection, untrained, case " + std::to_string(c));
            }
        }
    }
    nlohmann::json report = {{"probe", "bridge"}, {"cases", case_rows}, {"aligned_width", width}};
    if (p.include_untrained) {
        report["aggregate"] = aggregate_detection(aligned_trained, aligned_untrained).to_json();
    } else {
        const auto m = aggregate_method(aligned_trained);
        report["aggregate"] = {{"trained",
                                {{"cases", m.cases},
                                 {"prompts_detected", m.prompts_detected},
                                 {"detection_rate", m.detection_rate},
                                 {"sem", m.sem}}}};
    }
    write_text(out / "config.json", config.to_json().dump(2) + "\n");
    write_text(out / "probe_bridge.json", report.dump(2) + "\n");
    std::cout << "bridge probe over " << cases.size() << " case(s): " << report["aggregate"].dump() << "\n";
    return 0;
}

int probe_zero(const SharedFlags& flags, const RunConfig& config) {
    const std::filesystem::path out = config.out;
    const auto lm = make_backend(config);
    const auto adapter = require_checkpoint(flags, *lm);
    const auto rendered = render_template(*lm, config.prompt);
    const auto r = zero_vector_probe(adapter, *lm, rendered, SamplingConfig::nucleus(config.probe.zero_temperature, 1.0),
                                     config.probe.zero_samples, config.seed, config.probe.max_tokens);
    bool equals_bias = adapter.bias().size() == r.injected.size();
    for (std::size_t i = 0; equals_bias && i < r.injected.size(); ++i) {
        equals_bias = r.injected[i] == static_cast<double>(adapter.bias()[i]);
    }
    const nlohmann::json report = {{"probe", "zero"},
                                   {"kind", to_string(adapter.kind())},
                                   {"injected", r.injected},
                                   {"injected_equals_bias", equals_bias},
                                   {"greedy", r.greedy.text},
                                   {"sampled", records_json(r.sampled)}};
    write_text(out / "config.json", config.to_json().dump(2) + "\n");
    write_text(out / "probe_zero.json", report.dump(2) + "\n");
    if (adapter.bias().empty()) {
        std::cout << to_string(adapter.kind()) << " has no bias; injected the zero vector\n";
    } else {
        std::cout << "injected vector equals the adapter bias: " << (equals_bias ? "yes" : "no") << "\n";
    }
    std::cout << "greedy: " << r.greedy.text << "\n";
    return 0;
}

int probe_novel(const SharedFlags& flags, const ProbeArgs& args, const RunConfig& config) {
    const auto prompt = args.prompt.empty() ? config.probe.novel_prompt : args.prompt;
    if (prompt.empty()) throw UsageError("novel probe needs a source prompt: pass --prompt or set probe.novel_prompt");
    const std::filesystem::path out = config.out;
    const auto lm = make_backend(config);
    const auto adapter = require_checkpoint(flags, *lm);
    const auto rendered = render_template(*lm, config.prompt);
    const auto& p = config.probe;
    std::map<int, std::vector<double>> means;
    if (p.subtract_mean) {
        if (p.layer_means.empty()) fail(ErrorCode::config_error, "probe.subtract_mean needs probe.layer_means");
        means = load_layer_means(p.layer_means);
    }
    NovelPromptConfig cfg;
    cfg.layer = p.novel_layer;
    cfg.scale = p.novel_scale;
    cfg.placement = config.scale_grid.placement;
    cfg.sampling = SamplingConfig::nucleus(p.novel_temperature, 1.0);
    cfg.n = p.novel_n;
    cfg.seed = config.seed;
    cfg.max_tokens = p.max_tokens;
    cfg.subtract_mean = p.subtract_mean;
    const auto records = describe_novel_prompt(adapter, *lm, rendered, prompt, means, cfg);
    const nlohmann::json report = {{"probe", "novel"},
                                   {"source_prompt", prompt},
                                   {"layer", cfg.layer},
                                   {"generations", records_json(records)}};
    write_text(out / "config.json", config.to_json().dump(2) + "\n");
    write_text(out / "probe_novel.json", report.dump(2) + "\n");
    for (const auto& r : records) std::cout << r.text << "\n";
    return 0;
}

}  // namespace

int cmd_probe(const SharedFlags& flags, const ProbeArgs& args) {
    const auto config = resolve(flags);
    if (args.kind == "bridge") return probe_bridge(flags, args, config);
    if (args.kind == "zero") return probe_zero(flags, config);
    if (args.kind == "novel") return probe_novel(flags, args, config);
    throw UsageError("probe must be bridge, zero or novel, got '" + args.kind + "'");
}

}  // namespace selfie::cli

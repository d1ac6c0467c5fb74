#include "selfie/probe.hpp"

#include <fstream>
#include <sstream>

#include "selfie/error.hpp"
#include "selfie/metrics.hpp"
#include "selfie/numeric.hpp"
#include "selfie/rng.hpp"
#include "selfie/text.hpp"

namespace selfie {

std::vector<BridgeCase> load_bridge_cases(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_failure, "cannot read case file '" + path.string() + "'");
    std::vector<BridgeCase> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            BridgeCase c{j.at("prompt").get<std::string>(), j.at("bridge_aliases").get<std::vector<std::string>>(),
                         j.value("category", std::string()), j.value("expected_answer", std::string())};
            if (c.bridge_aliases.empty()) {
                fail(ErrorCode::missing_label, path.string() + ":" + std::to_string(lineno) + " has no aliases");
            }
            out.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::corrupt_header, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void save_bridge_cases(const std::vector<BridgeCase>& cases, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_failure, "cannot write '" + path.string() + "'");
    for (const auto& c : cases) {
        out << nlohmann::json{{"prompt", c.prompt},
                              {"bridge_aliases", c.bridge_aliases},
                              {"category", c.category},
                              {"expected_answer", c.expected_answer}}
                   .dump()
            << '\n';
    }
}

double HeatmapGrid::rate(std::size_t li, std::size_t pi) const {
    return static_cast<double>(hit_count(li, pi)) / static_cast<double>(samples_per_cell);
}

bool HeatmapGrid::any_hit() const {
    for (auto h : hits) {
        if (h > 0) return true;
    }
    return false;
}

std::vector<double> HeatmapGrid::max_over_layers() const {
    std::vector<double> out(positions.size(), 0.0);
    for (std::size_t li = 0; li < layers.size(); ++li) {
        for (std::size_t pi = 0; pi < positions.size(); ++pi) out[pi] = std::max(out[pi], rate(li, pi));
    }
    return out;
}

nlohmann::json HeatmapGrid::to_json() const {
    std::vector<double> rates;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        for (std::size_t pi = 0; pi < positions.size(); ++pi) rates.push_back(rate(li, pi));
    }
    return {{"layers", layers},       {"positions", positions},
            {"samples_per_cell", samples_per_cell}, {"temperature", temperature},
            {"alignment_offset", alignment_offset}, {"counts", hits},
            {"rates", rates}};
}

HeatmapGrid HeatmapGrid::from_json(const nlohmann::json& j) {
    HeatmapGrid g;
    try {
        g.layers = j.at("layers").get<std::vector<std::size_t>>();
        g.positions = j.at("positions").get<std::vector<std::size_t>>();
        g.samples_per_cell = j.at("samples_per_cell").get<std::size_t>();
        g.temperature = j.value("temperature", g.temperature);
        g.alignment_offset = j.value("alignment_offset", 0);
        g.hits = j.at("counts").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::corrupt_header, std::string("invalid heatmap: ") + e.what());
    }
    if (g.hits.size() != g.layers.size() * g.positions.size() || g.samples_per_cell == 0) {
        fail(ErrorCode::dimension_mismatch, "heatmap counts do not match its dimensions");
    }
    return g;
}

HeatmapGrid bridge_heatmap(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                           const BridgeCase& bridge, const std::vector<std::size_t>& layers,
                           const std::vector<std::size_t>& positions, const ScaleGrid& grid,
                           const BridgeProbeConfig& config) {
    if (config.samples == 0) fail(ErrorCode::invalid_argument, "samples per cell must be >= 1");
    if (bridge.bridge_aliases.empty()) fail(ErrorCode::missing_label, "bridge case has no aliases");
    if (!lm.capabilities().supports_extraction) fail(ErrorCode::unsupported, "backend cannot extract activations");
    const auto tokens = lm.tokenize(bridge.prompt);
    for (auto p : positions) {
        if (p >= tokens.size()) {
            fail(ErrorCode::out_of_range, "position " + std::to_string(p) + " is beyond the " +
                                              std::to_string(tokens.size()) + "-token prompt");
        }
    }
    for (auto l : layers) {
        if (l > lm.layer_count()) fail(ErrorCode::out_of_range, "layer " + std::to_string(l) + " does not exist");
    }
    grid.validate();
    const auto window = grid.active();
    const auto sampling = SamplingConfig::nucleus(config.temperature, 1.0);

    HeatmapGrid out;
    out.layers = layers;
    out.positions = positions;
    out.samples_per_cell = config.samples;
    out.temperature = config.temperature;
    out.hits.assign(layers.size() * positions.size(), 0);
    for (std::size_t li = 0; li < layers.size(); ++li) {
        for (std::size_t pi = 0; pi < positions.size(); ++pi) {
            const auto h = normalized(lm.hidden_state(tokens, layers[li], positions[pi]));
            const std::uint64_t cell_seed = derive_seed(derive_seed(config.seed, layers[li]), positions[pi]);
            std::size_t hits = 0;
            for (std::size_t s = 0; s < config.samples; ++s) {
                const double scale = config.cycle_window ? window[s % window.size()] : config.fixed_scale;
                const auto rec = generate(lm, rendered, scaled_injection(adapter, h, scale, grid.placement), sampling,
                                          config.max_tokens, derive_seed(cell_seed, s));
                if (contains_any_alias(rec.text, bridge.bridge_aliases)) ++hits;
            }
            out.hits[li * positions.size() + pi] = hits;
        }
    }
    return out;
}

std::optional<std::size_t> align_position_zero(const std::map<std::string, std::vector<double>>& series,
                                               double threshold) {
    if (series.empty()) fail(ErrorCode::empty_input, "alignment needs at least one method series");
    std::optional<std::size_t> best;
    for (const auto& [method, values] : series) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] > threshold) {
                if (!best || i < *best) best = i;
                break;
            }
        }
    }
    return best;
}

MethodDetection aggregate_method(const std::vector<HeatmapGrid>& grids) {
    if (grids.empty()) fail(ErrorCode::empty_input, "no heatmaps to aggregate");
    const auto& first = grids.front();
    MethodDetection m;
    m.cases = grids.size();
    m.mean_grid.assign(first.hits.size(), 0.0);
    std::vector<double> detected;
    for (const auto& g : grids) {
        if (g.layers.size() != first.layers.size() || g.positions.size() != first.positions.size()) {
            fail(ErrorCode::dimension_mismatch, "heatmaps differ in shape after alignment");
        }
        const bool hit = g.any_hit();
        m.prompts_detected += hit ? 1 : 0;
        detected.push_back(hit ? 1.0 : 0.0);
        for (std::size_t c = 0; c < g.hits.size(); ++c) {
            m.mean_grid[c] += static_cast<double>(g.hits[c]) / static_cast<double>(g.samples_per_cell);
        }
    }
    for (auto& v : m.mean_grid) v /= static_cast<double>(grids.size());
    const auto ms = mean_sem(detected);
    m.detection_rate = ms.mean;
    m.sem = ms.sem;
    return m;
}

DetectionAggregate aggregate_detection(const std::vector<HeatmapGrid>& trained,
                                       const std::vector<HeatmapGrid>& untrained) {
    if (trained.size() != untrained.size()) {
        fail(ErrorCode::dimension_mismatch, "trained and untrained case lists differ in length");
    }
    DetectionAggregate a;
    a.trained = aggregate_method(trained);
    a.untrained = aggregate_method(untrained);
    if (trained.front().hits.size() != untrained.front().hits.size()) {
        fail(ErrorCode::dimension_mismatch, "trained and untrained heatmaps differ in shape");
    }
    for (std::size_t i = 0; i < trained.size(); ++i) {
        const bool t = trained[i].any_hit();
        const bool u = untrained[i].any_hit();
        if (t && u) ++a.contingency.both;
        else if (t) ++a.contingency.trained_only;
        else if (u) ++a.contingency.untrained_only;
        else ++a.contingency.neither;
    }
    return a;
}

nlohmann::json DetectionAggregate::to_json() const {
    auto method = [](const MethodDetection& m) {
        return nlohmann::json{{"cases", m.cases},
                              {"prompts_detected", m.prompts_detected},
                              {"detection_rate", m.detection_rate},
                              {"sem", m.sem},
                              {"mean_grid", m.mean_grid}};
    };
    return {{"trained", method(trained)},
            {"untrained", method(untrained)},
            {"contingency",
             {{"both", contingency.both},
              {"trained_only", contingency.trained_only},
              {"untrained_only", contingency.untrained_only},
              {"neither", contingency.neither}}}};
}

ZeroProbeResult zero_vector_probe(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                                  const SamplingConfig& sampling, std::size_t samples, std::uint64_t seed,
                                  std::size_t max_tokens) {
    ZeroProbeResult r;
    r.injected = adapter.apply(std::vector<double>(adapter.dim(), 0.0));
    const InjectionSpec spec{r.injected, 1.0};
    r.greedy = generate(lm, rendered, spec, SamplingConfig::greedy_decoding(), max_tokens, seed);
    r.greedy.item_id = "zero";
    for (std::size_t s = 0; s < samples; ++s) {
        auto rec = generate(lm, rendered, spec, sampling, max_tokens, derive_seed(seed, s + 1));
        rec.item_id = "zero";
        r.sampled.push_back(std::move(rec));
    }
    return r;
}

void save_layer_means(const std::map<int, std::vector<double>>& means, const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [layer, mean] : means) j[std::to_string(layer)] = mean;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_failure, "cannot write '" + path.string() + "'");
    out << j.dump() << '\n';
}

std::map<int, std::vector<double>> load_layer_means(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_failure, "cannot read means file '" + path.string() + "'");
    std::map<int, std::vector<double>> out;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& [key, value] : j.items()) out[std::stoi(key)] = value.get<std::vector<double>>();
    } catch (const std::exception& e) {
        fail(ErrorCode::corrupt_header, "invalid means file '" + path.string() + "': " + e.what());
    }
    return out;
}

std::vector<GenerationRecord> describe_novel_prompt(const Adapter& adapter, const FrozenLM& lm,
                                                    const RenderedTemplate& rendered,
                                                    std::string_view source_prompt,
                                                    const std::map<int, std::vector<double>>& layer_means,
                                                    const NovelPromptConfig& config) {
    if (!lm.capabilities().supports_extraction) fail(ErrorCode::unsupported, "backend cannot extract activations");
    auto h = extract_activation(lm, source_prompt, config.layer);
    if (config.subtract_mean) {
        auto it = layer_means.find(static_cast<int>(config.layer));
        if (it == layer_means.end()) {
            fail(ErrorCode::invalid_argument,
                 "no stored dataset mean for layer " + std::to_string(config.layer) + "; cannot mean-subtract");
        }
        if (it->second.size() != h.size()) fail(ErrorCode::dimension_mismatch, "stored mean has the wrong width");
        for (std::size_t i = 0; i < h.size(); ++i) h[i] -= it->second[i];
    }
    h = normalized(h);
    std::vector<GenerationRecord> out;
    for (std::size_t k = 0; k < config.n; ++k) {
        auto rec = generate(lm, rendered, scaled_injection(adapter, h, config.scale, config.placement), config.sampling,
                            config.max_tokens, derive_seed(config.seed, k));
        rec.item_id = "novel";
        rec.scale = config.scale;
        out.push_back(std::move(rec));
    }
    return out;
}

std::string immediate_answer_prompt(std::string_view category, std::string_view prompt) {
    return "Complete the following statement with only the name of a " + std::string(category) +
           ". If you don't know, make your best guess. " + std::string(prompt);
}

std::string immediate_answer(const FrozenLM& lm, std::string_view category, std::string_view prompt,
                             std::size_t max_tokens) {
    const std::vector<ChatTurn> example{
        {Role::user, immediate_answer_prompt("city", "The capital of the country of origin of Tom Clancy's "
                                                     "Rainbow Six Siege is")},
        {Role::assistant, "Ottawa"}};
    std::string question = lm.render_prompt({std::nullopt, immediate_answer_prompt(category, prompt), ""});
    if (question.starts_with(kBeginOfTextMarker)) question.erase(0, kBeginOfTextMarker.size());
    const auto tokens = lm.tokenize(lm.render_conversation(example) + question);
    return generate_tokens(lm, tokens, {}, {}, SamplingConfig::greedy_decoding(), max_tokens, 0).text;
}

std::vector<TwoHopRecord> filter_two_hop(const FrozenLM& lm, const std::vector<TwoHopRecord>& records,
                                         std::size_t max_tokens) {
    std::vector<TwoHopRecord> kept;
    for (const auto& r : records) {
        if (r.bridge_aliases.empty() || r.answer_aliases.empty()) {
            fail(ErrorCode::missing_label, "two-hop record '" + r.two_hop_prompt + "' lacks aliases");
        }
        const auto first = immediate_answer(lm, r.first_hop_category, r.first_hop_prompt, max_tokens);
        if (!contains_any_alias(first, r.bridge_aliases)) continue;
        const auto second = immediate_answer(lm, r.category, r.two_hop_prompt, max_tokens);
        if (!contains_any_alias(second, r.answer_aliases)) continue;
        kept.push_back(r);
    }
    return kept;
}

}  // namespace selfie

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "selfie/adapter.hpp"
#include "selfie/harness.hpp"
#include "selfie/scale_grid.hpp"

namespace selfie {

struct BridgeCase {
    std::string prompt;
    std::vector<std::string> bridge_aliases;
    std::string category;
    std::string expected_answer;
};

/// JSON-lines {prompt, bridge_aliases[], category, expected_answer}.
std::vector<BridgeCase> load_bridge_cases(const std::filesystem::path& path);
void save_bridge_cases(const std::vector<BridgeCase>& cases, const std::filesystem::path& path);

/// Detection counts over layers x positions, row-major by layer.
struct HeatmapGrid {
    std::vector<std::size_t> layers;
    std::vector<std::size_t> positions;
    std::size_t samples_per_cell = 10;
    double temperature = 0.7;
    int alignment_offset = 0;
    std::vector<std::size_t> hits;

    std::size_t hit_count(std::size_t li, std::size_t pi) const { return hits.at(li * positions.size() + pi); }
    double rate(std::size_t li, std::size_t pi) const;
    bool any_hit() const;
    /// Per position, the maximum rate over layers.
    std::vector<double> max_over_layers() const;

    nlohmann::json to_json() const;
    static HeatmapGrid from_json(const nlohmann::json& j);
};

struct BridgeProbeConfig {
    std::size_t samples = 10;
    double temperature = 0.7;
    /// Cycle through the grid's active window, one scale per sample;
    /// otherwise every sample uses `fixed_scale`.
    bool cycle_window = true;
    double fixed_scale = 1.0;
    std::size_t max_tokens = kDefaultMaxTokens;
    std::uint64_t seed = 0;
};

/// For every (layer, position) of the case prompt: extract, normalize,
/// generate `samples` descriptions, count those containing any alias.
HeatmapGrid bridge_heatmap(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                           const BridgeCase& bridge, const std::vector<std::size_t>& layers,
                           const std::vector<std::size_t>& positions, const ScaleGrid& grid,
                           const BridgeProbeConfig& config);

inline constexpr double kDetectionThreshold = 0.001;

/// Smallest position where any method's series exceeds the threshold;
/// nullopt is the no-signal outcome.
std::optional<std::size_t> align_position_zero(const std::map<std::string, std::vector<double>>& series,
                                               double threshold = kDetectionThreshold);

struct Contingency {
    std::size_t both = 0;
    std::size_t trained_only = 0;
    std::size_t untrained_only = 0;  // the reverse pattern
    std::size_t neither = 0;
};

struct MethodDetection {
    std::size_t cases = 0;
    std::size_t prompts_detected = 0;
    double detection_rate = 0.0;
    double sem = 0.0;
    /// Per-cell mean rate over cases, row-major like HeatmapGrid.
    std::vector<double> mean_grid;
};

struct DetectionAggregate {
    MethodDetection trained;
    MethodDetection untrained;
    Contingency contingency;

    nlohmann::json to_json() const;
};

MethodDetection aggregate_method(const std::vector<HeatmapGrid>& grids);
/// Both lists index the same cases in the same order and share one shape.
DetectionAggregate aggregate_detection(const std::vector<HeatmapGrid>& trained,
                                       const std::vector<HeatmapGrid>& untrained);

struct ZeroProbeResult {
    std::vector<double> injected;
    GenerationRecord greedy;
    std::vector<GenerationRecord> sampled;
};

/// Generates from f(0), which is b for kinds with a bias and 0 otherwise.
ZeroProbeResult zero_vector_probe(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                                  const SamplingConfig& sampling, std::size_t samples, std::uint64_t seed,
                                  std::size_t max_tokens = kDefaultMaxTokens);

/// Per-layer dataset means, stored next to contrastive adapters.
void save_layer_means(const std::map<int, std::vector<double>>& means, const std::filesystem::path& path);
std::map<int, std::vector<double>> load_layer_means(const std::filesystem::path& path);

struct NovelPromptConfig {
    std::size_t layer = 0;
    double scale = 1.0;
    ScalePlacement placement = ScalePlacement::adapter_input;
    SamplingConfig sampling = SamplingConfig::nucleus(0.5, 1.0);
    std::size_t n = 5;
    std::uint64_t seed = 0;
    std::size_t max_tokens = kDefaultMaxTokens;
    /// Subtract the stored mean for `layer` before normalizing.
    bool subtract_mean = false;
};

std::vector<GenerationRecord> describe_novel_prompt(const Adapter& adapter, const FrozenLM& lm,
                                                    const RenderedTemplate& rendered,
                                                    std::string_view source_prompt,
                                                    const std::map<int, std::vector<double>>& layer_means,
                                                    const NovelPromptConfig& config);

/// A two-hop question with its first hop, for filtering.
struct TwoHopRecord {
    std::string first_hop_prompt;
    std::string first_hop_category;
    std::vector<std::string> bridge_aliases;
    std::string two_hop_prompt;
    std::string category;
    std::vector<std::string> answer_aliases;
};

/// "Complete the following statement with only the name of a {category}..."
std::string immediate_answer_prompt(std::string_view category, std::string_view prompt);

/// Greedy answer under the one-shot immediate-answering conversation.
std::string immediate_answer(const FrozenLM& lm, std::string_view category, std::string_view prompt,
                             std::size_t max_tokens = 16);

/// Keeps records whose first hop names the bridge and whose two-hop
/// question is answered immediately (both by alias match).
std::vector<TwoHopRecord> filter_two_hop(const FrozenLM& lm, const std::vector<TwoHopRecord>& records,
                                         std::size_t max_tokens = 16);

}  // namespace selfie

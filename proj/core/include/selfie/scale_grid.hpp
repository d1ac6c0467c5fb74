#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "selfie/adapter.hpp"
#include "selfie/harness.hpp"

namespace selfie {

/// Where the external scale s enters. adapter_input generates from f(s h),
/// so s multiplies alpha and the bias stays fixed; adapter_output generates
/// from s f(h).
enum class ScalePlacement { adapter_input, adapter_output };

std::string_view to_string(ScalePlacement placement) noexcept;
ScalePlacement parse_scale_placement(std::string_view name);

/// External injection magnitudes, roughly geometric with ratio ~1.618.
/// Generation uses a window of N consecutive entries picked by calibration.
struct ScaleGrid {
    std::vector<double> values = default_values();
    std::size_t window = 6;
    std::size_t window_start = 0;
    ScalePlacement placement = ScalePlacement::adapter_input;

    static std::vector<double> default_values();

    /// Strictly increasing positive values, 1 <= window <= |values|,
    /// window_start in range. Throws invalid_argument otherwise.
    void validate() const;
    std::size_t window_count() const noexcept { return values.size() - window + 1; }
    std::vector<double> window_at(std::size_t start) const;
    std::vector<double> active() const { return window_at(window_start); }

    nlohmann::json to_json() const;
    static ScaleGrid from_json(const nlohmann::json& j);
};

/// Item-level inputs for a multi-scale run.
struct ScaleItem {
    std::string id;
    std::vector<double> vector;
};

/// Injection for one scale under the grid's placement rule.
InjectionSpec scaled_injection(const Adapter& adapter, std::span<const double> h, double scale,
                               ScalePlacement placement);

/// One generation per scale of the active window (or of the full grid).
/// Each scale draws from
/// its own seed stream so windows agree with the full-grid run.
std::vector<GenerationRecord> generate_multiscale(const Adapter& adapter, const FrozenLM& lm,
                                                  const RenderedTemplate& rendered, const ScaleItem& item,
                                                  const ScaleGrid& grid, const SamplingConfig& sampling,
                                                  std::uint64_t seed, bool full_grid = false,
                                                  std::size_t max_tokens = kDefaultMaxTokens);

/// scores[item][scale] over the full grid, higher is better. Each window is
/// scored as the item-mean of the best score inside it; ties go to the
/// smaller start index.
std::size_t select_window(const std::vector<std::vector<double>>& scores, std::size_t window);

using GenerationMetric = std::function<double(const ScaleItem&, const GenerationRecord&)>;

/// Runs the full grid on `subset` and returns the best window start.
std::size_t calibrate_window(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                             const std::vector<ScaleItem>& subset, const ScaleGrid& grid,
                             const SamplingConfig& sampling, const GenerationMetric& metric, std::uint64_t seed,
                             std::size_t max_tokens = kDefaultMaxTokens);

}  // namespace selfie

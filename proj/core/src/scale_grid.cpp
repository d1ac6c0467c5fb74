#include "selfie/scale_grid.hpp"

#include <limits>

#include "selfie/error.hpp"
#include "selfie/metrics.hpp"
#include "selfie/numeric.hpp"
#include "selfie/rng.hpp"

namespace selfie {

std::string_view to_string(ScalePlacement placement) noexcept {
    return placement == ScalePlacement::adapter_input ? "adapter_input" : "adapter_output";
}

ScalePlacement parse_scale_placement(std::string_view name) {
    if (name == "adapter_input") return ScalePlacement::adapter_input;
    if (name == "adapter_output") return ScalePlacement::adapter_output;
    fail(ErrorCode::config_error, "unknown scale placement '" + std::string(name) + "'");
}

std::vector<double> ScaleGrid::default_values() {
    return {0.1, 0.2, 0.3, 0.5, 0.8, 1.3, 2.1, 3.4, 5.5, 8.9, 14.4, 23.3};
}

void ScaleGrid::validate() const {
    if (values.empty()) fail(ErrorCode::invalid_argument, "scale grid is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) fail(ErrorCode::invalid_argument, "scales must be positive");
        if (i > 0 && !(values[i] > values[i - 1])) {
            fail(ErrorCode::invalid_argument, "scales must be strictly increasing");
        }
    }
    if (window == 0 || window > values.size()) {
        fail(ErrorCode::invalid_argument, "window size must be in [1, " + std::to_string(values.size()) + "]");
    }
    if (window_start + window > values.size()) fail(ErrorCode::out_of_range, "window start out of range");
}

std::vector<double> ScaleGrid::window_at(std::size_t start) const {
    if (window == 0 || window > values.size() || start + window > values.size()) {
        fail(ErrorCode::out_of_range, "window [" + std::to_string(start) + ", " + std::to_string(start + window) +
                                          ") exceeds the grid");
    }
    return {values.begin() + static_cast<std::ptrdiff_t>(start),
            values.begin() + static_cast<std::ptrdiff_t>(start + window)};
}

nlohmann::json ScaleGrid::to_json() const {
    return {{"values", values},
            {"window", window},
            {"window_start", window_start},
            {"placement", std::string(to_string(placement))}};
}

ScaleGrid ScaleGrid::from_json(const nlohmann::json& j) {
    ScaleGrid g;
    try {
        g.values = j.value("values", g.values);
        g.window = j.value("window", g.window);
        g.window_start = j.value("window_start", g.window_start);
        g.placement = parse_scale_placement(j.value("placement", std::string(to_string(g.placement))));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, std::string("invalid scale grid: ") + e.what());
    }
    g.validate();
    return g;
}

InjectionSpec scaled_injection(const Adapter& adapter, std::span<const double> h, double scale,
                               ScalePlacement placement) {
    if (placement == ScalePlacement::adapter_output) return {adapter.apply(h), scale};
    return {adapter.apply(scaled(h, scale)), 1.0};
}

std::vector<GenerationRecord> generate_multiscale(const Adapter& adapter, const FrozenLM& lm,
                                                  const RenderedTemplate& rendered, const ScaleItem& item,
                                                  const ScaleGrid& grid, const SamplingConfig& sampling,
                                                  std::uint64_t seed, bool full_grid, std::size_t max_tokens) {
    grid.validate();
    const std::size_t first = full_grid ? 0 : grid.window_start;
    const std::size_t count = full_grid ? grid.values.size() : grid.window;
    std::vector<GenerationRecord> out;
    out.reserve(count);
    for (std::size_t i = first; i < first + count; ++i) {
        const double s = grid.values[i];
        auto rec = generate(lm, rendered, scaled_injection(adapter, item.vector, s, grid.placement), sampling,
                            max_tokens, derive_seed(seed, i));
        rec.item_id = item.id;
        rec.scale = s;
        out.push_back(std::move(rec));
    }
    return out;
}

std::size_t select_window(const std::vector<std::vector<double>>& scores, std::size_t window) {
    if (scores.empty()) fail(ErrorCode::empty_input, "calibration subset is empty");
    const std::size_t n_scales = scores.front().size();
    for (const auto& row : scores) {
        if (row.size() != n_scales) fail(ErrorCode::dimension_mismatch, "calibration scores are ragged");
    }
    if (window == 0 || window > n_scales) fail(ErrorCode::invalid_argument, "window does not fit the grid");
    std::size_t best_start = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start + window <= n_scales; ++start) {
        double total = 0.0;
        for (const auto& row : scores) {
            total += best_of_n(std::span<const double>(row).subspan(start, window));
        }
        const double mean = total / static_cast<double>(scores.size());
        if (mean > best) {
            best = mean;
            best_start = start;
        }
    }
    return best_start;
}

std::size_t calibrate_window(const Adapter& adapter, const FrozenLM& lm, const RenderedTemplate& rendered,
                             const std::vector<ScaleItem>& subset, const ScaleGrid& grid,
                             const SamplingConfig& sampling, const GenerationMetric& metric, std::uint64_t seed,
                             std::size_t max_tokens) {
    if (subset.empty()) fail(ErrorCode::empty_input, "calibration subset is empty");
    std::vector<std::vector<double>> scores;
    scores.reserve(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) {
        const auto records = generate_multiscale(adapter, lm, rendered, subset[k], grid, sampling,
                                                 derive_seed(seed, k), true, max_tokens);
        std::vector<double> row;
        row.reserve(records.size());
        for (const auto& r : records) row.push_back(metric(subset[k], r));
        scores.push_back(std::move(row));
    }
    return select_window(scores, grid.window);
}

}  // namespace selfie

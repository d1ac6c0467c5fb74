#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "selfie/adapter.hpp"
#include "selfie/backend_registry.hpp"
#include "selfie/harness.hpp"
#include "selfie/scale_grid.hpp"
#include "selfie/train.hpp"

namespace selfie::cli {

struct DataPaths {
    std::string train;
    std::string val;
    std::string eval;
    std::string calibration;
    std::string topics;
};

struct AdapterSpec {
    AdapterKind kind = AdapterKind::scalar_affine;
    std::size_t rank = 0;
};

struct SamplingSpec {
    double temperature = 1.0;
    double top_p = 1.0;
    bool greedy = true;

    SamplingConfig config() const {
        return greedy ? SamplingConfig::greedy_decoding() : SamplingConfig::nucleus(temperature, top_p);
    }
};

struct EvalSelection {
    /// "trained", "untrained", "repeat_x6", "paraphrases", "taboo".
    std::vector<std::string> methods;
    /// "retrieval", "generation".
    std::vector<std::string> metrics;
    std::string calibration_metric;
    std::vector<std::size_t> ks{1, 10, 100};
    std::size_t candidates = 6;
    SamplingSpec sampling;
    std::size_t max_tokens = 32;
    std::size_t scoring_trials = 10;
    std::size_t scoring_max_tokens = 32;
    /// Non-empty switches eval into architecture-sweep mode.
    std::vector<SweepEntry> sweep;
};

struct ProbeSettings {
    std::vector<std::size_t> layers;     // empty: every layer
    std::vector<std::size_t> positions;  // empty: every prompt position
    std::size_t samples = 10;
    double temperature = 0.7;
    bool cycle_window = true;
    double fixed_scale = 1.0;
    std::size_t max_tokens = 32;
    bool include_untrained = true;

    std::string novel_prompt;
    std::size_t novel_layer = 0;
    double novel_scale = 1.0;
    std::size_t novel_n = 5;
    double novel_temperature = 0.5;
    bool subtract_mean = false;
    std::string layer_means;

    std::size_t zero_samples = 5;
    double zero_temperature = 1.0;
};

/// Every knob of a run. Precedence, lowest first: built-in defaults, the
/// --config file, command-line flags. The top-level seed is the only seed:
/// it overrides train.seed and seeds every generation stream.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string out = "run";
    BackendConfig backend;
    DataPaths data;
    AdapterSpec adapter;
    TrainConfig train;
    TargetTemplate prompt;
    ScaleGrid scale_grid;
    EvalSelection eval;
    ProbeSettings probe;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Shared flags; unset ones leave the config untouched.
struct SharedFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string backend;
    std::string checkpoint;
    bool plot = false;
};

RunConfig resolve(const SharedFlags& flags);

}  // namespace selfie::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "selfie/adapter.hpp"
#include "selfie/dataset.hpp"
#include "selfie/harness.hpp"
#include "selfie/lm.hpp"

namespace selfie {

enum class ShuffleMode { reshuffle_each_epoch, fixed_order };

std::string_view to_string(ShuffleMode mode) noexcept;
ShuffleMode parse_shuffle_mode(std::string_view name);

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 256;
    std::size_t epochs = 1;
    double weight_decay = 0.01;
    std::size_t warmup_steps = 10;
    double grad_clip_norm = 0.5;
    double alpha_init = 5.0;
    std::uint64_t seed = 42;
    ShuffleMode shuffle_mode = ShuffleMode::reshuffle_each_epoch;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double min_learning_rate = 0.0;
    /// Validation passes per epoch.
    std::size_t validations_per_epoch = 8;
    /// Append the closing quote and end-of-turn marker to every label.
    bool append_terminator = true;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    std::string digest() const;
};

struct StepRow {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double loss = 0.0;
    double learning_rate = 0.0;
    double grad_norm = 0.0;
    double clipped_norm = 0.0;
    double wall_ms = 0.0;
};

struct ValidationRow {
    std::size_t step = 0;
    std::size_t epoch = 0;
    std::string split = "val";
    double loss = 0.0;
    double wall_ms = 0.0;
};

struct LossCurve {
    std::vector<StepRow> steps;
    std::vector<ValidationRow> validations;

    /// Deterministic rows (no wall-clock), one JSON object per line.
    std::string to_jsonl() const;
    /// Wall-clock stamps keyed by step, kept apart so curve.jsonl reproduces.
    std::string timing_jsonl() const;
};

struct TrainResult {
    Adapter final_adapter;
    Adapter best_adapter;
    double best_val_loss = 0.0;
    std::size_t best_step = 0;
    LossCurve curve;
    std::uint64_t backend_checksum = 0;
    /// Record-index order of every epoch's pairs, for shuffle-mode audits.
    std::vector<std::vector<std::size_t>> epoch_orders;
};

/// Label tokens for training and validation.
std::vector<TokenId> label_tokens(const FrozenLM& lm, std::string_view label, bool append_terminator);

/// Mean CE over every (vector, label) pair at external scale 1.
double validate(const Adapter& adapter, const FrozenLM& lm, const TargetTemplate& tmpl,
                const Dataset& dataset, bool append_terminator = true);

/// Trains the adapter's parameters only; the backend is never written.
/// Uses AdamW with decoupled weight decay (not applied to alpha), cosine
/// decay with linear warmup and per-step global-norm clipping.
TrainResult train(Adapter adapter, const FrozenLM& lm, const TargetTemplate& tmpl, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& config);

struct SweepEntry {
    AdapterKind kind = AdapterKind::identity;
    std::size_t rank = 0;
};

struct SweepRow {
    AdapterKind kind = AdapterKind::identity;
    std::size_t rank = 0;
    std::size_t params = 0;
    double val_loss = 0.0;        // best-validation snapshot
    double final_val_loss = 0.0;
    double final_train_loss = 0.0;
    double delta = 0.0;           // val_loss minus the Identity row's
    std::string label() const;
};

/// Rows come back in the conventional table order: identity, scale-only,
/// scalar affine, SA+LR by rank, LR-only by rank, full rank.
std::vector<SweepRow> architecture_sweep(const std::vector<SweepEntry>& entries, const FrozenLM& lm,
                                         const TargetTemplate& tmpl, const Dataset& train_set,
                                         const Dataset& val_set, const TrainConfig& config);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// Writes config.json, curve.jsonl, timing.jsonl and checkpoints/{final,best}.siad.
void write_run_directory(const std::filesystem::path& dir, const nlohmann::json& config_json,
                         const TrainResult& result);

}  // namespace selfie

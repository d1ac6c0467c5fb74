#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "selfie/adapter.hpp"

namespace selfie {

/// Row-major float32 matrix of n vectors of width d.
///
/// File form (.sivb): "SIVB" u32 n u32 d, then n*d little-endian float32.
struct VectorBank {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<float> values;

    std::span<const float> row(std::size_t i) const;

    static VectorBank from_rows(const std::vector<std::vector<double>>& rows);
};

std::vector<std::uint8_t> encode_bank(const VectorBank& bank);
VectorBank decode_bank(std::span<const std::uint8_t> bytes);
void save_bank(const VectorBank& bank, const std::filesystem::path& path);
VectorBank load_bank(const std::filesystem::path& path);

enum class Origin { sae_decoder, contrastive_topic, synthetic };

std::string_view to_string(Origin origin) noexcept;
Origin parse_origin(std::string_view name);

struct VectorRecord {
    std::string id;
    std::size_t row = 0;
    int layer = 0;
    std::vector<std::string> labels;
    Origin origin = Origin::synthetic;
    nlohmann::json extras = nlohmann::json::object();

    friend bool operator==(const VectorRecord&, const VectorRecord&) = default;
};

inline constexpr double kUnitNormTolerance = 1e-6;

/// Immutable set of vector-label records over a shared, read-only bank.
/// Subsets (splits, subsamples) share the parent's bank.
class Dataset {
public:
    Dataset(std::shared_ptr<const VectorBank> bank, std::vector<VectorRecord> records);

    std::size_t dim() const noexcept { return bank_->d; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<VectorRecord>& records() const noexcept { return records_; }
    const VectorRecord& record(std::size_t i) const { return records_.at(i); }
    const VectorBank& bank() const noexcept { return *bank_; }
    std::shared_ptr<const VectorBank> shared_bank() const noexcept { return bank_; }

    std::vector<double> vector(std::size_t record_index) const;

    /// Same bank, different records.
    Dataset with_records(std::vector<VectorRecord> records) const;

    /// FNV-1a digest over the manifest lines and the bank rows they reference.
    std::string digest() const;

private:
    std::shared_ptr<const VectorBank> bank_;
    std::vector<VectorRecord> records_;
};

/// Manifest path "x.jsonl" pairs with bank "x.sivb".
std::filesystem::path bank_path_for(const std::filesystem::path& manifest_path);

nlohmann::json record_to_json(const VectorRecord& r);
VectorRecord record_from_json(const nlohmann::json& j);

/// Writes the JSON-lines manifest and its bank.
void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path);
/// Loads and validates: unique ids, rows in range, non-empty labels, unit norm.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// One (record, label) training example.
struct TrainingPair {
    std::size_t record = 0;
    std::size_t label = 0;
};
std::vector<TrainingPair> flatten_pairs(const Dataset& dataset);

/// Decoder rows become unit-normalized sae_decoder records "latent-<i>".
/// Zero-norm rows and rows without a label are rejected together, by id.
Dataset ingest_sae(const std::vector<std::vector<double>>& decoder_rows,
                   const std::map<std::size_t, std::string>& labels, int layer);
Dataset ingest_sae(const VectorBank& decoder, const std::map<std::size_t, std::string>& labels, int layer);

/// raw + closing double quote + end-of-turn marker (no deduplication).
std::string format_label_for_training(std::string_view raw);

Dataset uppercase_labels(const Dataset& dataset);
/// Appends externally supplied paraphrases; unknown ids are an error listing them.
Dataset import_paraphrases(const Dataset& dataset,
                           const std::map<std::string, std::vector<std::string>>& paraphrases);
/// Keeps at most `count` labels per record (split membership unchanged).
Dataset limit_labels(const Dataset& dataset, std::size_t count);

/// Deterministic vector-level subsample of round(fraction * n) records.
/// For a fixed seed, smaller fractions give subsets of larger ones.
Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed);

struct SplitSpec {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    std::uint64_t seed = 42;
};

struct Splits {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Partitions by vector id; never by label.
Splits split_dataset(const Dataset& dataset, const SplitSpec& spec);

/// Concatenates datasets (typically one per layer) keeping per-record layer.
Dataset pool_datasets(const std::vector<Dataset>& parts);

/// Layers [L/4, 3L/4) of an L-layer model.
std::vector<int> middle_half_layers(std::size_t layer_count);

/// Cumulative explained-variance ratios of the centered sample covariance,
/// largest component first; the last entry is 1.
std::vector<double> pca_cumulative_variance(const Dataset& dataset);
std::vector<double> pca_cumulative_variance(const std::vector<std::vector<double>>& vectors);

}  // namespace selfie

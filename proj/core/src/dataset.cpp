#include "selfie/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "selfie/digest.hpp"
#include "selfie/error.hpp"
#include "selfie/lm.hpp"
#include "selfie/numeric.hpp"
#include "selfie/rng.hpp"
#include "selfie/text.hpp"

namespace selfie {

namespace {

constexpr char kBankMagic[4] = {'S', 'I', 'V', 'B'};

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 20) {
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
        if (i) out += ", ";
        out += ids[i];
    }
    if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
    return out;
}

}  // namespace

std::span<const float> VectorBank::row(std::size_t i) const {
    if (i >= n) fail(ErrorCode::out_of_range, "bank row " + std::to_string(i) + " >= n=" + std::to_string(n));
    return std::span<const float>(values).subspan(i * d, d);
}

VectorBank VectorBank::from_rows(const std::vector<std::vector<double>>& rows) {
    VectorBank b;
    b.n = rows.size();
    b.d = rows.empty() ? 0 : rows.front().size();
    b.values.reserve(b.n * b.d);
    for (const auto& r : rows) {
        if (r.size() != b.d) fail(ErrorCode::dimension_mismatch, "ragged rows in vector bank");
        for (double x : r) b.values.push_back(static_cast<float>(x));
    }
    return b;
}

std::vector<std::uint8_t> encode_bank(const VectorBank& bank) {
    if (bank.values.size() != bank.n * bank.d) {
        fail(ErrorCode::dimension_mismatch, "bank value count does not equal n*d");
    }
    std::vector<std::uint8_t> out(kBankMagic, kBankMagic + 4);
    detail::put_u32(out, static_cast<std::uint32_t>(bank.n));
    detail::put_u32(out, static_cast<std::uint32_t>(bank.d));
    out.reserve(out.size() + 4 * bank.values.size());
    for (float f : bank.values) detail::put_f32(out, f);
    return out;
}

VectorBank decode_bank(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || !std::equal(kBankMagic, kBankMagic + 4, bytes.begin())) {
        fail(ErrorCode::corrupt_header, "not a vector bank (bad magic)");
    }
    VectorBank b;
    b.n = detail::get_u32(bytes.data() + 4);
    b.d = detail::get_u32(bytes.data() + 8);
    const std::size_t expected = 4 * b.n * b.d;
    if (bytes.size() - 12 != expected) {
        fail(bytes.size() - 12 < expected ? ErrorCode::truncated_tensor : ErrorCode::dimension_mismatch,
             "vector bank declares n=" + std::to_string(b.n) + ", d=" + std::to_string(b.d) + " (" +
                 std::to_string(expected) + " bytes) but holds " + std::to_string(bytes.size() - 12));
    }
    b.values.resize(b.n * b.d);
    for (std::size_t i = 0; i < b.values.size(); ++i) b.values[i] = detail::get_f32(bytes.data() + 12 + 4 * i);
    return b;
}

void save_bank(const VectorBank& bank, const std::filesystem::path& path) {
    detail::write_file(path, encode_bank(bank));
}

VectorBank load_bank(const std::filesystem::path& path) { return decode_bank(detail::read_file(path)); }

std::string_view to_string(Origin origin) noexcept {
    switch (origin) {
        case Origin::sae_decoder: return "sae_decoder";
        case Origin::contrastive_topic: return "contrastive_topic";
        case Origin::synthetic: return "synthetic";
    }
    return "unknown";
}

Origin parse_origin(std::string_view name) {
    for (auto o : {Origin::sae_decoder, Origin::contrastive_topic, Origin::synthetic}) {
        if (to_string(o) == name) return o;
    }
    fail(ErrorCode::invalid_argument, "unknown origin '" + std::string(name) + "'");
}

Dataset::Dataset(std::shared_ptr<const VectorBank> bank, std::vector<VectorRecord> records)
    : bank_(std::move(bank)), records_(std::move(records)) {
    if (!bank_) fail(ErrorCode::invalid_argument, "dataset needs a vector bank");
    std::set<std::string> seen;
    for (const auto& r : records_) {
        if (r.row >= bank_->n) {
            fail(ErrorCode::out_of_range, "record '" + r.id + "' references row " + std::to_string(r.row) +
                                              " of a bank with n=" + std::to_string(bank_->n));
        }
        if (!seen.insert(r.id).second) fail(ErrorCode::invalid_argument, "duplicate record id '" + r.id + "'");
        if (r.labels.empty()) fail(ErrorCode::missing_label, "record '" + r.id + "' has no labels");
        for (const auto& l : r.labels) {
            if (trim(l).empty()) fail(ErrorCode::missing_label, "record '" + r.id + "' has an empty label");
        }
    }
}

std::vector<double> Dataset::vector(std::size_t record_index) const {
    return to_double(bank_->row(records_.at(record_index).row));
}

Dataset Dataset::with_records(std::vector<VectorRecord> records) const { return Dataset(bank_, std::move(records)); }

std::string Dataset::digest() const {
    std::uint64_t h = fnv1a64(std::to_string(bank_->d));
    for (const auto& r : records_) {
        const auto line = record_to_json(r).dump();
        h = fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(line.data()), line.size()), h);
        const auto row = bank_->row(r.row);
        h = fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(row.data()), row.size_bytes()), h);
    }
    return to_hex(h);
}

std::filesystem::path bank_path_for(const std::filesystem::path& manifest_path) {
    auto p = manifest_path;
    p.replace_extension(".sivb");
    return p;
}

nlohmann::json record_to_json(const VectorRecord& r) {
    return {{"id", r.id},
            {"row", r.row},
            {"layer", r.layer},
            {"labels", r.labels},
            {"origin", std::string(to_string(r.origin))},
            {"extras", r.extras}};
}

VectorRecord record_from_json(const nlohmann::json& j) {
    VectorRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.row = j.at("row").get<std::size_t>();
        r.layer = j.value("layer", 0);
        r.labels = j.at("labels").get<std::vector<std::string>>();
        r.origin = parse_origin(j.value("origin", std::string("synthetic")));
        r.extras = j.value("extras", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed manifest record: ") + e.what());
    }
    return r;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path) {
    save_bank(dataset.bank(), bank_path_for(manifest_path));
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_failure, "cannot write manifest '" + manifest_path.string() + "'");
    for (const auto& r : dataset.records()) out << record_to_json(r).dump() << '\n';
    if (!out) fail(ErrorCode::io_failure, "write to '" + manifest_path.string() + "' failed");
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorCode::io_failure, "cannot open manifest '" + manifest_path.string() + "'");
    auto bank = std::make_shared<const VectorBank>(load_bank(bank_path_for(manifest_path)));
    std::vector<VectorRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::invalid_argument, manifest_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    Dataset ds(std::move(bank), std::move(records));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double n = l2_norm(ds.vector(i));
        if (std::abs(n - 1.0) > kUnitNormTolerance) {
            fail(ErrorCode::degenerate_vector, "record '" + ds.record(i).id + "' has norm " + std::to_string(n) +
                                                   ", expected unit norm");
        }
    }
    return ds;
}

std::vector<TrainingPair> flatten_pairs(const Dataset& dataset) {
    std::vector<TrainingPair> out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t k = 0; k < dataset.record(i).labels.size(); ++k) out.push_back({i, k});
    }
    return out;
}

Dataset ingest_sae(const std::vector<std::vector<double>>& decoder_rows,
                   const std::map<std::size_t, std::string>& labels, int layer) {
    std::vector<std::string> zero_rows, unlabeled;
    std::vector<std::vector<double>> unit_rows;
    std::vector<VectorRecord> records;
    const std::size_t d = decoder_rows.empty() ? 0 : decoder_rows.front().size();
    for (std::size_t i = 0; i < decoder_rows.size(); ++i) {
        const auto& row = decoder_rows[i];
        const std::string id = "latent-" + std::to_string(i);
        if (row.size() != d) fail(ErrorCode::dimension_mismatch, "decoder row " + std::to_string(i) + " has wrong width");
        for (double x : row) {
            if (!std::isfinite(x)) fail(ErrorCode::non_finite, "decoder row " + std::to_string(i) + " is not finite");
        }
        const double norm = l2_norm(row);
        const auto label = labels.find(i);
        if (norm == 0.0) zero_rows.push_back(id);
        if (label == labels.end() || trim(label->second).empty()) unlabeled.push_back(id);
        if (norm == 0.0 || label == labels.end() || trim(label->second).empty()) continue;
        VectorRecord r;
        r.id = id;
        r.row = unit_rows.size();
        r.layer = layer;
        r.labels = {label->second};
        r.origin = Origin::sae_decoder;
        r.extras = {{"latent_index", i}, {"raw_norm", norm}};
        unit_rows.push_back(scaled(row, 1.0 / norm));
        records.push_back(std::move(r));
    }
    if (!zero_rows.empty()) {
        fail(ErrorCode::degenerate_vector, "zero-norm decoder rows rejected: " + join_ids(zero_rows));
    }
    if (!unlabeled.empty()) fail(ErrorCode::missing_label, "decoder rows without a label: " + join_ids(unlabeled));
    if (records.empty()) fail(ErrorCode::empty_input, "no decoder rows to ingest");
    return Dataset(std::make_shared<const VectorBank>(VectorBank::from_rows(unit_rows)), std::move(records));
}

Dataset ingest_sae(const VectorBank& decoder, const std::map<std::size_t, std::string>& labels, int layer) {
    std::vector<std::vector<double>> rows(decoder.n);
    for (std::size_t i = 0; i < decoder.n; ++i) rows[i] = to_double(decoder.row(i));
    return ingest_sae(rows, labels, layer);
}

std::string format_label_for_training(std::string_view raw) {
    if (raw.empty()) fail(ErrorCode::invalid_argument, "cannot format an empty label");
    std::string out(raw);
    out += '"';
    out += kEndOfTurnMarker;
    return out;
}

Dataset uppercase_labels(const Dataset& dataset) {
    auto records = dataset.records();
    for (auto& r : records) {
        for (auto& l : r.labels) l = to_upper_simple(l);
    }
    return dataset.with_records(std::move(records));
}

Dataset import_paraphrases(const Dataset& dataset,
                           const std::map<std::string, std::vector<std::string>>& paraphrases) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < dataset.size(); ++i) index[dataset.record(i).id] = i;
    std::vector<std::string> unknown;
    for (const auto& [id, _] : paraphrases) {
        if (!index.contains(id)) unknown.push_back(id);
    }
    if (!unknown.empty()) fail(ErrorCode::unknown_id, "paraphrases for unknown ids: " + join_ids(unknown));
    auto records = dataset.records();
    for (const auto& [id, extra] : paraphrases) {
        auto& labels = records[index.at(id)].labels;
        labels.insert(labels.end(), extra.begin(), extra.end());
    }
    return dataset.with_records(std::move(records));
}

Dataset limit_labels(const Dataset& dataset, std::size_t count) {
    if (count == 0) fail(ErrorCode::invalid_argument, "label limit must be >= 1");
    auto records = dataset.records();
    for (auto& r : records) {
        if (r.labels.size() > count) r.labels.resize(count);
    }
    return dataset.with_records(std::move(records));
}

namespace {

std::vector<std::size_t> seeded_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

Dataset pick(const Dataset& dataset, std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    std::vector<VectorRecord> records;
    records.reserve(indices.size());
    for (auto i : indices) records.push_back(dataset.record(i));
    return dataset.with_records(std::move(records));
}

}  // namespace

Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        fail(ErrorCode::invalid_argument, "subsample fraction must be in (0, 1]");
    }
    const auto n = dataset.size();
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (keep == 0) {
        fail(ErrorCode::empty_input, "fraction " + std::to_string(fraction) + " of " + std::to_string(n) +
                                         " records keeps nothing");
    }
    auto order = seeded_order(n, seed);
    order.resize(keep);
    return pick(dataset, std::move(order));
}

Splits split_dataset(const Dataset& dataset, const SplitSpec& spec) {
    if (spec.train < 0 || spec.val < 0 || spec.test < 0 ||
        std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
        fail(ErrorCode::invalid_argument, "split fractions must be non-negative and sum to 1");
    }
    const auto n = dataset.size();
    const auto order = seeded_order(n, spec.seed);
    const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n))));
    const auto n_val =
        std::min(n - n_train, static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n))));
    auto part = [&](std::size_t from, std::size_t to) {
        return pick(dataset, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(from),
                                                      order.begin() + static_cast<std::ptrdiff_t>(to)));
    };
    return {part(0, n_train), part(n_train, n_train + n_val), part(n_train + n_val, n)};
}

Dataset pool_datasets(const std::vector<Dataset>& parts) {
    if (parts.empty()) fail(ErrorCode::empty_input, "nothing to pool");
    const auto d = parts.front().dim();
    VectorBank bank;
    bank.d = d;
    std::vector<VectorRecord> records;
    for (const auto& p : parts) {
        if (p.dim() != d) fail(ErrorCode::dimension_mismatch, "pooled datasets must share d");
        for (const auto& r : p.records()) {
            auto copy = r;
            copy.row = bank.n++;
            const auto row = p.bank().row(r.row);
            bank.values.insert(bank.values.end(), row.begin(), row.end());
            records.push_back(std::move(copy));
        }
    }
    return Dataset(std::make_shared<const VectorBank>(std::move(bank)), std::move(records));
}

std::vector<int> middle_half_layers(std::size_t layer_count) {
    std::vector<int> out;
    for (std::size_t l = layer_count / 4; l < (3 * layer_count) / 4; ++l) out.push_back(static_cast<int>(l));
    return out;
}

}  // namespace selfie

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace selfie {

/// Per-item candidates (one per scale, or N label copies for baselines) and
/// whichever metrics were computed for them. Empty metric vectors mean the
/// metric was not run.
struct ItemResult {
    std::string item_id;
    std::vector<std::string> labels;
    std::vector<double> scales;           // empty for label baselines
    std::vector<std::size_t> ranks;       // retrieval rank per candidate
    std::vector<double> hit_rates;        // generation-scoring hit rate per candidate
    std::vector<std::size_t> parse_errors;
};

/// Best-of-N row derived from an ItemResult. Retrieval takes the minimum
/// rank; generation scoring the maximum hit rate. The winning candidate is
/// the first one reaching the best value.
struct ItemSummary {
    std::string item_id;
    std::size_t best_rank = 0;
    std::size_t best_rank_candidate = 0;
    double best_hit_rate = 0.0;
    std::size_t best_hit_candidate = 0;
    bool any_hit = false;
    std::size_t valid_candidates = 0;  // candidates with hit_rate > 0
};

ItemSummary summarize_item(const ItemResult& item);

class EvalReport {
public:
    /// Items are held sorted by id so output order never depends on scheduling.
    EvalReport(std::string method, std::vector<ItemResult> items, std::vector<std::size_t> ks = {1, 10, 100});

    const std::string& method() const noexcept { return method_; }
    const std::vector<ItemResult>& items() const noexcept { return items_; }
    bool has_retrieval() const;
    bool has_generation() const;

    /// Counts of items by number of candidates with any hit (0..N).
    std::vector<std::size_t> histogram() const;
    /// hit_rate mean/sem, coverage, recall@k, MRR, parse errors, histogram.
    nlohmann::json aggregates() const;
    /// One JSON object per item: candidates, metrics, best-of-N and winner.
    std::string items_jsonl() const;
    std::string histogram_csv() const;
    /// Per candidate index: scale, mean hit rate, recall@1, MRR.
    std::string candidates_csv() const;

private:
    std::string method_;
    std::vector<ItemResult> items_;
    std::vector<std::size_t> ks_;
};

/// report.json (aggregates keyed by method), items.jsonl (method-tagged rows),
/// histogram_<method>.csv and candidates_<method>.csv.
void write_reports(const std::filesystem::path& dir, const std::vector<EvalReport>& reports,
                   const nlohmann::json& extra = nlohmann::json::object());

}  // namespace selfie

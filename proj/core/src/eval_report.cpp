#include "selfie/eval_report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "selfie/error.hpp"
#include "selfie/metrics.hpp"

namespace selfie {

namespace {

std::size_t candidate_count(const ItemResult& item) {
    std::size_t n = item.labels.size();
    if (n == 0) n = std::max(item.ranks.size(), item.hit_rates.size());
    return n;
}

void check_item(const ItemResult& item) {
    const std::size_t n = candidate_count(item);
    auto check = [&](std::size_t size, const char* what) {
        if (size != 0 && size != n) {
            fail(ErrorCode::dimension_mismatch, "item '" + item.item_id + "' has " + std::to_string(size) + " " +
                                                    what + " for " + std::to_string(n) + " candidates");
        }
    };
    check(item.scales.size(), "scales");
    check(item.ranks.size(), "ranks");
    check(item.hit_rates.size(), "hit rates");
    check(item.parse_errors.size(), "parse-error counts");
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_failure, "cannot write '" + p.string() + "'");
    out << text;
}

}  // namespace

ItemSummary summarize_item(const ItemResult& item) {
    ItemSummary s;
    s.item_id = item.item_id;
    if (!item.ranks.empty()) {
        s.best_rank = best_rank(item.ranks);
        s.best_rank_candidate =
            static_cast<std::size_t>(std::find(item.ranks.begin(), item.ranks.end(), s.best_rank) - item.ranks.begin());
    }
    if (!item.hit_rates.empty()) {
        s.best_hit_rate = best_of_n(item.hit_rates);
        s.best_hit_candidate = static_cast<std::size_t>(
            std::find(item.hit_rates.begin(), item.hit_rates.end(), s.best_hit_rate) - item.hit_rates.begin());
        s.valid_candidates = static_cast<std::size_t>(
            std::count_if(item.hit_rates.begin(), item.hit_rates.end(), [](double h) { return h > 0.0; }));
        s.any_hit = s.valid_candidates > 0;
    }
    return s;
}

EvalReport::EvalReport(std::string method, std::vector<ItemResult> items, std::vector<std::size_t> ks)
    : method_(std::move(method)), items_(std::move(items)), ks_(std::move(ks)) {
    if (items_.empty()) fail(ErrorCode::empty_input, "report '" + method_ + "' has no items");
    for (const auto& it : items_) check_item(it);
    std::stable_sort(items_.begin(), items_.end(),
                     [](const ItemResult& a, const ItemResult& b) { return a.item_id < b.item_id; });
    for (std::size_t i = 1; i < items_.size(); ++i) {
        if (items_[i].item_id == items_[i - 1].item_id) {
            fail(ErrorCode::invalid_argument, "duplicate item '" + items_[i].item_id + "'");
        }
    }
    auto uses = [&](auto member) {
        const bool first = !(items_.front().*member).empty();
        for (const auto& it : items_) {
            if ((it.*member).empty() == first) fail(ErrorCode::invalid_argument, "items disagree on which metrics ran");
        }
    };
    uses(&ItemResult::ranks);
    uses(&ItemResult::hit_rates);
}

bool EvalReport::has_retrieval() const { return !items_.front().ranks.empty(); }
bool EvalReport::has_generation() const { return !items_.front().hit_rates.empty(); }

std::vector<std::size_t> EvalReport::histogram() const {
    if (!has_generation()) return {};
    std::vector<std::vector<bool>> rows;
    rows.reserve(items_.size());
    for (const auto& it : items_) {
        std::vector<bool> row;
        for (double h : it.hit_rates) row.push_back(h > 0.0);
        rows.push_back(std::move(row));
    }
    return scale_sensitivity_histogram(rows);
}

nlohmann::json EvalReport::aggregates() const {
    nlohmann::json j;
    j["method"] = method_;
    j["items"] = items_.size();
    j["candidates"] = candidate_count(items_.front());
    std::vector<ItemSummary> sums;
    for (const auto& it : items_) sums.push_back(summarize_item(it));
    if (has_generation()) {
        std::vector<double> best, any;
        std::size_t parse_errors = 0;
        for (std::size_t i = 0; i < sums.size(); ++i) {
            best.push_back(sums[i].best_hit_rate);
            any.push_back(sums[i].any_hit ? 1.0 : 0.0);
            for (auto p : items_[i].parse_errors) parse_errors += p;
        }
        const auto hr = mean_sem(best);
        j["hit_rate"] = {{"mean", hr.mean}, {"sem", hr.sem}};
        j["coverage"] = mean_sem(any).mean;
        j["parse_errors"] = parse_errors;
        j["histogram"] = histogram();
    }
    if (has_retrieval()) {
        std::vector<std::size_t> ranks;
        for (const auto& s : sums) ranks.push_back(s.best_rank);
        nlohmann::json recall = nlohmann::json::object();
        for (auto k : ks_) recall[std::to_string(k)] = recall_at_k(ranks, k);
        j["recall"] = recall;
        j["mrr"] = mean_reciprocal_rank(ranks);
    }
    return j;
}

std::string EvalReport::items_jsonl() const {
    std::ostringstream out;
    for (const auto& it : items_) {
        const auto s = summarize_item(it);
        nlohmann::json j{{"method", method_}, {"id", it.item_id}, {"labels", it.labels}};
        if (!it.scales.empty()) j["scales"] = it.scales;
        if (!it.ranks.empty()) {
            j["ranks"] = it.ranks;
            j["best_rank"] = s.best_rank;
            j["best_rank_candidate"] = s.best_rank_candidate;
            if (!it.scales.empty()) j["best_rank_scale"] = it.scales[s.best_rank_candidate];
        }
        if (!it.hit_rates.empty()) {
            j["hit_rates"] = it.hit_rates;
            j["best_hit_rate"] = s.best_hit_rate;
            j["best_hit_candidate"] = s.best_hit_candidate;
            j["any_hit"] = s.any_hit;
            j["valid_candidates"] = s.valid_candidates;
            if (!it.scales.empty()) j["best_hit_scale"] = it.scales[s.best_hit_candidate];
        }
        out << j.dump() << '\n';
    }
    return out.str();
}

std::string EvalReport::histogram_csv() const {
    std::ostringstream out;
    out << "valid_candidates,items\n";
    const auto h = histogram();
    for (std::size_t c = 0; c < h.size(); ++c) out << c << ',' << h[c] << '\n';
    return out.str();
}

std::string EvalReport::candidates_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "candidate,scale,mean_hit_rate,recall_at_1,mrr\n";
    const std::size_t n = candidate_count(items_.front());
    for (std::size_t c = 0; c < n; ++c) {
        out << c << ',';
        if (!items_.front().scales.empty()) out << items_.front().scales[c];
        out << ',';
        if (has_generation()) {
            double total = 0.0;
            for (const auto& it : items_) total += it.hit_rates.at(c);
            out << total / static_cast<double>(items_.size());
        }
        out << ',';
        if (has_retrieval()) {
            std::vector<std::size_t> ranks;
            for (const auto& it : items_) ranks.push_back(it.ranks.at(c));
            out << recall_at_k(ranks, 1) << ',' << mean_reciprocal_rank(ranks);
        } else {
            out << ',';
        }
        out << '\n';
    }
    return out.str();
}

void write_reports(const std::filesystem::path& dir, const std::vector<EvalReport>& reports,
                   const nlohmann::json& extra) {
    if (reports.empty()) fail(ErrorCode::empty_input, "no reports to write");
    std::filesystem::create_directories(dir);
    nlohmann::json report = extra;
    report["methods"] = nlohmann::json::object();
    std::string items;
    for (const auto& r : reports) {
        report["methods"][r.method()] = r.aggregates();
        items += r.items_jsonl();
        if (r.has_generation()) write_text(dir / ("histogram_" + r.method() + ".csv"), r.histogram_csv());
        write_text(dir / ("candidates_" + r.method() + ".csv"), r.candidates_csv());
    }
    write_text(dir / "report.json", report.dump(2) + "\n");
    write_text(dir / "items.jsonl", items);
}

}  // namespace selfie

#include "selfie/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "selfie/error.hpp"
#include "selfie/text.hpp"

namespace selfie {

double best_of_n(std::span<const double> values) {
    if (values.empty()) fail(ErrorCode::empty_input, "best-of-N over no candidates");
    return *std::max_element(values.begin(), values.end());
}

std::size_t best_rank(std::span<const std::size_t> ranks) {
    if (ranks.empty()) fail(ErrorCode::empty_input, "best rank over no candidates");
    return *std::min_element(ranks.begin(), ranks.end());
}

namespace {
void check_ranks(std::span<const std::size_t> ranks) {
    if (ranks.empty()) fail(ErrorCode::empty_input, "no ranks to score");
    for (auto r : ranks) {
        if (r == 0) fail(ErrorCode::invalid_argument, "ranks are 1-based");
    }
}
}  // namespace

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
    check_ranks(ranks);
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(std::span<const std::size_t> ranks) {
    check_ranks(ranks);
    double total = 0.0;
    for (auto r : ranks) total += 1.0 / static_cast<double>(r);
    return total / static_cast<double>(ranks.size());
}

MeanSem mean_sem(std::span<const double> values) {
    MeanSem out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(out.n);
    if (out.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sem = std::sqrt(ss / static_cast<double>(out.n - 1)) / std::sqrt(static_cast<double>(out.n));
    }
    return out;
}

std::vector<std::size_t> scale_sensitivity_histogram(const std::vector<std::vector<bool>>& any_hits) {
    if (any_hits.empty()) return {};
    const std::size_t n = any_hits.front().size();
    std::vector<std::size_t> counts(n + 1, 0);
    for (const auto& row : any_hits) {
        if (row.size() != n) fail(ErrorCode::dimension_mismatch, "ragged scale-hit rows");
        ++counts[static_cast<std::size_t>(std::count(row.begin(), row.end(), true))];
    }
    return counts;
}

bool allcaps_classify(std::string_view text) { return is_all_caps(text); }

std::vector<std::string> repeat_label(const std::string& label, std::size_t n) {
    return std::vector<std::string>(n, label);
}

std::vector<std::string> original_plus_paraphrases(const std::string& original,
                                                   const std::vector<std::string>& paraphrases, std::size_t n) {
    if (n == 0) fail(ErrorCode::invalid_argument, "candidate count must be positive");
    if (paraphrases.size() + 1 < n) {
        fail(ErrorCode::missing_label, "need " + std::to_string(n - 1) + " paraphrases, have " +
                                           std::to_string(paraphrases.size()));
    }
    std::vector<std::string> out{original};
    out.insert(out.end(), paraphrases.begin(), paraphrases.begin() + static_cast<std::ptrdiff_t>(n - 1));
    return out;
}

}  // namespace selfie

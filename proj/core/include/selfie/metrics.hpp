#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace selfie {

/// Maximum over candidates; empty input is an error.
double best_of_n(std::span<const double> values);
/// Minimum over 1-based ranks; empty input is an error.
std::size_t best_rank(std::span<const std::size_t> ranks);

/// Fraction of ranks <= k.
double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);
/// Mean of 1/rank.
double mean_reciprocal_rank(std::span<const std::size_t> ranks);

struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;  // sample std / sqrt(n); 0 when n < 2
    std::size_t n = 0;
};
MeanSem mean_sem(std::span<const double> values);

/// counts[c] = number of items whose row has exactly c true entries,
/// c = 0..N. Rows must all have length N.
std::vector<std::size_t> scale_sensitivity_histogram(const std::vector<std::vector<bool>>& any_hits);

/// True iff the text has a cased letter and every cased letter is uppercase.
bool allcaps_classify(std::string_view text);

/// N copies of the stored label.
std::vector<std::string> repeat_label(const std::string& label, std::size_t n = 6);
/// The original followed by its first n-1 paraphrases; fewer is an error.
std::vector<std::string> original_plus_paraphrases(const std::string& original,
                                                   const std::vector<std::string>& paraphrases,
                                                   std::size_t n = 6);

}  // namespace selfie

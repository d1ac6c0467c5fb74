#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "selfie/dataset.hpp"
#include "selfie/lm.hpp"

namespace selfie {

/// One line of a topic file: {"original_title", "prompt", "labels": [...]}.
struct Topic {
    std::string title;
    std::string prompt;
    std::vector<std::string> labels;
};

std::vector<Topic> load_topics(const std::filesystem::path& path);
void save_topics(const std::vector<Topic>& topics, const std::filesystem::path& path);

struct ContrastiveResult {
    Dataset dataset;
    /// Per-layer mean of the raw final-token activations that was subtracted.
    std::map<int, std::vector<double>> layer_means;
};

/// Final-token activation per topic and layer, minus the mean over all
/// topics at that layer, unit-normalized. Records are "topic-<i>@L<layer>".
ContrastiveResult extract_contrastive(const FrozenLM& lm, const std::vector<Topic>& topics,
                                      const std::vector<int>& layers);

}  // namespace selfie

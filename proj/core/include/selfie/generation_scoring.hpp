#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "selfie/harness.hpp"
#include "selfie/lm.hpp"

namespace selfie {

/// System message for the synthetic-conversation prompt.
extern const std::string_view kConversationSystemPrompt;
/// User message with "{{LABEL}}" standing for the label.
extern const std::string_view kConversationUserTemplate;

std::string conversation_user_message(std::string_view label);

struct ParsedConversation {
    std::vector<ChatTurn> turns;
    /// Set when the text did not follow the [USER]/[ASSISTANT] format; the
    /// whole text is then a single assistant turn.
    bool parse_error = false;
};

ParsedConversation parse_conversation(std::string_view generated);

/// Per-token activations of one latent on a piece of text.
class ActivationOracle {
public:
    virtual ~ActivationOracle() = default;
    virtual std::string latent() const = 0;
    /// One value per token of `text`, the first token being begin-of-text.
    virtual std::vector<double> activations(std::string_view text) const = 0;

    /// Ignore the first token's activation when deciding a hit.
    bool exclude_first_token = true;
};

/// Fires 1.0 on every token whose text contains the keyword
/// (case-insensitive), 0 elsewhere. Tokenizes with the given backend.
class KeywordOracle final : public ActivationOracle {
public:
    KeywordOracle(const FrozenLM& lm, std::string keyword) : lm_(lm), keyword_(std::move(keyword)) {}
    std::string latent() const override { return "keyword:" + keyword_; }
    std::vector<double> activations(std::string_view text) const override;

private:
    const FrozenLM& lm_;
    std::string keyword_;
};

/// Any nonzero value, skipping index 0 when `exclude_first_token`.
bool is_hit(std::span<const double> activations, bool exclude_first_token);

struct GenerationScore {
    std::vector<bool> hits;  // per trial
    double hit_rate = 0.0;
    bool any_hit = false;
    std::size_t parse_errors = 0;
};

/// Scores already-available activation rows (one per trial).
GenerationScore score_activations(const std::vector<std::vector<double>>& per_trial, bool exclude_first_token);

/// Parses each generated conversation, renders it through the backend's
/// chat format and asks the oracle. Oracle errors are rethrown as
/// oracle_failure naming the trial.
GenerationScore score_conversations(const std::vector<std::string>& generated, const FrozenLM& lm,
                                    const ActivationOracle& oracle);

struct GenerationScoringConfig {
    std::size_t trials = 10;
    SamplingConfig sampling = SamplingConfig::nucleus(0.7, 0.9);
    std::size_t max_tokens = kDefaultMaxTokens;
    std::uint64_t seed = 0;
};

/// Generates `trials` conversations from the hard prompt for `label` and scores them.
GenerationScore generation_score(std::string_view label, const FrozenLM& lm, const ActivationOracle& oracle,
                                 const GenerationScoringConfig& config = {});

}  // namespace selfie

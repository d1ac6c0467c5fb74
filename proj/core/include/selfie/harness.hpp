#pragma once

#include <cstdint>
#include <mutex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selfie/lm.hpp"
#include "selfie/rng.hpp"

namespace selfie {

enum class InjectionSites {
    /// Both placeholder occurrences carry the soft token.
    both,
    /// Only the assistant-prefix occurrence does.
    assistant_only,
};

/// Explanation-seeking prompt with one placeholder in the user message and
/// one in the assistant prefix. Injection always happens at layer 0.
struct TargetTemplate {
    std::string user_text = "What is the meaning of \"<|reserved_special_token_0|>\"?";
    std::string assistant_prefix = "The meaning of \"<|reserved_special_token_0|>\" is \"";
    std::size_t injection_layer = 0;
    InjectionSites sites = InjectionSites::both;
};

struct RenderedTemplate {
    std::vector<TokenId> tokens;
    std::size_t user_position = 0;
    std::size_t assistant_position = 0;
    InjectionSites sites = InjectionSites::both;

    std::vector<std::size_t> injection_positions() const;
};

/// Renders through the backend's chat formatting and locates the two
/// placeholder tokens; anything other than exactly two is an error.
RenderedTemplate render_template(const FrozenLM& lm, const TargetTemplate& tmpl);

struct InjectionSpec {
    std::vector<double> vector;
    double external_scale = 1.0;
};

enum class PositionRule { final_token };

std::vector<double> extract_activation(const FrozenLM& lm, std::string_view prompt,
                                       std::size_t layer,
                                       PositionRule rule = PositionRule::final_token);
std::vector<double> extract_activation_at(const FrozenLM& lm, std::span<const TokenId> tokens,
                                          std::size_t layer, std::size_t position);

/// Teacher-forced mean CE of `label_tokens` after the rendered template,
/// with the gradient taken with respect to `spec.vector` (the external scale
/// is chained through).
LossAndGradient loss_with_injection(const FrozenLM& lm, const RenderedTemplate& rendered,
                                    const InjectionSpec& spec,
                                    std::span<const TokenId> label_tokens);
LossAndGradient loss_with_injection(const FrozenLM& lm, const TargetTemplate& tmpl,
                                    const InjectionSpec& spec,
                                    std::span<const TokenId> label_tokens);

struct SamplingConfig {
    bool greedy = true;
    double temperature = 1.0;
    double top_p = 1.0;

    static SamplingConfig greedy_decoding() { return {}; }
    static SamplingConfig nucleus(double temperature, double top_p) { return {false, temperature, top_p}; }
};

enum class StopReason { closing_quote, end_of_turn, max_tokens };

std::string_view to_string(StopReason reason) noexcept;

struct GenerationRecord {
    std::string item_id;
    double scale = 1.0;
    SamplingConfig sampling;
    std::uint64_t seed = 0;
    std::vector<TokenId> tokens;
    /// Detokenized output with a trailing closing quote / end-of-turn removed.
    std::string text;
    StopReason stop_reason = StopReason::max_tokens;
    InjectionSpec injection;
};

inline constexpr std::size_t kDefaultMaxTokens = 64;

/// Picks the next token from logits; greedy ties resolve to the lowest id.
TokenId sample_token(std::span<const double> logits, const SamplingConfig& sampling, Rng& rng);

/// Continues `prompt_tokens`. An empty `injection_positions` means a hard prompt.
GenerationRecord generate_tokens(const FrozenLM& lm, std::span<const TokenId> prompt_tokens,
                                 std::span<const std::size_t> injection_positions,
                                 const InjectionSpec& spec, const SamplingConfig& sampling,
                                 std::size_t max_tokens, std::uint64_t seed);

GenerationRecord generate(const FrozenLM& lm, const RenderedTemplate& rendered,
                          const InjectionSpec& spec, const SamplingConfig& sampling,
                          std::size_t max_tokens = kDefaultMaxTokens, std::uint64_t seed = 0);

/// Hard prompt asking for a description of a topic without naming it.
std::string taboo_prompt(std::string_view topic_phrase, std::string_view original_title,
                         std::optional<std::string_view> category = std::nullopt);

/// Decorator that serializes every call into a backend that does not declare
/// itself concurrent-safe. Safe backends pass straight through.
class SerializedLM final : public FrozenLM {
public:
    explicit SerializedLM(std::shared_ptr<const FrozenLM> inner) : inner_(std::move(inner)) {}

    std::string name() const override { return inner_->name(); }
    std::size_t vocab_size() const override { return inner_->vocab_size(); }
    ModelDims dims() const override { return inner_->dims(); }
    std::size_t layer_count() const override { return inner_->layer_count(); }
    Capabilities capabilities() const override {
        auto c = inner_->capabilities();
        c.concurrent_safe = true;
        return c;
    }
    SpecialTokens special_tokens() const override { return inner_->special_tokens(); }
    std::vector<TokenId> tokenize(std::string_view text) const override {
        auto lock = guard();
        return inner_->tokenize(text);
    }
    std::string detokenize(std::span<const TokenId> tokens) const override {
        auto lock = guard();
        return inner_->detokenize(tokens);
    }
    std::string render_prompt(const ChatPrompt& prompt) const override {
        auto lock = guard();
        return inner_->render_prompt(prompt);
    }
    std::string render_conversation(std::span<const ChatTurn> turns) const override {
        auto lock = guard();
        return inner_->render_conversation(turns);
    }
    std::vector<double> hidden_state(std::span<const TokenId> tokens, std::size_t layer,
                                     std::size_t position) const override {
        auto lock = guard();
        return inner_->hidden_state(tokens, layer, position);
    }
    std::vector<double> next_token_logits(std::span<const TokenId> context,
                                          const InjectionSet& injection) const override {
        auto lock = guard();
        return inner_->next_token_logits(context, injection);
    }
    LossAndGradient teacher_forced_loss(std::span<const TokenId> prompt,
                                        const InjectionSet& injection,
                                        std::span<const TokenId> labels) const override {
        auto lock = guard();
        return inner_->teacher_forced_loss(prompt, injection, labels);
    }
    std::uint64_t weights_checksum() const override {
        auto lock = guard();
        return inner_->weights_checksum();
    }

private:
    std::unique_lock<std::mutex> guard() const {
        if (inner_->capabilities().concurrent_safe) return {};
        return std::unique_lock<std::mutex>(mutex_);
    }

    std::shared_ptr<const FrozenLM> inner_;
    mutable std::mutex mutex_;
};

}  // namespace selfie

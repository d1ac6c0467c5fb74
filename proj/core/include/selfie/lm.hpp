#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfie/adapter.hpp"

namespace selfie {

using TokenId = std::int32_t;

inline constexpr std::string_view kPlaceholderMarker = "<|reserved_special_token_0|>";
inline constexpr std::string_view kEndOfTurnMarker = "<|eot_id|>";
inline constexpr std::string_view kBeginOfTextMarker = "<|begin_of_text|>";

struct SpecialTokens {
    TokenId placeholder = -1;
    TokenId begin_of_text = -1;
    TokenId end_of_turn = -1;
    TokenId quote = -1;
};

struct Capabilities {
    bool supports_extraction = true;
    bool supports_chat_template = false;
    bool concurrent_safe = false;
};

/// A single-turn prompt whose assistant reply is left open for continuation.
struct ChatPrompt {
    std::optional<std::string> system;
    std::string user;
    std::string assistant_prefix;
};

enum class Role { system, user, assistant };

struct ChatTurn {
    Role role = Role::user;
    std::string content;
};

/// The same soft token written into the layer-0 embedding slot of every
/// listed position. Empty positions means no injection.
struct InjectionSet {
    std::vector<std::size_t> positions;
    std::vector<double> embedding;

    bool empty() const noexcept { return positions.empty(); }
};

struct LossAndGradient {
    double loss = 0.0;
    /// d(loss)/d(injected embedding), length d.
    std::vector<double> gradient;
};

/// Frozen language model. Implementations never mutate their weights and
/// must return identical outputs for identical inputs.
class FrozenLM {
public:
    virtual ~FrozenLM() = default;

    virtual std::string name() const = 0;
    /// Size of the output (logit) vocabulary.
    virtual std::size_t vocab_size() const = 0;
    virtual ModelDims dims() const = 0;
    virtual std::size_t layer_count() const = 0;
    virtual Capabilities capabilities() const = 0;
    virtual SpecialTokens special_tokens() const = 0;

    virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const TokenId> tokens) const = 0;

    virtual std::string render_prompt(const ChatPrompt& prompt) const = 0;
    virtual std::string render_conversation(std::span<const ChatTurn> turns) const = 0;

    /// Residual-stream state after layer `layer` (0 = embeddings, L = last
    /// block) at token index `position`.
    virtual std::vector<double> hidden_state(std::span<const TokenId> tokens, std::size_t layer,
                                             std::size_t position) const = 0;

    /// Logits for the token following `context`.
    virtual std::vector<double> next_token_logits(std::span<const TokenId> context,
                                                  const InjectionSet& injection) const = 0;

    /// Teacher-forced mean cross-entropy of `labels` continuing `prompt`,
    /// with its gradient with respect to the injected embedding.
    virtual LossAndGradient teacher_forced_loss(std::span<const TokenId> prompt,
                                                const InjectionSet& injection,
                                                std::span<const TokenId> labels) const = 0;

    /// Checksum over every weight the model owns.
    virtual std::uint64_t weights_checksum() const = 0;
};

}  // namespace selfie

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfie/lm.hpp"
#include "selfie/tokenizer.hpp"

namespace selfie {

enum class ToyKind {
    /// logits = tau * E * x, x the injected vector (zero when nothing is injected).
    echo,
    /// logits = tau * E * (mean of non-injected context embeddings + x).
    mix,
};

struct ToyConfig {
    ToyKind kind = ToyKind::echo;
    std::uint64_t seed = 0;
    std::size_t vocab_size = 32;
    std::size_t d = 32;
    std::size_t layers = 4;
    double tau = 1.0;
    /// Output vocabulary; empty means t0 .. t{vocab_size-1}.
    std::vector<std::string> words;
};

/// Deterministic desk-scale backend. The readout E (V x d) and the content
/// rows of the embedding table both have orthonormal rows, so V <= d.
/// Every layer's hidden state at position i is the mean of the embeddings
/// of tokens 0..i.
class ToyLM final : public FrozenLM {
public:
    explicit ToyLM(ToyConfig config);

    std::string name() const override;
    std::size_t vocab_size() const override { return tokenizer_.output_vocab_size(); }
    ModelDims dims() const override { return ModelDims(d_); }
    std::size_t layer_count() const override { return config_.layers; }
    Capabilities capabilities() const override { return {true, false, true}; }
    SpecialTokens special_tokens() const override { return tokenizer_.special_tokens(); }

    std::vector<TokenId> tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const TokenId> tokens) const override;
    std::string render_prompt(const ChatPrompt& prompt) const override;
    std::string render_conversation(std::span<const ChatTurn> turns) const override;

    std::vector<double> hidden_state(std::span<const TokenId> tokens, std::size_t layer,
                                     std::size_t position) const override;
    std::vector<double> next_token_logits(std::span<const TokenId> context,
                                          const InjectionSet& injection) const override;
    LossAndGradient teacher_forced_loss(std::span<const TokenId> prompt,
                                        const InjectionSet& injection,
                                        std::span<const TokenId> labels) const override;
    std::uint64_t weights_checksum() const override;

    const ToyConfig& config() const noexcept { return config_; }
    double tau() const noexcept { return config_.tau; }
    /// Row t of the readout matrix.
    std::span<const double> readout_row(TokenId t) const;
    /// Row t of the input embedding table.
    std::span<const double> embedding_row(TokenId t) const;

private:
    std::vector<double> readout(std::span<const double> x) const;
    void check_tokens(std::span<const TokenId> tokens) const;

    ToyConfig config_;
    ToyTokenizer tokenizer_;
    std::size_t d_;
    std::vector<double> readout_;    // V x d
    std::vector<double> embedding_;  // input_vocab x d
};

}  // namespace selfie

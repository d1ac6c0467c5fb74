#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "selfie/lm.hpp"

namespace selfie {

/// Word-level tokenizer for the toy backends.
///
/// Ids [0, V) are the output vocabulary (`words`). The placeholder and
/// begin-of-text markers always get input-only ids at V and V+1; the
/// end-of-turn marker and the double quote are output tokens when `words`
/// contains them and input-only ids after that otherwise. Text splits on
/// whitespace, with every ASCII punctuation character its own token. Words
/// missing from the vocabulary hash onto an output id so any text tokenizes.
class ToyTokenizer {
public:
    explicit ToyTokenizer(std::vector<std::string> words);

    /// Vocabulary t0 .. t{V-1}.
    static std::vector<std::string> default_words(std::size_t vocab_size);

    std::size_t output_vocab_size() const noexcept { return output_size_; }
    std::size_t input_vocab_size() const noexcept { return pieces_.size(); }
    const SpecialTokens& special_tokens() const noexcept { return special_; }

    std::vector<TokenId> tokenize(std::string_view text) const;
    std::string detokenize(std::span<const TokenId> tokens) const;
    const std::string& piece(TokenId id) const;

private:
    TokenId lookup_or_hash(std::string_view word) const;

    std::size_t output_size_;
    std::vector<std::string> pieces_;
    std::unordered_map<std::string, TokenId> index_;
    SpecialTokens special_;
};

}  // namespace selfie

#include "selfie/tokenizer.hpp"

#include <cctype>

#include "selfie/digest.hpp"
#include "selfie/error.hpp"

namespace selfie {

namespace {

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }
bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c); }

}  // namespace

ToyTokenizer::ToyTokenizer(std::vector<std::string> words) : output_size_(words.size()) {
    if (words.empty()) fail(ErrorCode::invalid_argument, "toy vocabulary must not be empty");
    pieces_ = std::move(words);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (!index_.emplace(pieces_[i], static_cast<TokenId>(i)).second) {
            fail(ErrorCode::invalid_argument, "duplicate vocabulary entry '" + pieces_[i] + "'");
        }
    }
    auto add_input_only = [&](std::string_view marker) {
        const auto it = index_.find(std::string(marker));
        if (it != index_.end()) return it->second;
        const auto id = static_cast<TokenId>(pieces_.size());
        pieces_.emplace_back(marker);
        index_.emplace(std::string(marker), id);
        return id;
    };
    if (index_.contains(std::string(kPlaceholderMarker)) ||
        index_.contains(std::string(kBeginOfTextMarker))) {
        fail(ErrorCode::invalid_argument, "placeholder and begin-of-text markers are reserved");
    }
    special_.placeholder = add_input_only(kPlaceholderMarker);
    special_.begin_of_text = add_input_only(kBeginOfTextMarker);
    special_.end_of_turn = add_input_only(kEndOfTurnMarker);
    special_.quote = add_input_only("\"");
}

std::vector<std::string> ToyTokenizer::default_words(std::size_t vocab_size) {
    std::vector<std::string> words;
    words.reserve(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) words.push_back("t" + std::to_string(i));
    return words;
}

TokenId ToyTokenizer::lookup_or_hash(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    if (it != index_.end()) return it->second;
    return static_cast<TokenId>(fnv1a64(word) % output_size_);
}

std::vector<TokenId> ToyTokenizer::tokenize(std::string_view text) const {
    static constexpr std::string_view markers[] = {kPlaceholderMarker, kBeginOfTextMarker,
                                                   kEndOfTurnMarker};
    std::vector<TokenId> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        bool matched = false;
        for (auto m : markers) {
            if (text.substr(i).starts_with(m)) {
                out.push_back(index_.at(std::string(m)));
                i += m.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (is_punct(c)) {
            out.push_back(lookup_or_hash(text.substr(i, 1)));
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size()) {
            const auto cj = static_cast<unsigned char>(text[j]);
            if (is_space(cj) || is_punct(cj)) break;
            ++j;
        }
        out.push_back(lookup_or_hash(text.substr(i, j - i)));
        i = j;
    }
    return out;
}

const std::string& ToyTokenizer::piece(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
        fail(ErrorCode::out_of_range, "token id " + std::to_string(id) + " outside vocabulary");
    }
    return pieces_[static_cast<std::size_t>(id)];
}

std::string ToyTokenizer::detokenize(std::span<const TokenId> tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += piece(tokens[i]);
    }
    return out;
}

}  // namespace selfie

#include "selfie/generation_scoring.hpp"

#include "selfie/error.hpp"
#include "selfie/rng.hpp"
#include "selfie/text.hpp"

namespace selfie {

const std::string_view kConversationSystemPrompt =
    "You are a helpful AI assistant who generates EXTREMELY SHORT example conversations. The conversations are "
    "between a user and an assistant, and have the following format:\n"
    "[USER] I'm a user.\n"
    "[ASSISTANT] I'm the assistant.";

const std::string_view kConversationUserTemplate =
    "Produce a VERY SHORT conversation which exhibits '{{LABEL}}'\n"
    "Do not include any other text in your response. Start immediately with the conversation.";

std::string conversation_user_message(std::string_view label) {
    std::string out(kConversationUserTemplate);
    constexpr std::string_view slot = "{{LABEL}}";
    out.replace(out.find(slot), slot.size(), label);
    return out;
}

ParsedConversation parse_conversation(std::string_view generated) {
    constexpr std::string_view user_tag = "[USER]";
    constexpr std::string_view assistant_tag = "[ASSISTANT]";
    ParsedConversation out;
    auto fallback = [&] {
        out.turns = {{Role::assistant, std::string(generated)}};
        out.parse_error = true;
        return out;
    };

    const std::string text = trim(generated);
    std::size_t pos = 0;
    while (pos < text.size()) {
        Role role;
        std::size_t tag_len;
        if (text.compare(pos, user_tag.size(), user_tag) == 0) {
            role = Role::user;
            tag_len = user_tag.size();
        } else if (text.compare(pos, assistant_tag.size(), assistant_tag) == 0) {
            role = Role::assistant;
            tag_len = assistant_tag.size();
        } else {
            return fallback();
        }
        const std::size_t body = pos + tag_len;
        std::size_t next = std::min(text.find(user_tag, body), text.find(assistant_tag, body));
        if (next == std::string::npos) next = text.size();
        std::string content = trim(std::string_view(text).substr(body, next - body));
        if (content.empty()) return fallback();
        out.turns.push_back({role, std::move(content)});
        pos = next;
    }
    if (out.turns.empty()) return fallback();
    return out;
}

std::vector<double> KeywordOracle::activations(std::string_view text) const {
    const auto tokens = lm_.tokenize(text);
    std::vector<double> out;
    out.reserve(tokens.size());
    for (auto t : tokens) {
        const std::string piece = lm_.detokenize(std::span<const TokenId>(&t, 1));
        out.push_back(contains_alias(piece, keyword_) ? 1.0 : 0.0);
    }
    return out;
}

bool is_hit(std::span<const double> activations, bool exclude_first_token) {
    for (std::size_t i = exclude_first_token ? 1 : 0; i < activations.size(); ++i) {
        if (activations[i] != 0.0) return true;
    }
    return false;
}

GenerationScore score_activations(const std::vector<std::vector<double>>& per_trial, bool exclude_first_token) {
    if (per_trial.empty()) fail(ErrorCode::invalid_argument, "generation scoring needs at least one trial");
    GenerationScore s;
    std::size_t hits = 0;
    for (const auto& row : per_trial) {
        const bool h = is_hit(row, exclude_first_token);
        s.hits.push_back(h);
        hits += h ? 1 : 0;
    }
    s.hit_rate = static_cast<double>(hits) / static_cast<double>(per_trial.size());
    s.any_hit = hits > 0;
    return s;
}

GenerationScore score_conversations(const std::vector<std::string>& generated, const FrozenLM& lm,
                                    const ActivationOracle& oracle) {
    std::vector<std::vector<double>> rows;
    rows.reserve(generated.size());
    std::size_t parse_errors = 0;
    for (std::size_t t = 0; t < generated.size(); ++t) {
        const auto parsed = parse_conversation(generated[t]);
        parse_errors += parsed.parse_error ? 1 : 0;
        const std::string rendered = lm.render_conversation(parsed.turns);
        try {
            rows.push_back(oracle.activations(rendered));
        } catch (const std::exception& e) {
            fail(ErrorCode::oracle_failure, "oracle failed on trial " + std::to_string(t) + ": " + e.what());
        }
    }
    auto score = score_activations(rows, oracle.exclude_first_token);
    score.parse_errors = parse_errors;
    return score;
}

GenerationScore generation_score(std::string_view label, const FrozenLM& lm, const ActivationOracle& oracle,
                                 const GenerationScoringConfig& config) {
    if (config.trials == 0) fail(ErrorCode::invalid_argument, "generation scoring needs at least one trial");
    const std::string prompt = lm.render_prompt(
        {std::string(kConversationSystemPrompt), conversation_user_message(label), std::string()});
    const auto tokens = lm.tokenize(prompt);
    std::vector<std::string> texts;
    texts.reserve(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t) {
        texts.push_back(generate_tokens(lm, tokens, {}, {}, config.sampling, config.max_tokens,
                                        derive_seed(config.seed, t))
                            .text);
    }
    return score_conversations(texts, lm, oracle);
}

}  // namespace selfie

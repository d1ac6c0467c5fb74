#include "selfie/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfie/error.hpp"
#include "selfie/numeric.hpp"

namespace selfie {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos;
         pos = text.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

std::vector<std::size_t> RenderedTemplate::injection_positions() const {
    if (sites == InjectionSites::assistant_only) return {assistant_position};
    return {user_position, assistant_position};
}

RenderedTemplate render_template(const FrozenLM& lm, const TargetTemplate& tmpl) {
    if (tmpl.injection_layer != 0) {
        fail(ErrorCode::unsupported, "injection is only supported at layer 0 (the embedding layer)");
    }
    if (count_occurrences(tmpl.user_text, kPlaceholderMarker) != 1 ||
        count_occurrences(tmpl.assistant_prefix, kPlaceholderMarker) != 1) {
        fail(ErrorCode::placeholder_not_found,
             "template user text and assistant prefix must each contain the placeholder exactly once");
    }
    RenderedTemplate out;
    out.sites = tmpl.sites;
    out.tokens = lm.tokenize(lm.render_prompt({std::nullopt, tmpl.user_text, tmpl.assistant_prefix}));
    const TokenId ph = lm.special_tokens().placeholder;
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        if (out.tokens[i] == ph) hits.push_back(i);
    }
    if (hits.size() != 2) {
        fail(ErrorCode::placeholder_not_found, "rendered template has " + std::to_string(hits.size()) +
                                                   " placeholder tokens, expected 2");
    }
    out.user_position = hits[0];
    out.assistant_position = hits[1];
    return out;
}

std::vector<double> extract_activation_at(const FrozenLM& lm, std::span<const TokenId> tokens,
                                          std::size_t layer, std::size_t position) {
    if (!lm.capabilities().supports_extraction) {
        fail(ErrorCode::unsupported, "backend '" + lm.name() + "' does not support activation extraction");
    }
    if (layer > lm.layer_count()) {
        fail(ErrorCode::out_of_range, "layer " + std::to_string(layer) + " outside [0, " +
                                          std::to_string(lm.layer_count()) + "]");
    }
    if (position >= tokens.size()) {
        fail(ErrorCode::out_of_range, "position " + std::to_string(position) + " beyond prompt of " +
                                          std::to_string(tokens.size()) + " tokens");
    }
    return lm.hidden_state(tokens, layer, position);
}

std::vector<double> extract_activation(const FrozenLM& lm, std::string_view prompt, std::size_t layer,
                                       PositionRule) {
    const auto tokens = lm.tokenize(prompt);
    if (tokens.empty()) fail(ErrorCode::empty_input, "cannot extract from an empty prompt");
    return extract_activation_at(lm, tokens, layer, tokens.size() - 1);
}

LossAndGradient loss_with_injection(const FrozenLM& lm, const RenderedTemplate& rendered,
                                    const InjectionSpec& spec, std::span<const TokenId> label_tokens) {
    if (label_tokens.empty()) fail(ErrorCode::empty_input, "label has no tokens");
    if (spec.vector.size() != lm.dims().d) {
        fail(ErrorCode::dimension_mismatch, "injected vector has length " +
                                                std::to_string(spec.vector.size()) + ", model width is " +
                                                std::to_string(lm.dims().d));
    }
    InjectionSet inj{rendered.injection_positions(), scaled(spec.vector, spec.external_scale)};
    auto out = lm.teacher_forced_loss(rendered.tokens, inj, label_tokens);
    for (auto& g : out.gradient) g *= spec.external_scale;
    return out;
}

LossAndGradient loss_with_injection(const FrozenLM& lm, const TargetTemplate& tmpl,
                                    const InjectionSpec& spec, std::span<const TokenId> label_tokens) {
    return loss_with_injection(lm, render_template(lm, tmpl), spec, label_tokens);
}

std::string_view to_string(StopReason reason) noexcept {
    switch (reason) {
        case StopReason::closing_quote: return "closing_quote";
        case StopReason::end_of_turn: return "end_of_turn";
        case StopReason::max_tokens: return "max_tokens";
    }
    return "unknown";
}

TokenId sample_token(std::span<const double> logits, const SamplingConfig& sampling, Rng& rng) {
    if (sampling.greedy) return static_cast<TokenId>(argmax(logits));
    if (!(sampling.temperature > 0.0) || !(sampling.top_p > 0.0) || sampling.top_p > 1.0) {
        fail(ErrorCode::invalid_argument, "sampling needs temperature > 0 and top_p in (0, 1]");
    }
    std::vector<double> scaled_logits(logits.begin(), logits.end());
    for (auto& l : scaled_logits) l /= sampling.temperature;
    const auto probs = softmax(scaled_logits);

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    // Smallest prefix whose mass reaches top_p.
    double mass = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
        mass += probs[order[keep]];
        ++keep;
        if (mass >= sampling.top_p) break;
    }
    double u = rng.uniform() * mass;
    for (std::size_t i = 0; i < keep; ++i) {
        u -= probs[order[i]];
        if (u < 0.0) return static_cast<TokenId>(order[i]);
    }
    return static_cast<TokenId>(order[keep - 1]);
}

GenerationRecord generate_tokens(const FrozenLM& lm, std::span<const TokenId> prompt_tokens,
                                 std::span<const std::size_t> injection_positions,
                                 const InjectionSpec& spec, const SamplingConfig& sampling,
                                 std::size_t max_tokens, std::uint64_t seed) {
    if (max_tokens == 0) fail(ErrorCode::invalid_argument, "max_tokens must be >= 1");
    GenerationRecord rec;
    rec.scale = spec.external_scale;
    rec.sampling = sampling;
    rec.seed = seed;
    rec.injection = spec;

    InjectionSet inj;
    if (!injection_positions.empty()) {
        if (spec.vector.size() != lm.dims().d) {
            fail(ErrorCode::dimension_mismatch, "injected vector does not match model width");
        }
        inj.positions.assign(injection_positions.begin(), injection_positions.end());
        inj.embedding = scaled(spec.vector, spec.external_scale);
    }
    const auto special = lm.special_tokens();
    std::vector<TokenId> context(prompt_tokens.begin(), prompt_tokens.end());
    Rng rng(seed);
    while (rec.tokens.size() < max_tokens) {
        const auto logits = lm.next_token_logits(context, inj);
        const TokenId next = sample_token(logits, sampling, rng);
        rec.tokens.push_back(next);
        context.push_back(next);
        if (next == special.end_of_turn) {
            const bool quoted = rec.tokens.size() >= 2 && rec.tokens[rec.tokens.size() - 2] == special.quote;
            rec.stop_reason = quoted ? StopReason::closing_quote : StopReason::end_of_turn;
            break;
        }
    }
    std::span<const TokenId> body(rec.tokens);
    if (rec.stop_reason != StopReason::max_tokens) {
        body = body.first(body.size() - (rec.stop_reason == StopReason::closing_quote ? 2 : 1));
    }
    rec.text = lm.detokenize(body);
    return rec;
}

GenerationRecord generate(const FrozenLM& lm, const RenderedTemplate& rendered, const InjectionSpec& spec,
                          const SamplingConfig& sampling, std::size_t max_tokens, std::uint64_t seed) {
    const auto positions = rendered.injection_positions();
    return generate_tokens(lm, rendered.tokens, positions, spec, sampling, max_tokens, seed);
}

std::string taboo_prompt(std::string_view topic_phrase, std::string_view original_title,
                         std::optional<std::string_view>) {
    if (original_title.empty()) fail(ErrorCode::invalid_argument, "taboo prompt needs a non-empty title");
    std::string out = "Describe ";
    out += topic_phrase;
    out += " without using the word \"";
    out += original_title;
    out += "\", any part of it, or obvious synonyms. Be specific enough that someone could guess what "
           "you're describing.";
    return out;
}

}  // namespace selfie

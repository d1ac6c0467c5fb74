#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "selfie/dataset.hpp"
#include "selfie/lm.hpp"
#include "selfie/toy_lm.hpp"

namespace testing {

inline std::vector<std::string> word_list(std::size_t n, const std::string& stem = "w") {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
    return out;
}

/// Records whose vector points at the readout row of their single-word
/// label, plus isotropic noise. Ids are "<prefix><i>".
inline selfie::Dataset readout_dataset(const selfie::ToyLM& lm, std::size_t n, double sigma, std::uint64_t seed,
                                       const std::string& prefix = "r") {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, lm.vocab_size() - 1);
    const auto d = lm.dims().d;
    std::vector<std::vector<double>> rows;
    std::vector<selfie::VectorRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<selfie::TokenId>(pick(gen));
        auto v = random_vector(d, gen, sigma);
        const auto row = lm.readout_row(y);
        for (std::size_t c = 0; c < d; ++c) v[c] += row[c];
        rows.push_back(unit(v));
        selfie::VectorRecord r;
        r.id = prefix + std::to_string(i);
        r.row = i;
        r.labels = {lm.detokenize(std::vector<selfie::TokenId>{y})};
        records.push_back(r);
    }
    return selfie::Dataset(std::make_shared<const selfie::VectorBank>(selfie::VectorBank::from_rows(rows)), records);
}

/// FullRank adapter whose W maps content embedding row t onto gain times
/// readout row t, with zero bias.
inline selfie::Adapter embedding_to_readout(const selfie::ToyLM& lm, double gain) {
    const auto d = lm.dims().d;
    std::vector<float> p(d + d * d, 0.0f);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double w = 0.0;
            for (std::size_t t = 0; t < lm.vocab_size(); ++t) {
                const auto id = static_cast<selfie::TokenId>(t);
                w += lm.readout_row(id)[i] * lm.embedding_row(id)[j];
            }
            p[d + i * d + j] = static_cast<float>(gain * w);
        }
    }
    return selfie::Adapter::from_parameters(selfie::AdapterKind::full_rank, lm.dims(), 0, std::move(p));
}

/// Forwards every call; subclasses override what they need to perturb.
class DelegatingLM : public selfie::FrozenLM {
public:
    explicit DelegatingLM(const selfie::FrozenLM& inner) : inner_(inner) {}

    std::string name() const override { return "delegating:" + inner_.name(); }
    std::size_t vocab_size() const override { return inner_.vocab_size(); }
    selfie::ModelDims dims() const override { return inner_.dims(); }
    std::size_t layer_count() const override { return inner_.layer_count(); }
    selfie::Capabilities capabilities() const override { return inner_.capabilities(); }
    selfie::SpecialTokens special_tokens() const override { return inner_.special_tokens(); }
    std::vector<selfie::TokenId> tokenize(std::string_view text) const override { return inner_.tokenize(text); }
    std::string detokenize(std::span<const selfie::TokenId> t) const override { return inner_.detokenize(t); }
    std::string render_prompt(const selfie::ChatPrompt& p) const override { return inner_.render_prompt(p); }
    std::string render_conversation(std::span<const selfie::ChatTurn> t) const override {
        return inner_.render_conversation(t);
    }
    std::vector<double> hidden_state(std::span<const selfie::TokenId> tokens, std::size_t layer,
                                     std::size_t position) const override {
        return inner_.hidden_state(tokens, layer, position);
    }
    std::vector<double> next_token_logits(std::span<const selfie::TokenId> context,
                                          const selfie::InjectionSet& injection) const override {
        return inner_.next_token_logits(context, injection);
    }
    selfie::LossAndGradient teacher_forced_loss(std::span<const selfie::TokenId> prompt,
                                                const selfie::InjectionSet& injection,
                                                std::span<const selfie::TokenId> labels) const override {
        return inner_.teacher_forced_loss(prompt, injection, labels);
    }
    std::uint64_t weights_checksum() const override { return inner_.weights_checksum(); }

protected:
    const selfie::FrozenLM& inner_;
};

}  // namespace testing

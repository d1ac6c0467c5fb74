#include "selfie/toy_lm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "selfie/digest.hpp"
#include "selfie/error.hpp"
#include "selfie/numeric.hpp"
#include "selfie/rng.hpp"

namespace selfie {

namespace {

// rows x cols matrix with orthonormal rows (rows <= cols), row-major.
std::vector<double> orthonormal_rows(std::size_t rows, std::size_t cols, Rng& rng) {
    Eigen::MatrixXd g(cols, rows);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cols),
                                                                       static_cast<Eigen::Index>(rows));
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
        }
    }
    return out;
}

std::vector<std::string> resolve_words(const ToyConfig& c) {
    if (c.words.empty()) return ToyTokenizer::default_words(c.vocab_size);
    return c.words;
}

}  // namespace

ToyLM::ToyLM(ToyConfig config)
    : config_(std::move(config)), tokenizer_(resolve_words(config_)), d_(config_.d) {
    config_.vocab_size = tokenizer_.output_vocab_size();
    const auto v = config_.vocab_size;
    if (d_ == 0) fail(ErrorCode::config_error, "toy backend needs d >= 1");
    if (v > d_) {
        fail(ErrorCode::config_error, "toy backend needs vocab_size <= d for orthonormal readout rows (V=" +
                                          std::to_string(v) + ", d=" + std::to_string(d_) + ")");
    }
    if (!(config_.tau > 0.0)) fail(ErrorCode::config_error, "toy backend needs tau > 0");

    Rng rng(config_.seed);
    readout_ = orthonormal_rows(v, d_, rng);
    embedding_ = orthonormal_rows(v, d_, rng);
    const auto n_in = tokenizer_.input_vocab_size();
    embedding_.resize(n_in * d_);
    for (std::size_t t = v; t < n_in; ++t) {
        std::vector<double> row(d_);
        for (auto& x : row) x = rng.normal();
        const auto unit = normalized(row);
        std::copy(unit.begin(), unit.end(), embedding_.begin() + static_cast<std::ptrdiff_t>(t * d_));
    }
}

std::string ToyLM::name() const {
    return config_.kind == ToyKind::echo ? "echo" : "mix";
}

std::vector<TokenId> ToyLM::tokenize(std::string_view text) const { return tokenizer_.tokenize(text); }

std::string ToyLM::detokenize(std::span<const TokenId> tokens) const {
    return tokenizer_.detokenize(tokens);
}

std::string ToyLM::render_prompt(const ChatPrompt& prompt) const {
    std::string out(kBeginOfTextMarker);
    if (prompt.system) out += *prompt.system + "\n";
    out += prompt.user + "\n" + prompt.assistant_prefix;
    return out;
}

std::string ToyLM::render_conversation(std::span<const ChatTurn> turns) const {
    std::string out(kBeginOfTextMarker);
    for (const auto& t : turns) {
        out += t.content;
        out += kEndOfTurnMarker;
    }
    return out;
}

void ToyLM::check_tokens(std::span<const TokenId> tokens) const {
    for (auto t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= tokenizer_.input_vocab_size()) {
            fail(ErrorCode::out_of_range, "token id " + std::to_string(t) + " outside vocabulary");
        }
    }
}

std::span<const double> ToyLM::readout_row(TokenId t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size()) {
        fail(ErrorCode::out_of_range, "token id " + std::to_string(t) + " has no readout row");
    }
    return std::span<const double>(readout_).subspan(static_cast<std::size_t>(t) * d_, d_);
}

std::span<const double> ToyLM::embedding_row(TokenId t) const {
    check_tokens(std::span<const TokenId>(&t, 1));
    return std::span<const double>(embedding_).subspan(static_cast<std::size_t>(t) * d_, d_);
}

std::vector<double> ToyLM::readout(std::span<const double> x) const {
    const auto v = vocab_size();
    std::vector<double> logits(v, 0.0);
    for (std::size_t r = 0; r < v; ++r) {
        double acc = 0.0;
        const double* row = readout_.data() + r * d_;
        for (std::size_t c = 0; c < d_; ++c) acc += row[c] * x[c];
        logits[r] = config_.tau * acc;
    }
    return logits;
}

std::vector<double> ToyLM::hidden_state(std::span<const TokenId> tokens, std::size_t layer,
                                        std::size_t position) const {
    if (layer > config_.layers) {
        fail(ErrorCode::out_of_range, "layer " + std::to_string(layer) + " outside [0, " +
                                          std::to_string(config_.layers) + "]");
    }
    if (position >= tokens.size()) {
        fail(ErrorCode::out_of_range, "position " + std::to_string(position) +
                                          " beyond prompt of " + std::to_string(tokens.size()) +
                                          " tokens");
    }
    check_tokens(tokens);
    std::vector<double> h(d_, 0.0);
    for (std::size_t i = 0; i <= position; ++i) {
        const double* row = embedding_.data() + static_cast<std::size_t>(tokens[i]) * d_;
        for (std::size_t c = 0; c < d_; ++c) h[c] += row[c];
    }
    const double inv = 1.0 / static_cast<double>(position + 1);
    for (auto& x : h) x *= inv;
    return h;
}

std::vector<double> ToyLM::next_token_logits(std::span<const TokenId> context,
                                             const InjectionSet& injection) const {
    check_tokens(context);
    std::vector<double> x(d_, 0.0);
    if (!injection.empty()) {
        if (injection.embedding.size() != d_) {
            fail(ErrorCode::dimension_mismatch, "injected embedding has wrong width");
        }
        x = injection.embedding;
    }
    if (config_.kind == ToyKind::mix) {
        std::vector<double> sum(d_, 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < context.size(); ++i) {
            if (std::find(injection.positions.begin(), injection.positions.end(), i) !=
                injection.positions.end()) {
                continue;
            }
            const double* row = embedding_.data() + static_cast<std::size_t>(context[i]) * d_;
            for (std::size_t c = 0; c < d_; ++c) sum[c] += row[c];
            ++count;
        }
        if (count) {
            for (std::size_t c = 0; c < d_; ++c) x[c] += sum[c] / static_cast<double>(count);
        }
    }
    return readout(x);
}

LossAndGradient ToyLM::teacher_forced_loss(std::span<const TokenId> prompt,
                                           const InjectionSet& injection,
                                           std::span<const TokenId> labels) const {
    if (labels.empty()) fail(ErrorCode::empty_input, "teacher-forced loss needs at least one label token");
    check_tokens(prompt);
    for (auto t : labels) {
        if (t < 0 || static_cast<std::size_t>(t) >= vocab_size()) {
            fail(ErrorCode::out_of_range,
                 "label token " + std::to_string(t) + " is not in the output vocabulary");
        }
    }
    std::vector<double> inj(d_, 0.0);
    if (!injection.empty()) {
        if (injection.embedding.size() != d_) {
            fail(ErrorCode::dimension_mismatch, "injected embedding has wrong width");
        }
        inj = injection.embedding;
    }

    const bool mix = config_.kind == ToyKind::mix;
    std::vector<double> sum(d_, 0.0);
    std::size_t count = 0;
    auto add_token = [&](TokenId t) {
        const double* row = embedding_.data() + static_cast<std::size_t>(t) * d_;
        for (std::size_t c = 0; c < d_; ++c) sum[c] += row[c];
        ++count;
    };
    if (mix) {
        for (std::size_t i = 0; i < prompt.size(); ++i) {
            if (std::find(injection.positions.begin(), injection.positions.end(), i) ==
                injection.positions.end()) {
                add_token(prompt[i]);
            }
        }
    }

    const auto v = vocab_size();
    std::vector<double> dlogits(v, 0.0);
    double loss = 0.0;
    std::vector<double> x(d_);
    for (auto label : labels) {
        for (std::size_t c = 0; c < d_; ++c) {
            x[c] = inj[c] + (mix && count ? sum[c] / static_cast<double>(count) : 0.0);
        }
        const auto logp = log_softmax(readout(x));
        loss -= logp[static_cast<std::size_t>(label)];
        for (std::size_t r = 0; r < v; ++r) dlogits[r] += std::exp(logp[r]);
        dlogits[static_cast<std::size_t>(label)] -= 1.0;
        if (mix) add_token(label);
    }
    const double n = static_cast<double>(labels.size());
    LossAndGradient out{loss / n, std::vector<double>(d_, 0.0)};
    for (std::size_t r = 0; r < v; ++r) {
        const double coeff = config_.tau * dlogits[r] / n;
        const double* row = readout_.data() + r * d_;
        for (std::size_t c = 0; c < d_; ++c) out.gradient[c] += coeff * row[c];
    }
    return out;
}

std::uint64_t ToyLM::weights_checksum() const {
    auto bytes_of = [](const std::vector<double>& v) {
        return std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(v.data()),
                                             v.size() * sizeof(double));
    };
    std::uint64_t h = fnv1a64(bytes_of(readout_));
    h = fnv1a64(bytes_of(embedding_), h);
    const std::vector<double> tau{config_.tau};
    return fnv1a64(bytes_of(tau), h);
}

}  // namespace selfie

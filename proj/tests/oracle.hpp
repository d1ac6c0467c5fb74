#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the library code it checks, apart from reading toy weights.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfie/adapter.hpp"
#include "selfie/toy_lm.hpp"

namespace oracle {

using Vec = std::vector<double>;

/// Dense form: f(h) = M h + c with M assembled explicitly from the blocks.
struct DenseMap {
    std::size_t d = 0;
    Vec m;  // d x d row-major
    Vec c;
};

inline DenseMap dense_map(selfie::AdapterKind kind, std::size_t d, std::size_t r, const Vec& p) {
    using K = selfie::AdapterKind;
    DenseMap out{d, Vec(d * d, 0.0), Vec(d, 0.0)};
    std::size_t at = 0;
    double alpha = 0.0;
    if (kind == K::identity) alpha = 1.0;
    if (kind == K::scale_only || kind == K::scalar_affine || kind == K::scalar_affine_low_rank) alpha = p[at++];
    for (std::size_t i = 0; i < d; ++i) out.m[i * d + i] = alpha;
    if (kind != K::identity && kind != K::scale_only) {
        for (std::size_t i = 0; i < d; ++i) out.c[i] = p[at++];
    }
    if (kind == K::scalar_affine_low_rank || kind == K::low_rank_only) {
        const std::size_t u0 = at, v0 = at + d * r;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t k = 0; k < r; ++k) out.m[i * d + j] += p[u0 + i * r + k] * p[v0 + j * r + k];
        at += 2 * d * r;
    }
    if (kind == K::full_rank) {
        for (std::size_t i = 0; i < d * d; ++i) out.m[i] = p[at + i];
        at += d * d;
    }
    return out;
}

inline Vec apply(const DenseMap& f, const Vec& h) {
    Vec y = f.c;
    for (std::size_t i = 0; i < f.d; ++i)
        for (std::size_t j = 0; j < f.d; ++j) y[i] += f.m[i * f.d + j] * h[j];
    return y;
}

inline double logsumexp(const Vec& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

/// Mean teacher-forced CE on the echo backend: every label position reads
/// logits tau * E x regardless of context.
inline double echo_loss(const selfie::ToyLM& lm, const Vec& x, const std::vector<selfie::TokenId>& labels) {
    const std::size_t v = lm.vocab_size();
    Vec z(v, 0.0);
    for (std::size_t t = 0; t < v; ++t) {
        const auto row = lm.readout_row(static_cast<selfie::TokenId>(t));
        for (std::size_t c = 0; c < x.size(); ++c) z[t] += lm.tau() * row[c] * x[c];
    }
    const double lse = logsumexp(z);
    double loss = 0.0;
    for (auto y : labels) loss += lse - z[static_cast<std::size_t>(y)];
    return loss / static_cast<double>(labels.size());
}

/// Mean CE on the mix backend: position j sees the mean embedding of the
/// non-injected prompt tokens plus labels[0..j), plus x.
inline double mix_loss(const selfie::ToyLM& lm, const std::vector<selfie::TokenId>& prompt,
                       const std::vector<std::size_t>& injected_at, const Vec& x,
                       const std::vector<selfie::TokenId>& labels) {
    const std::size_t d = x.size(), v = lm.vocab_size();
    std::vector<selfie::TokenId> ctx;
    for (std::size_t i = 0; i < prompt.size(); ++i) {
        if (std::find(injected_at.begin(), injected_at.end(), i) == injected_at.end()) ctx.push_back(prompt[i]);
    }
    double loss = 0.0;
    for (auto y : labels) {
        Vec state = x;
        if (!ctx.empty()) {
            for (auto t : ctx) {
                const auto e = lm.embedding_row(t);
                for (std::size_t c = 0; c < d; ++c) state[c] += e[c] / static_cast<double>(ctx.size());
            }
        }
        Vec z(v, 0.0);
        for (std::size_t t = 0; t < v; ++t) {
            const auto row = lm.readout_row(static_cast<selfie::TokenId>(t));
            for (std::size_t c = 0; c < d; ++c) z[t] += lm.tau() * row[c] * state[c];
        }
        loss += logsumexp(z) - z[static_cast<std::size_t>(y)];
        ctx.push_back(y);
    }
    return loss / static_cast<double>(labels.size());
}

/// Central differences of f at p with the given step.
inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec p, double step) {
    Vec g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + step;
        const double up = f(p);
        p[i] = keep - step;
        const double down = f(p);
        p[i] = keep;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const Vec& a, const Vec& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// ---- brute-force metric references -------------------------------------

inline double recall(const std::vector<std::size_t>& ranks, std::size_t k) {
    std::size_t hit = 0;
    for (auto r : ranks) hit += (r <= k) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

inline double mrr(const std::vector<std::size_t>& ranks) {
    double s = 0.0;
    for (auto r : ranks) s += 1.0 / static_cast<double>(r);
    return s / static_cast<double>(ranks.size());
}

/// Enumerates every window start and every item's window entries.
inline std::size_t best_window(const std::vector<Vec>& scores, std::size_t n) {
    std::size_t best_start = 0;
    double best = -INFINITY;
    for (std::size_t s = 0; s + n <= scores.front().size(); ++s) {
        double total = 0.0;
        for (const auto& row : scores) {
            double m = row[s];
            for (std::size_t j = s; j < s + n; ++j) m = row[j] > m ? row[j] : m;
            total += m;
        }
        total /= static_cast<double>(scores.size());
        if (total > best) {
            best = total;
            best_start = s;
        }
    }
    return best_start;
}

/// Scans positions in order and stops at the first one any series crosses.
inline std::optional<std::size_t> first_crossing(const std::map<std::string, Vec>& series, double threshold) {
    std::size_t longest = 0;
    for (const auto& kv : series) longest = std::max(longest, kv.second.size());
    for (std::size_t p = 0; p < longest; ++p) {
        for (const auto& kv : series) {
            if (p < kv.second.size() && kv.second[p] > threshold) return p;
        }
    }
    return std::nullopt;
}

/// {both, trained_only, untrained_only, neither}.
inline std::array<std::size_t, 4> contingency(const std::vector<bool>& trained, const std::vector<bool>& untrained) {
    std::array<std::size_t, 4> cells{0, 0, 0, 0};
    for (std::size_t i = 0; i < trained.size(); ++i) {
        const int idx = trained[i] ? (untrained[i] ? 0 : 1) : (untrained[i] ? 2 : 3);
        ++cells[static_cast<std::size_t>(idx)];
    }
    return cells;
}

}  // namespace oracle

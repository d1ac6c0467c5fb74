#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "selfie/contrastive.hpp"
#include "selfie/metrics.hpp"

namespace selfie {

/// Text to real vector. Implementations must be deterministic.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Bag of hashed character n-grams over lowercased, whitespace-normalized
/// text, L2-normalized. Needs no model weights.
class HashingEmbedder final : public TextEmbedder {
public:
    explicit HashingEmbedder(std::size_t dim = 1024, std::size_t min_n = 3, std::size_t max_n = 5);

    std::size_t dim() const override { return dim_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    std::size_t dim_;
    std::size_t min_n_;
    std::size_t max_n_;
};

/// "<title>\n- <description>\n- ..." for one topic.
std::string topic_document(const Topic& topic);

/// One document per topic, searched by cosine similarity.
class RetrievalIndex {
public:
    RetrievalIndex(const std::vector<Topic>& topics, std::shared_ptr<const TextEmbedder> embedder);

    std::size_t size() const noexcept { return titles_.size(); }
    const std::vector<std::string>& titles() const noexcept { return titles_; }
    /// Index of a topic by title; unknown_id when absent.
    std::size_t topic_index(std::string_view title) const;

    /// 1-based rank of topic `topic` among all documents for the query text.
    /// Documents with equal similarity are ordered by topic index.
    std::size_t rank(std::string_view query, std::size_t topic) const;

private:
    std::shared_ptr<const TextEmbedder> embedder_;
    std::vector<std::string> titles_;
    std::vector<std::vector<double>> embeddings_;
};

struct RetrievalScores {
    /// Per query topic: rank of each candidate, and the best (minimum).
    std::vector<std::vector<std::size_t>> candidate_ranks;
    std::vector<std::size_t> best_ranks;
    std::vector<std::size_t> ks;
    std::vector<double> recall;  // parallel to ks
    double mrr = 0.0;
};

struct RetrievalQuery {
    std::string topic_title;
    std::vector<std::string> candidates;
};

RetrievalScores retrieval_score(const std::vector<RetrievalQuery>& queries, const RetrievalIndex& index,
                                const std::vector<std::size_t>& ks);

}  // namespace selfie

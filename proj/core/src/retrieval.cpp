#include "selfie/retrieval.hpp"

#include <algorithm>
#include <cctype>

#include "selfie/digest.hpp"
#include "selfie/error.hpp"
#include "selfie/numeric.hpp"
#include "selfie/text.hpp"

namespace selfie {

HashingEmbedder::HashingEmbedder(std::size_t dim, std::size_t min_n, std::size_t max_n)
    : dim_(dim), min_n_(min_n), max_n_(max_n) {
    if (dim == 0 || min_n == 0 || max_n < min_n) fail(ErrorCode::invalid_argument, "bad embedder shape");
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
    std::string s = " " + normalize_whitespace(text) + " ";
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<double> v(dim_, 0.0);
    for (std::size_t n = min_n_; n <= max_n_; ++n) {
        for (std::size_t i = 0; i + n <= s.size(); ++i) {
            const std::uint64_t h = fnv1a64(std::string_view(s).substr(i, n));
            v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
        }
    }
    const double norm = l2_norm(v);
    if (norm > 0.0) {
        for (auto& x : v) x /= norm;
    }
    return v;
}

std::string topic_document(const Topic& topic) {
    std::string doc = topic.title;
    for (const auto& d : topic.labels) doc += "\n- " + d;
    return doc;
}

RetrievalIndex::RetrievalIndex(const std::vector<Topic>& topics, std::shared_ptr<const TextEmbedder> embedder)
    : embedder_(std::move(embedder)) {
    if (!embedder_) fail(ErrorCode::invalid_argument, "retrieval index needs an embedder");
    if (topics.empty()) fail(ErrorCode::empty_input, "retrieval index needs at least one topic");
    for (const auto& t : topics) {
        if (std::find(titles_.begin(), titles_.end(), t.title) != titles_.end()) {
            fail(ErrorCode::invalid_argument, "duplicate topic '" + t.title + "'");
        }
        titles_.push_back(t.title);
        embeddings_.push_back(embedder_->embed(topic_document(t)));
    }
}

std::size_t RetrievalIndex::topic_index(std::string_view title) const {
    auto it = std::find(titles_.begin(), titles_.end(), title);
    if (it == titles_.end()) fail(ErrorCode::unknown_id, "topic '" + std::string(title) + "' is not in the index");
    return static_cast<std::size_t>(it - titles_.begin());
}

std::size_t RetrievalIndex::rank(std::string_view query, std::size_t topic) const {
    if (topic >= size()) fail(ErrorCode::out_of_range, "topic index out of range");
    const auto q = embedder_->embed(query);
    const double target = dot(q, embeddings_[topic]);
    std::size_t rank = 1;
    for (std::size_t i = 0; i < size(); ++i) {
        if (i == topic) continue;
        const double s = dot(q, embeddings_[i]);
        if (s > target || (s == target && i < topic)) ++rank;
    }
    return rank;
}

RetrievalScores retrieval_score(const std::vector<RetrievalQuery>& queries, const RetrievalIndex& index,
                                const std::vector<std::size_t>& ks) {
    if (queries.empty()) fail(ErrorCode::empty_input, "no retrieval queries");
    RetrievalScores out;
    out.ks = ks;
    for (const auto& q : queries) {
        const std::size_t topic = index.topic_index(q.topic_title);
        if (q.candidates.empty()) fail(ErrorCode::empty_input, "topic '" + q.topic_title + "' has no candidates");
        std::vector<std::size_t> ranks;
        ranks.reserve(q.candidates.size());
        for (const auto& c : q.candidates) ranks.push_back(index.rank(c, topic));
        out.best_ranks.push_back(best_rank(ranks));
        out.candidate_ranks.push_back(std::move(ranks));
    }
    for (auto k : ks) out.recall.push_back(recall_at_k(out.best_ranks, k));
    out.mrr = mean_reciprocal_rank(out.best_ranks);
    return out;
}

}  // namespace selfie

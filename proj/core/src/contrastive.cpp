#include "selfie/contrastive.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "selfie/error.hpp"
#include "selfie/harness.hpp"
#include "selfie/numeric.hpp"
#include "selfie/text.hpp"

namespace selfie {

std::vector<Topic> load_topics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_failure, "cannot open topic file '" + path.string() + "'");
    std::vector<Topic> topics;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            topics.push_back({j.at("original_title").get<std::string>(), j.at("prompt").get<std::string>(),
                              j.at("labels").get<std::vector<std::string>>()});
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::invalid_argument, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return topics;
}

void save_topics(const std::vector<Topic>& topics, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_failure, "cannot write topic file '" + path.string() + "'");
    for (const auto& t : topics) {
        out << nlohmann::json{{"original_title", t.title}, {"prompt", t.prompt}, {"labels", t.labels}}.dump()
            << '\n';
    }
}

ContrastiveResult extract_contrastive(const FrozenLM& lm, const std::vector<Topic>& topics,
                                      const std::vector<int>& layers) {
    if (topics.size() < 2) fail(ErrorCode::empty_input, "contrastive extraction needs at least two topics");
    if (layers.empty()) fail(ErrorCode::empty_input, "contrastive extraction needs at least one layer");
    const auto d = lm.dims().d;

    std::vector<std::vector<double>> unit_rows;
    std::vector<VectorRecord> records;
    std::map<int, std::vector<double>> means;
    std::vector<std::string> degenerate;

    for (int layer : layers) {
        if (layer < 0) fail(ErrorCode::out_of_range, "negative layer index");
        std::vector<std::vector<double>> raw;
        raw.reserve(topics.size());
        for (const auto& t : topics) raw.push_back(extract_activation(lm, t.prompt, static_cast<std::size_t>(layer)));
        std::vector<double> mean(d, 0.0);
        for (const auto& r : raw) {
            for (std::size_t c = 0; c < d; ++c) mean[c] += r[c];
        }
        for (auto& m : mean) m /= static_cast<double>(raw.size());

        for (std::size_t i = 0; i < topics.size(); ++i) {
            std::vector<double> diff(d);
            for (std::size_t c = 0; c < d; ++c) diff[c] = raw[i][c] - mean[c];
            const std::string id = "topic-" + std::to_string(i) + "@L" + std::to_string(layer);
            const double norm = l2_norm(diff);
            if (norm == 0.0) {
                degenerate.push_back(id);
                continue;
            }
            VectorRecord r;
            r.id = id;
            r.row = unit_rows.size();
            r.layer = layer;
            r.labels = topics[i].labels;
            r.origin = Origin::contrastive_topic;
            r.extras = {{"title", topics[i].title}, {"topic_index", i}, {"raw_norm", l2_norm(raw[i])},
                        {"contrast_norm", norm}};
            unit_rows.push_back(scaled(diff, 1.0 / norm));
            records.push_back(std::move(r));
        }
        means[layer] = std::move(mean);
    }
    if (!degenerate.empty()) {
        std::string ids;
        for (const auto& id : degenerate) ids += (ids.empty() ? "" : ", ") + id;
        fail(ErrorCode::degenerate_vector, "activation equals the topic mean for: " + ids);
    }
    return {Dataset(std::make_shared<const VectorBank>(VectorBank::from_rows(unit_rows)), std::move(records)),
            std::move(means)};
}

}  // namespace selfie

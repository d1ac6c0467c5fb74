#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "selfie/contrastive.hpp"
#include "selfie/error.hpp"
#include "selfie/eval_report.hpp"
#include "selfie/generation_scoring.hpp"
#include "selfie/metrics.hpp"
#include "selfie/retrieval.hpp"
#include "selfie/rng.hpp"
#include "selfie/scale_grid.hpp"
#include "selfie/train.hpp"

namespace selfie::cli {

namespace {

const std::set<std::string> kMethods{"trained", "untrained", "repeat_x6", "paraphrases", "taboo"};
const std::set<std::string> kMetrics{"retrieval", "generation"};

// Seed streams, kept apart so adding a metric never shifts generation.
constexpr std::uint64_t kGenerationStream = 1;
constexpr std::uint64_t kScoringStream = 2;
constexpr std::uint64_t kCalibrationStream = 3;
constexpr std::uint64_t kTabooStream = 4;

bool selected(const std::vector<std::string>& list, const std::string& name) {
    return std::find(list.begin(), list.end(), name) != list.end();
}

std::string item_title(const VectorRecord& r) {
    if (!r.extras.contains("title")) fail(ErrorCode::missing_label, "record '" + r.id + "' has no extras.title");
    return r.extras.at("title").get<std::string>();
}

// Desk-scale oracle: an explicit extras.keyword, else the label's first word.
std::string item_keyword(const VectorRecord& r) {
    if (r.extras.contains("keyword")) return r.extras.at("keyword").get<std::string>();
    std::istringstream words(r.labels.at(0));
    std::string first;
    words >> first;
    if (first.empty()) fail(ErrorCode::missing_label, "record '" + r.id + "' has an empty label");
    return first;
}

struct Scorer {
    const RunConfig& config;
    const FrozenLM& lm;
    const Dataset& items;
    std::unique_ptr<RetrievalIndex> index;

    bool retrieval() const { return index != nullptr; }
    bool generation() const { return selected(config.eval.metrics, "generation"); }

    std::size_t rank(std::size_t i, const std::string& text) const {
        return index->rank(text, index->topic_index(item_title(items.record(i))));
    }

    GenerationScore score(std::size_t i, std::size_t candidate, const std::string& text) const {
        const KeywordOracle oracle(lm, item_keyword(items.record(i)));
        GenerationScoringConfig cfg;
        cfg.trials = config.eval.scoring_trials;
        cfg.max_tokens = config.eval.scoring_max_tokens;
        cfg.seed = derive_seed(derive_seed(derive_seed(config.seed, kScoringStream), i), candidate);
        return generation_score(text, lm, oracle, cfg);
    }

    ItemResult evaluate(std::size_t i, std::vector<std::string> labels, std::vector<double> scales) const {
        ItemResult r;
        r.item_id = items.record(i).id;
        r.scales = std::move(scales);
        for (std::size_t c = 0; c < labels.size(); ++c) {
            if (retrieval()) r.ranks.push_back(rank(i, labels[c]));
            if (generation()) {
                const auto g = score(i, c, labels[c]);
                r.hit_rates.push_back(g.hit_rate);
                r.parse_errors.push_back(g.parse_errors);
            }
        }
        r.labels = std::move(labels);
        return r;
    }
};

std::vector<ScaleItem> scale_items(const Dataset& data) {
    std::vector<ScaleItem> out;
    for (std::size_t i = 0; i < data.size(); ++i) out.push_back({data.record(i).id, data.vector(i)});
    return out;
}

std::size_t calibrate(const Adapter& adapter, const RunConfig& config, const FrozenLM& lm,
                      const RenderedTemplate& rendered, const Scorer& scorer, const std::string& method) {
    if (config.data.calibration.empty()) return config.scale_grid.window_start;
    const auto& metric_name = config.eval.calibration_metric;
    if (!kMetrics.contains(metric_name)) {
        fail(ErrorCode::config_error, "eval.calibration_metric must be 'retrieval' or 'generation' when "
                                      "data.calibration is set, got '" + metric_name + "'");
    }
    const auto calib = require_dataset(config.data.calibration, "data.calibration");
    Scorer calib_scorer{config, lm, calib, nullptr};
    if (metric_name == "retrieval") {
        if (!scorer.index) fail(ErrorCode::config_error, "retrieval calibration needs data.topics");
        calib_scorer.index = std::make_unique<RetrievalIndex>(*scorer.index);
    }
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < calib.size(); ++i) position[calib.record(i).id] = i;
    const GenerationMetric metric = [&](const ScaleItem& item, const GenerationRecord& rec) {
        const auto i = position.at(item.id);
        if (metric_name == "retrieval") return 1.0 / static_cast<double>(calib_scorer.rank(i, rec.text));
        return calib_scorer.score(i, 0, rec.text).hit_rate;
    };
    const auto start = calibrate_window(adapter, lm, rendered, scale_items(calib), config.scale_grid,
                                        config.eval.sampling.config(), metric,
                                        derive_seed(config.seed, kCalibrationStream), config.eval.max_tokens);
    std::cout << method << ": calibrated window start " << start << "\n";
    return start;
}

EvalReport adapter_method(const std::string& method, const Adapter& adapter, const RunConfig& config,
                          const FrozenLM& lm, const Scorer& scorer, nlohmann::json& windows) {
    const auto rendered = render_template(lm, config.prompt);
    ScaleGrid grid = config.scale_grid;
    grid.window_start = calibrate(adapter, config, lm, rendered, scorer, method);
    windows[method] = {{"window_start", grid.window_start}, {"scales", grid.active()}};
    std::vector<ItemResult> results;
    const auto& items = scorer.items;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto records = generate_multiscale(adapter, lm, rendered, {items.record(i).id, items.vector(i)}, grid,
                                                 config.eval.sampling.config(),
                                                 derive_seed(derive_seed(config.seed, kGenerationStream), i), false,
                                                 config.eval.max_tokens);
        std::vector<std::string> labels;
        std::vector<double> scales;
        for (const auto& r : records) {
            labels.push_back(r.text);
            scales.push_back(r.scale);
        }
        results.push_back(scorer.evaluate(i, std::move(labels), std::move(scales)));
    }
    return EvalReport(method, std::move(results), config.eval.ks);
}

std::vector<std::string> taboo_candidates(const RunConfig& config, const FrozenLM& lm, const VectorRecord& r,
                                          std::size_t i) {
    std::optional<std::string> category;
    if (r.extras.contains("category")) category = r.extras.at("category").get<std::string>();
    const auto title = r.extras.contains("title") ? item_title(r) : r.labels.at(0);
    const auto prompt = lm.render_prompt({std::nullopt,
                                          taboo_prompt(r.labels.at(0), title,
                                                       category ? std::optional<std::string_view>(*category)
                                                                : std::nullopt),
                                          std::string()});
    const auto tokens = lm.tokenize(prompt);
    std::vector<std::string> out;
    for (std::size_t c = 0; c < config.eval.candidates; ++c) {
        out.push_back(generate_tokens(lm, tokens, {}, {}, config.eval.sampling.config(), config.eval.max_tokens,
                                      derive_seed(derive_seed(derive_seed(config.seed, kTabooStream), i), c))
                          .text);
    }
    return out;
}

EvalReport label_method(const std::string& method, const RunConfig& config, const FrozenLM& lm,
                        const Scorer& scorer) {
    std::vector<ItemResult> results;
    const auto& items = scorer.items;
    const auto n = config.eval.candidates;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& r = items.record(i);
        std::vector<std::string> labels;
        if (method == "repeat_x6") {
            labels = repeat_label(r.labels.at(0), n);
        } else if (method == "paraphrases") {
            labels = original_plus_paraphrases(r.labels.at(0), {r.labels.begin() + 1, r.labels.end()}, n);
        } else {
            labels = taboo_candidates(config, lm, r, i);
        }
        results.push_back(scorer.evaluate(i, std::move(labels), {}));
    }
    return EvalReport(method, std::move(results), config.eval.ks);
}

int run_sweep(const SharedFlags& flags, const RunConfig& config) {
    const std::filesystem::path out = config.out;
    const auto train_set = require_dataset(config.data.train, "data.train");
    const auto val_set = require_dataset(config.data.val, "data.val");
    const auto lm = make_backend(config);
    const auto rows = architecture_sweep(config.eval.sweep, *lm, config.prompt, train_set, val_set, config.train);
    auto resolved = config.to_json();
    resolved["inputs"] = {{"train", {{"path", config.data.train}, {"digest", train_set.digest()}}},
                          {"val", {{"path", config.data.val}, {"digest", val_set.digest()}}}};
    write_text(out / "config.json", resolved.dump(2) + "\n");
    write_text(out / "sweep.csv", sweep_to_csv(rows));
    if (flags.plot) plot_csv(out, out / "sweep.csv", "bar", "Validation loss by architecture", "val_loss");
    std::cout << sweep_to_csv(rows);
    return 0;
}

}  // namespace

int cmd_eval(const SharedFlags& flags, const EvalArgs& args) {
    auto config = resolve(flags);
    if (!args.methods.empty()) config.eval.methods = args.methods;
    if (!args.metrics.empty()) config.eval.metrics = args.metrics;
    if (!config.eval.sweep.empty()) return run_sweep(flags, config);

    if (config.eval.methods.empty() || config.eval.metrics.empty()) {
        throw UsageError("eval selection is empty: set eval.methods and eval.metrics (or --methods/--metrics)");
    }
    for (const auto& m : config.eval.methods) {
        if (!kMethods.contains(m)) throw UsageError("unknown eval method '" + m + "'");
    }
    for (const auto& m : config.eval.metrics) {
        if (!kMetrics.contains(m)) throw UsageError("unknown eval metric '" + m + "'");
    }
    if (config.eval.candidates == 0) fail(ErrorCode::config_error, "eval.candidates must be positive");

    const std::filesystem::path out = config.out;
    const auto lm = make_backend(config);
    std::optional<Adapter> checkpoint;
    if (selected(config.eval.methods, "trained")) checkpoint = require_checkpoint(flags, *lm);
    const auto items = require_dataset(config.data.eval, "data.eval");
    if (items.dim() != lm->dims().d) {
        fail(ErrorCode::dimension_mismatch, "eval set has d=" + std::to_string(items.dim()) +
                                                " but the backend has d=" + std::to_string(lm->dims().d));
    }
    Scorer scorer{config, *lm, items, nullptr};
    if (selected(config.eval.metrics, "retrieval")) {
        if (config.data.topics.empty()) fail(ErrorCode::config_error, "retrieval needs config field data.topics");
        scorer.index = std::make_unique<RetrievalIndex>(load_topics(config.data.topics),
                                                        std::make_shared<HashingEmbedder>());
    }

    std::vector<EvalReport> reports;
    nlohmann::json windows = nlohmann::json::object();
    for (const auto& method : config.eval.methods) {
        if (method == "trained") {
            reports.push_back(adapter_method(method, *checkpoint, config, *lm, scorer, windows));
        } else if (method == "untrained") {
            const auto adapter = Adapter::create(AdapterKind::scale_only, lm->dims(), 0, AdapterInit{1.0, config.seed});
            reports.push_back(adapter_method(method, adapter, config, *lm, scorer, windows));
        } else {
            reports.push_back(label_method(method, config, *lm, scorer));
        }
    }

    auto resolved = config.to_json();
    resolved["inputs"] = {{"eval", {{"path", config.data.eval}, {"digest", items.digest()}}}};
    if (!flags.checkpoint.empty()) resolved["checkpoint"] = flags.checkpoint;
    write_text(out / "config.json", resolved.dump(2) + "\n");
    write_reports(out, reports, {{"windows", windows}, {"candidates", config.eval.candidates}});

    for (const auto& r : reports) {
        if (flags.plot && r.has_generation()) {
            plot_csv(out, out / ("histogram_" + r.method() + ".csv"), "bar",
                     "Items by number of valid candidates (" + r.method() + ")", "items");
        }
        std::cout << r.method() << ": " << r.aggregates().dump() << "\n";
    }
    return 0;
}

}  // namespace selfie::cli

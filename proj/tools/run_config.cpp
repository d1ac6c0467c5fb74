#include "run_config.hpp"

#include <fstream>
#include <set>

#include "selfie/error.hpp"

namespace selfie::cli {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) fail(ErrorCode::config_error, where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) fail(ErrorCode::config_error, "unknown key '" + key + "' in " + where);
    }
}

SamplingSpec sampling_from_json(const nlohmann::json& j, SamplingSpec s) {
    s.greedy = j.value("greedy", s.greedy);
    s.temperature = j.value("temperature", s.temperature);
    s.top_p = j.value("top_p", s.top_p);
    return s;
}

nlohmann::json sampling_to_json(const SamplingSpec& s) {
    return {{"greedy", s.greedy}, {"temperature", s.temperature}, {"top_p", s.top_p}};
}

InjectionSites parse_sites(const std::string& name) {
    if (name == "both") return InjectionSites::both;
    if (name == "assistant_only") return InjectionSites::assistant_only;
    fail(ErrorCode::config_error, "prompt.sites must be 'both' or 'assistant_only', got '" + name + "'");
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j,
                        {"seed", "out", "backend", "data", "adapter", "train", "prompt", "scale_grid", "eval",
                         "probe"},
                        "run config");
    RunConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.out = j.value("out", c.out);
        if (j.contains("backend")) c.backend = BackendConfig::from_json(j.at("backend"));
        if (j.contains("data")) {
            const auto& d = j.at("data");
            reject_unknown_keys(d, {"train", "val", "eval", "calibration", "topics"}, "data");
            c.data.train = d.value("train", "");
            c.data.val = d.value("val", "");
            c.data.eval = d.value("eval", "");
            c.data.calibration = d.value("calibration", "");
            c.data.topics = d.value("topics", "");
        }
        if (j.contains("adapter")) {
            const auto& a = j.at("adapter");
            reject_unknown_keys(a, {"kind", "rank"}, "adapter");
            c.adapter.kind = parse_adapter_kind(a.value("kind", std::string(to_string(c.adapter.kind))));
            c.adapter.rank = a.value("rank", c.adapter.rank);
        }
        if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
        if (j.contains("prompt")) {
            const auto& p = j.at("prompt");
            reject_unknown_keys(p, {"user_text", "assistant_prefix", "sites"}, "prompt");
            c.prompt.user_text = p.value("user_text", c.prompt.user_text);
            c.prompt.assistant_prefix = p.value("assistant_prefix", c.prompt.assistant_prefix);
            c.prompt.sites = parse_sites(p.value("sites", std::string("both")));
        }
        if (j.contains("scale_grid")) c.scale_grid = ScaleGrid::from_json(j.at("scale_grid"));
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            reject_unknown_keys(e,
                                {"methods", "metrics", "calibration_metric", "ks", "candidates", "sampling",
                                 "max_tokens", "scoring_trials", "scoring_max_tokens", "sweep"},
                                "eval");
            auto& s = c.eval;
            s.methods = e.value("methods", s.methods);
            s.metrics = e.value("metrics", s.metrics);
            s.calibration_metric = e.value("calibration_metric", s.calibration_metric);
            s.ks = e.value("ks", s.ks);
            s.candidates = e.value("candidates", s.candidates);
            if (e.contains("sampling")) s.sampling = sampling_from_json(e.at("sampling"), s.sampling);
            s.max_tokens = e.value("max_tokens", s.max_tokens);
            s.scoring_trials = e.value("scoring_trials", s.scoring_trials);
            s.scoring_max_tokens = e.value("scoring_max_tokens", s.scoring_max_tokens);
            for (const auto& entry : e.value("sweep", nlohmann::json::array())) {
                s.sweep.push_back({parse_adapter_kind(entry.at("kind").get<std::string>()),
                                   entry.value("rank", std::size_t{0})});
            }
        }
        if (j.contains("probe")) {
            const auto& p = j.at("probe");
            reject_unknown_keys(p,
                                {"layers", "positions", "samples", "temperature", "cycle_window", "fixed_scale",
                                 "max_tokens", "include_untrained", "novel_prompt", "novel_layer", "novel_scale",
                                 "novel_n", "novel_temperature", "subtract_mean", "layer_means", "zero_samples",
                                 "zero_temperature"},
                                "probe");
            auto& s = c.probe;
            s.layers = p.value("layers", s.layers);
            s.positions = p.value("positions", s.positions);
            s.samples = p.value("samples", s.samples);
            s.temperature = p.value("temperature", s.temperature);
            s.cycle_window = p.value("cycle_window", s.cycle_window);
            s.fixed_scale = p.value("fixed_scale", s.fixed_scale);
            s.max_tokens = p.value("max_tokens", s.max_tokens);
            s.include_untrained = p.value("include_untrained", s.include_untrained);
            s.novel_prompt = p.value("novel_prompt", s.novel_prompt);
            s.novel_layer = p.value("novel_layer", s.novel_layer);
            s.novel_scale = p.value("novel_scale", s.novel_scale);
            s.novel_n = p.value("novel_n", s.novel_n);
            s.novel_temperature = p.value("novel_temperature", s.novel_temperature);
            s.subtract_mean = p.value("subtract_mean", s.subtract_mean);
            s.layer_means = p.value("layer_means", s.layer_means);
            s.zero_samples = p.value("zero_samples", s.zero_samples);
            s.zero_temperature = p.value("zero_temperature", s.zero_temperature);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, std::string("invalid run config: ") + e.what());
    }
    c.train.seed = c.seed;
    return c;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& e : eval.sweep) sweep.push_back({{"kind", to_string(e.kind)}, {"rank", e.rank}});
    return {
        {"seed", seed},
        {"out", out},
        {"backend", backend.to_json()},
        {"data",
         {{"train", data.train},
          {"val", data.val},
          {"eval", data.eval},
          {"calibration", data.calibration},
          {"topics", data.topics}}},
        {"adapter", {{"kind", to_string(adapter.kind)}, {"rank", adapter.rank}}},
        {"train", train.to_json()},
        {"prompt",
         {{"user_text", prompt.user_text},
          {"assistant_prefix", prompt.assistant_prefix},
          {"sites", prompt.sites == InjectionSites::both ? "both" : "assistant_only"}}},
        {"scale_grid", scale_grid.to_json()},
        {"eval",
         {{"methods", eval.methods},
          {"metrics", eval.metrics},
          {"calibration_metric", eval.calibration_metric},
          {"ks", eval.ks},
          {"candidates", eval.candidates},
          {"sampling", sampling_to_json(eval.sampling)},
          {"max_tokens", eval.max_tokens},
          {"scoring_trials", eval.scoring_trials},
          {"scoring_max_tokens", eval.scoring_max_tokens},
          {"sweep", sweep}}},
        {"probe",
         {{"layers", probe.layers},
          {"positions", probe.positions},
          {"samples", probe.samples},
          {"temperature", probe.temperature},
          {"cycle_window", probe.cycle_window},
          {"fixed_scale", probe.fixed_scale},
          {"max_tokens", probe.max_tokens},
          {"include_untrained", probe.include_untrained},
          {"novel_prompt", probe.novel_prompt},
          {"novel_layer", probe.novel_layer},
          {"novel_scale", probe.novel_scale},
          {"novel_n", probe.novel_n},
          {"novel_temperature", probe.novel_temperature},
          {"subtract_mean", probe.subtract_mean},
          {"layer_means", probe.layer_means},
          {"zero_samples", probe.zero_samples},
          {"zero_temperature", probe.zero_temperature}}},
    };
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_failure, "cannot read config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return RunConfig::from_json(j);
}

RunConfig resolve(const SharedFlags& flags) {
    RunConfig c = flags.config.empty() ? RunConfig{} : load_run_config(flags.config);
    if (flags.seed) c.seed = *flags.seed;
    if (!flags.out.empty()) c.out = flags.out;
    if (!flags.backend.empty()) c.backend.name = flags.backend;
    c.train.seed = c.seed;
    return c;
}

}  // namespace selfie::cli

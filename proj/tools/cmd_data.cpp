#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "selfie/contrastive.hpp"
#include "selfie/error.hpp"
#include "selfie/probe.hpp"
#include "selfie/synthetic.hpp"

namespace selfie::cli {

namespace {

std::string require_input(const DataArgs& args) {
    if (args.input.empty()) throw UsageError("data " + args.action + " needs --in <manifest.jsonl>");
    return args.input;
}

std::filesystem::path manifest_out(const RunConfig& config, const DataArgs& args, const std::string& fallback) {
    return std::filesystem::path(config.out) / ((args.name.empty() ? fallback : args.name) + ".jsonl");
}

nlohmann::json read_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, "'" + path + "' is not valid JSON: " + e.what());
    }
}

void report(const std::filesystem::path& path, const Dataset& data) {
    std::cout << "wrote " << data.size() << " record(s) to " << path.string() << " (digest " << data.digest()
              << ")\n";
}

// Single-token vocabulary words of the backend, used as synthetic labels.
std::vector<std::string> vocabulary_labels(const FrozenLM& lm, std::size_t count) {
    const auto limit = std::min(lm.vocab_size(), lm.dims().d);
    if (count == 0) count = limit;
    if (count > limit) {
        fail(ErrorCode::invalid_argument, "at most " + std::to_string(limit) + " synthetic labels fit this backend");
    }
    std::vector<std::string> out;
    for (std::size_t t = 0; t < count; ++t) {
        out.push_back(lm.detokenize(std::vector<TokenId>{static_cast<TokenId>(t)}));
    }
    return out;
}

}  // namespace

int cmd_data(const SharedFlags& flags, const DataArgs& args) {
    const auto config = resolve(flags);
    const std::filesystem::path out = config.out;
    const auto& a = args.action;

    if (a == "ingest-sae") {
        if (args.decoder.empty()) throw UsageError("data ingest-sae needs --decoder <bank.sivb>");
        if (args.labels.empty()) throw UsageError("data ingest-sae needs --labels <labels.json>");
        std::map<std::size_t, std::string> labels;
        for (const auto& [key, value] : read_json(args.labels).items()) {
            try {
                labels[std::stoul(key)] = value.get<std::string>();
            } catch (const std::exception&) {
                fail(ErrorCode::config_error, "labels file keys must be latent indices, got '" + key + "'");
            }
        }
        const auto data = ingest_sae(load_bank(args.decoder), labels, args.layer);
        const auto path = manifest_out(config, args, "sae");
        save_dataset(data, path);
        report(path, data);
    } else if (a == "extract-contrastive") {
        if (args.topics.empty()) throw UsageError("data extract-contrastive needs --topics <topics.jsonl>");
        const auto lm = make_backend(config);
        const auto layers = args.layers.empty() ? middle_half_layers(lm->layer_count()) : args.layers;
        const auto result = extract_contrastive(*lm, load_topics(args.topics), layers);
        const auto path = manifest_out(config, args, "contrastive");
        save_dataset(result.dataset, path);
        save_layer_means(result.layer_means, path.parent_path() / (path.stem().string() + "_means.json"));
        report(path, result.dataset);
    } else if (a == "transform") {
        const auto data = load_dataset(require_input(args));
        Dataset result = data;
        if (args.op == "uppercase") {
            result = uppercase_labels(data);
        } else if (args.op == "limit-labels") {
            if (args.count == 0) throw UsageError("limit-labels needs --count >= 1");
            result = limit_labels(data, args.count);
        } else if (args.op == "paraphrases") {
            if (args.paraphrases.empty()) throw UsageError("transform paraphrases needs --paraphrases <file.json>");
            std::map<std::string, std::vector<std::string>> extra;
            try {
                extra = read_json(args.paraphrases).get<std::map<std::string, std::vector<std::string>>>();
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorCode::config_error, std::string("paraphrase file must map ids to lists: ") + e.what());
            }
            result = import_paraphrases(data, extra);
        } else {
            throw UsageError("--op must be uppercase, limit-labels or paraphrases");
        }
        const auto path = manifest_out(config, args, args.op);
        save_dataset(result, path);
        report(path, result);
    } else if (a == "subsample") {
        const auto data = subsample(load_dataset(require_input(args)), args.fraction, config.seed);
        const auto path = manifest_out(config, args, "subsample");
        save_dataset(data, path);
        report(path, data);
    } else if (a == "pca") {
        const auto cumulative = pca_cumulative_variance(load_dataset(require_input(args)));
        std::ostringstream csv;
        csv.precision(17);
        csv << "series,component,cumulative_variance\n";
        for (std::size_t k = 0; k < cumulative.size(); ++k) csv << "pca," << k + 1 << ',' << cumulative[k] << '\n';
        const auto path = out / ((args.name.empty() ? std::string("pca") : args.name) + ".csv");
        write_text(path, csv.str());
        if (flags.plot) plot_csv(out, path, "line", "Cumulative explained variance");
        std::cout << "wrote " << cumulative.size() << " component(s) to " << path.string() << "\n";
    } else if (a == "split") {
        const auto splits =
            split_dataset(load_dataset(require_input(args)), {args.train, args.val, args.test, config.seed});
        for (const auto& [name, part] :
             {std::pair{"train", &splits.train}, std::pair{"val", &splits.val}, std::pair{"test", &splits.test}}) {
            const auto path = out / (std::string(name) + ".jsonl");
            save_dataset(*part, path);
            report(path, *part);
        }
    } else if (a == "synth") {
        const auto lm = make_backend(config);
        const auto labels = vocabulary_labels(*lm, args.count);
        Dataset data = [&] {
            if (args.task == "planted") {
                return make_planted_rotation(lm->dims().d, labels, args.n, args.sigma, config.seed).data;
            }
            if (args.task == "teacher") {
                TeacherTaskSpec spec;
                spec.d = lm->dims().d;
                spec.intrinsic_dim = args.intrinsic_dim == 0 ? spec.d : args.intrinsic_dim;
                spec.n = args.n;
                spec.label_noise = args.label_noise;
                spec.seed = config.seed;
                return make_teacher_task(spec, labels);
            }
            throw UsageError("--task must be planted or teacher");
        }();
        const auto path = manifest_out(config, args, args.task);
        save_dataset(data, path);
        report(path, data);
    } else {
        throw UsageError("unknown data action '" + a + "'");
    }
    return 0;
}

}  // namespace selfie::cli

#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "selfie/error.hpp"

using namespace selfie::cli;

namespace {

void add_shared_flags(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--config", flags.config, "Run config JSON");
    cmd->add_option("--seed", flags.seed, "Global seed (overrides the config)");
    cmd->add_option("--out", flags.out, "Run directory (overrides the config)");
    cmd->add_option("--backend", flags.backend, "Backend name (overrides backend.name)");
    cmd->add_option("--checkpoint", flags.checkpoint, "Adapter checkpoint (.siad)");
    cmd->add_flag("--plot", flags.plot, "Also render SVG plots under <out>/plots");
}

// The run directory for error.json: --out, else the config's, else the default.
std::filesystem::path error_dir(const SharedFlags& flags) {
    if (!flags.out.empty()) return flags.out;
    try {
        if (!flags.config.empty()) return load_run_config(flags.config).out;
    } catch (const std::exception&) {
    }
    return RunConfig{}.out;
}

int report_error(const SharedFlags& flags, const std::string& command, const std::string& code,
                 const std::string& message, int exit_code) {
    std::cerr << "error [" << code << "]: " << message << "\n";
    try {
        const nlohmann::json j = {{"command", command}, {"code", code}, {"message", message}};
        write_text(error_dir(flags) / "error.json", j.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "could not write error.json: " << e.what() << "\n";
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Train, evaluate and probe activation-to-embedding adapters"};
    app.require_subcommand(1);
    SharedFlags flags;

    auto* train = app.add_subcommand("train", "Train an adapter into a run directory");
    add_shared_flags(train, flags);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and baselines, or run an architecture sweep");
    add_shared_flags(eval, flags);
    eval->add_option("--methods", eval_args.methods, "trained, untrained, repeat_x6, paraphrases, taboo")
        ->delimiter(',');
    eval->add_option("--metrics", eval_args.metrics, "retrieval, generation")->delimiter(',');

    ProbeArgs probe_args;
    auto* probe = app.add_subcommand("probe", "Bridge-entity, zero-vector or novel-prompt probes");
    add_shared_flags(probe, flags);
    probe->add_option("kind", probe_args.kind, "bridge | zero | novel")->required();
    probe->add_option("--cases", probe_args.cases, "Bridge case file (JSON lines)");
    probe->add_option("--prompt", probe_args.prompt, "Source prompt for the novel probe");

    DataArgs data_args;
    auto* data = app.add_subcommand("data", "Build and transform vector-label datasets");
    data->require_subcommand(1);
    auto data_cmd = [&](const std::string& name, const std::string& help) {
        auto* sub = data->add_subcommand(name, help);
        add_shared_flags(sub, flags);
        sub->add_option("--name", data_args.name, "Output stem inside the run directory");
        sub->callback([&data_args, name] { data_args.action = name; });
        return sub;
    };
    auto* ingest = data_cmd("ingest-sae", "Decoder rows plus labels into a manifest");
    ingest->add_option("--decoder", data_args.decoder, "Decoder bank (.sivb)");
    ingest->add_option("--labels", data_args.labels, "JSON object: latent index -> label");
    ingest->add_option("--layer", data_args.layer, "Source layer");
    auto* contrastive = data_cmd("extract-contrastive", "Mean-subtracted topic activations");
    contrastive->add_option("--topics", data_args.topics, "Topic file (JSON lines)");
    contrastive->add_option("--layers", data_args.layers, "Layers (default: middle half)")->delimiter(',');
    auto* transform = data_cmd("transform", "Relabel a manifest");
    transform->add_option("--in", data_args.input, "Input manifest");
    transform->add_option("--op", data_args.op, "uppercase | limit-labels | paraphrases")->required();
    transform->add_option("--count", data_args.count, "Labels kept per record (limit-labels)");
    transform->add_option("--paraphrases", data_args.paraphrases, "JSON object: id -> [paraphrase]");
    auto* sub = data_cmd("subsample", "Keep a seeded fraction of records");
    sub->add_option("--in", data_args.input, "Input manifest");
    sub->add_option("--fraction", data_args.fraction, "Fraction in (0, 1]");
    auto* pca = data_cmd("pca", "Cumulative explained-variance CSV");
    pca->add_option("--in", data_args.input, "Input manifest");
    auto* split = data_cmd("split", "Partition by vector id into train/val/test");
    split->add_option("--in", data_args.input, "Input manifest");
    split->add_option("--train", data_args.train, "Train fraction");
    split->add_option("--val", data_args.val, "Validation fraction");
    split->add_option("--test", data_args.test, "Test fraction");
    auto* synth = data_cmd("synth", "Synthetic planted-rotation or teacher task");
    synth->add_option("--task", data_args.task, "planted | teacher");
    synth->add_option("--n", data_args.n, "Record count");
    synth->add_option("--sigma", data_args.sigma, "Noise (planted)");
    synth->add_option("--count", data_args.count, "Label count (default: all that fit)");
    synth->add_option("--intrinsic-dim", data_args.intrinsic_dim, "Subspace dimension (teacher)");
    synth->add_option("--label-noise", data_args.label_noise, "Random-label fraction (teacher)");

    PlotArgs plot_args;
    auto* plot = app.add_subcommand("plot", "Render a CSV intermediate to SVG");
    add_shared_flags(plot, flags);
    plot->add_option("--in", plot_args.input, "CSV file");
    plot->add_option("--kind", plot_args.kind, "line | bar | heatmap")->required();
    plot->add_option("--title", plot_args.title, "Chart title");
    plot->add_option("--column", plot_args.column, "Value column (bar)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    std::string command;
    try {
        int code = 0;
        if (train->parsed()) {
            command = "train";
            code = cmd_train(flags);
        } else if (eval->parsed()) {
            command = "eval";
            code = cmd_eval(flags, eval_args);
        } else if (probe->parsed()) {
            command = "probe";
            code = cmd_probe(flags, probe_args);
        } else if (data->parsed()) {
            command = "data " + data_args.action;
            code = cmd_data(flags, data_args);
        } else if (plot->parsed()) {
            command = "plot";
            code = cmd_plot(flags, plot_args);
        }
        // A successful rerun must not leave an earlier failure behind.
        std::filesystem::remove(error_dir(flags) / "error.json");
        return code;
    } catch (const UsageError& e) {
        return report_error(flags, command, "usage", e.what(), 2);
    } catch (const selfie::Error& e) {
        return report_error(flags, command, std::string(selfie::to_string(e.code())), e.what(), 1);
    } catch (const std::exception& e) {
        return report_error(flags, command, "internal", e.what(), 1);
    }
}

#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "run_config.hpp"
#include "selfie/adapter.hpp"
#include "selfie/dataset.hpp"
#include "selfie/lm.hpp"

namespace selfie::cli {

/// Bad or missing command-line input; reported with code "usage".
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalArgs {
    std::vector<std::string> methods;
    std::vector<std::string> metrics;
};

struct ProbeArgs {
    std::string kind;
    std::string cases;
    std::string prompt;
};

struct DataArgs {
    std::string action;
    std::string input;
    std::string name;
    std::string decoder;
    std::string labels;
    int layer = 0;
    std::string topics;
    std::vector<int> layers;
    std::string op;
    std::size_t count = 0;
    std::string paraphrases;
    double fraction = 0.5;
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    std::string task = "planted";
    std::size_t n = 1024;
    double sigma = 0.05;
    std::size_t intrinsic_dim = 0;
    double label_noise = 0.0;
};

struct PlotArgs {
    std::string input;
    std::string kind;
    std::string title;
    std::string column;
};

int cmd_train(const SharedFlags& flags);
int cmd_eval(const SharedFlags& flags, const EvalArgs& args);
int cmd_probe(const SharedFlags& flags, const ProbeArgs& args);
int cmd_data(const SharedFlags& flags, const DataArgs& args);
int cmd_plot(const SharedFlags& flags, const PlotArgs& args);

// Shared plumbing.

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::shared_ptr<const FrozenLM> make_backend(const RunConfig& config);

/// Loads a dataset named by a config field, failing with the field name
/// when the path is unset.
Dataset require_dataset(const std::string& path, const std::string& field);

/// Loads the --checkpoint adapter and checks it against the backend width.
Adapter require_checkpoint(const SharedFlags& flags, const FrozenLM& lm);

/// Renders `csv` (line: series,x,y; bar: category plus value column;
/// heatmap: row label then one column per cell) to SVG.
std::string render_plot(const std::string& csv, const std::string& kind, const std::string& title,
                        const std::string& column = "");

/// Writes `csv_path`'s plot next to it under plots/<stem>.svg.
void plot_csv(const std::filesystem::path& out, const std::filesystem::path& csv_path, const std::string& kind,
              const std::string& title, const std::string& column = "");

}  // namespace selfie::cli

#include <fstream>
#include <map>
#include <sstream>

#include "commands.hpp"
#include "selfie/backend_registry.hpp"
#include "selfie/checkpoint.hpp"
#include "selfie/error.hpp"
#include "selfie/svg.hpp"

namespace selfie::cli {

namespace {

using Table = std::vector<std::vector<std::string>>;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

Table parse_csv(const std::string& csv) {
    Table rows;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(split_csv_line(line));
    }
    if (rows.size() < 2) fail(ErrorCode::empty_input, "plot input needs a header and at least one row");
    return rows;
}

double to_number(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::invalid_argument, "plot input cell '" + s + "' is not a number");
    }
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& column, std::size_t fallback) {
    if (column.empty()) return fallback;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == column) return i;
    }
    fail(ErrorCode::invalid_argument, "plot input has no column '" + column + "'");
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_failure, "cannot write '" + path.string() + "'");
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_failure, "cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::shared_ptr<const FrozenLM> make_backend(const RunConfig& config) {
    return BackendRegistry::instance().create(config.backend);
}

Dataset require_dataset(const std::string& path, const std::string& field) {
    if (path.empty()) fail(ErrorCode::config_error, "config field " + field + " is required");
    return load_dataset(path);
}

Adapter require_checkpoint(const SharedFlags& flags, const FrozenLM& lm) {
    if (flags.checkpoint.empty()) throw UsageError("--checkpoint is required");
    auto adapter = load_adapter(flags.checkpoint);
    if (adapter.dim() != lm.dims().d) {
        fail(ErrorCode::dimension_mismatch, "checkpoint '" + flags.checkpoint + "' has d=" +
                                                std::to_string(adapter.dim()) + " but the backend has d=" +
                                                std::to_string(lm.dims().d));
    }
    return adapter;
}

std::string render_plot(const std::string& csv, const std::string& kind, const std::string& title,
                        const std::string& column) {
    const auto rows = parse_csv(csv);
    const auto& header = rows.front();
    if (kind == "bar") {
        const auto vi = column_index(header, column, 1);
        std::vector<std::string> categories;
        std::vector<double> values;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (vi >= rows[r].size()) fail(ErrorCode::dimension_mismatch, "short row in plot input");
            categories.push_back(rows[r][0]);
            values.push_back(rows[r][vi].empty() ? 0.0 : to_number(rows[r][vi]));
        }
        return svg::bar_chart(title, categories, values);
    }
    if (kind == "line") {
        if (header.size() != 3) fail(ErrorCode::invalid_argument, "line plots read series,x,y rows");
        std::map<std::string, svg::Series> by_name;
        std::vector<std::string> order;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() != 3) fail(ErrorCode::dimension_mismatch, "short row in plot input");
            auto [it, fresh] = by_name.try_emplace(rows[r][0]);
            if (fresh) {
                it->second.name = rows[r][0];
                order.push_back(rows[r][0]);
            }
            it->second.x.push_back(to_number(rows[r][1]));
            it->second.y.push_back(to_number(rows[r][2]));
        }
        std::vector<svg::Series> series;
        for (const auto& name : order) series.push_back(by_name.at(name));
        return svg::line_chart(title, series, header[1], header[2]);
    }
    if (kind == "heatmap") {
        const std::vector<std::string> cols(header.begin() + 1, header.end());
        std::vector<std::string> row_labels;
        std::vector<double> values;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() != header.size()) fail(ErrorCode::dimension_mismatch, "ragged heatmap row");
            row_labels.push_back(rows[r][0]);
            for (std::size_t c = 1; c < rows[r].size(); ++c) values.push_back(to_number(rows[r][c]));
        }
        return svg::heatmap(title, values, row_labels.size(), cols.size(), row_labels, cols);
    }
    throw UsageError("--kind must be line, bar or heatmap, got '" + kind + "'");
}

void plot_csv(const std::filesystem::path& out, const std::filesystem::path& csv_path, const std::string& kind,
              const std::string& title, const std::string& column) {
    const auto svg_text = render_plot(read_text(csv_path), kind, title, column);
    write_text(out / "plots" / (csv_path.stem().string() + ".svg"), svg_text);
}

}  // namespace selfie::cli

#include "selfie/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "selfie/error.hpp"

namespace selfie::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420, kMargin = 60;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void open(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
        << "</text>\n";
}

// White to dark blue.
std::string shade(double v) {
    v = std::clamp(v, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 * (1 - v)));
    const int g = static_cast<int>(std::lround(255 * (1 - 0.7 * v)));
    std::ostringstream c;
    c << "rgb(" << r << ',' << g << ",255)";
    return c.str();
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string heatmap(const std::string& title, const std::vector<double>& values, std::size_t rows,
                    std::size_t cols, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels) {
    if (rows == 0 || cols == 0 || values.size() != rows * cols) {
        fail(ErrorCode::dimension_mismatch, "heatmap values do not match rows x cols");
    }
    std::ostringstream out;
    out.precision(4);
    open(out, title);
    const double cw = (kWidth - 2 * kMargin) / static_cast<double>(cols);
    const double ch = (kHeight - 2 * kMargin) / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = values[r * cols + c];
            out << "<rect x=\"" << kMargin + c * cw << "\" y=\"" << kMargin + r * ch << "\" width=\"" << cw
                << "\" height=\"" << ch << "\" fill=\"" << shade(v) << "\"><title>" << v << "</title></rect>\n";
        }
        if (r < row_labels.size()) {
            out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + (r + 0.5) * ch
                << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << escape(row_labels[r]) << "</text>\n";
        }
    }
    for (std::size_t c = 0; c < cols && c < col_labels.size(); ++c) {
        out << "<text x=\"" << kMargin + (c + 0.5) * cw << "\" y=\"" << kHeight - kMargin + 14
            << "\" text-anchor=\"middle\">" << escape(col_labels[c]) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<double>& values) {
    if (categories.size() != values.size() || values.empty()) {
        fail(ErrorCode::dimension_mismatch, "bar chart needs one value per category");
    }
    std::ostringstream out;
    out.precision(4);
    open(out, title);
    const double top = std::max(1e-12, *std::max_element(values.begin(), values.end()));
    const double bw = (kWidth - 2 * kMargin) / static_cast<double>(values.size());
    const double base = kHeight - kMargin;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double h = (kHeight - 2 * kMargin) * std::max(0.0, values[i]) / top;
        out << "<rect x=\"" << kMargin + i * bw + 2 << "\" y=\"" << base - h << "\" width=\"" << bw - 4
            << "\" height=\"" << h << "\" fill=\"" << kPalette[0] << "\"/>\n"
            << "<text x=\"" << kMargin + (i + 0.5) * bw << "\" y=\"" << base - h - 3 << "\" text-anchor=\"middle\">"
            << values[i] << "</text>\n"
            << "<text x=\"" << kMargin + (i + 0.5) * bw << "\" y=\"" << base + 14 << "\" text-anchor=\"middle\">"
            << escape(categories[i]) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string line_chart(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) fail(ErrorCode::dimension_mismatch, "series '" + s.name + "' is ragged");
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0)) fail(ErrorCode::empty_input, "line chart has no points");
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
    auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };

    std::ostringstream out;
    out.precision(6);
    open(out, title);
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
        << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
        << kHeight - kMargin << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 20 << "\" text-anchor=\"middle\">"
        << escape(x_label) << "</text>\n"
        << "<text x=\"15\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 15 " << kHeight / 2
        << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n"
        << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin << "\" text-anchor=\"end\">" << y1 << "</text>\n"
        << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">" << y0
        << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        out << "\"/>\n<text x=\"" << kWidth - kMargin + 4 << "\" y=\"" << kMargin + 14 * k << "\" fill=\"" << color
            << "\">" << escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace selfie::svg

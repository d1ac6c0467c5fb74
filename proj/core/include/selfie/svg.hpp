#pragma once

#include <string>
#include <vector>

namespace selfie::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// rows x cols values in [0, 1], row-major; row 0 is drawn at the top.
std::string heatmap(const std::string& title, const std::vector<double>& values, std::size_t rows,
                    std::size_t cols, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels);

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<double>& values);

std::string line_chart(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label);

}  // namespace selfie::svg

#include "selfie/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfie/error.hpp"

namespace selfie {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorCode::dimension_mismatch, "dot of lengths " + std::to_string(a.size()) +
                                                " and " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> normalized(std::span<const double> v) {
    const double n = l2_norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
        fail(ErrorCode::degenerate_vector, "cannot normalize a zero or non-finite vector");
    }
    return scaled(v, 1.0 / n);
}

std::vector<double> scaled(std::span<const double> v, double s) {
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out) x *= s;
    return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    if (logits.empty()) fail(ErrorCode::empty_input, "log_softmax of empty logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    const double lz = m + std::log(z);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    auto out = log_softmax(logits);
    for (auto& x : out) x = std::exp(x);
    return out;
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) fail(ErrorCode::empty_input, "argmax of empty range");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

std::vector<float> to_float(std::span<const double> v) {
    std::vector<float> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return static_cast<float>(x); });
    return out;
}

}  // namespace selfie

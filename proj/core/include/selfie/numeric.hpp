#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace selfie {

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
/// v / ||v||; throws degenerate_vector when ||v|| == 0.
std::vector<double> normalized(std::span<const double> v);
std::vector<double> scaled(std::span<const double> v, double s);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
/// First index of the maximum.
std::size_t argmax(std::span<const double> values);

std::vector<double> to_double(std::span<const float> v);
std::vector<float> to_float(std::span<const double> v);

}  // namespace selfie

#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "selfie/error.hpp"

#define CHECK_ERROR_CODE(expr, expected_code)                     \
    do {                                                          \
        bool thrown_ = false;                                     \
        try {                                                     \
            (void)(expr);                                         \
        } catch (const ::selfie::Error& e_) {                     \
            thrown_ = true;                                       \
            CHECK_MESSAGE(e_.code() == (expected_code), e_.what()); \
        }                                                         \
        CHECK_MESSAGE(thrown_, "expected a selfie::Error");       \
    } while (0)

namespace testing {

inline std::vector<double> random_vector(std::size_t d, std::mt19937_64& gen, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<double> v(d);
    for (auto& x : v) x = n(gen);
    return v;
}

inline std::vector<double> unit(std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (auto& x : v) x /= s;
    return v;
}

/// Fresh directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("selfie_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing

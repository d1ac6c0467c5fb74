#include <Eigen/Dense>
#include <algorithm>

#include "selfie/dataset.hpp"
#include "selfie/error.hpp"

namespace selfie {

std::vector<double> pca_cumulative_variance(const std::vector<std::vector<double>>& vectors) {
    if (vectors.size() < 2) fail(ErrorCode::empty_input, "PCA needs at least two vectors");
    const auto n = static_cast<Eigen::Index>(vectors.size());
    const auto d = static_cast<Eigen::Index>(vectors.front().size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = vectors[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(v.size()) != d) fail(ErrorCode::dimension_mismatch, "ragged PCA input");
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v[static_cast<std::size_t>(j)];
    }
    const double scale = x.squaredNorm();
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    std::vector<double> values(eig.eigenvalues().data(), eig.eigenvalues().data() + d);
    for (auto& v : values) v = std::max(v, 0.0);
    std::sort(values.begin(), values.end(), std::greater<>());
    double total = 0.0;
    for (double v : values) total += v;
    if (!(total > 1e-20 * scale / static_cast<double>(n))) {
        fail(ErrorCode::degenerate_vector, "PCA input has zero variance (all vectors identical)");
    }
    std::vector<double> out(values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += values[i];
        out[i] = std::min(1.0, acc / total);
    }
    out.back() = 1.0;
    return out;
}

std::vector<double> pca_cumulative_variance(const Dataset& dataset) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) vectors.push_back(dataset.vector(i));
    return pca_cumulative_variance(vectors);
}

}  // namespace selfie

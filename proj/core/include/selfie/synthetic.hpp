#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfie/dataset.hpp"

namespace selfie {

/// Random d x d rotation (orthogonal, det +1), row-major.
std::vector<double> random_rotation(std::size_t d, std::uint64_t seed);

struct PlantedRotationTask {
    Dataset data;
    /// R, row-major d x d; raw vectors are R^T e_y + noise before normalization.
    std::vector<double> rotation;
    std::vector<int> targets;
};

/// h = normalize(R^T e_y + N(0, sigma^2 I)), y uniform over the label names.
/// Requires label_names.size() <= d.
PlantedRotationTask make_planted_rotation(std::size_t d, const std::vector<std::string>& label_names,
                                          std::size_t n, double sigma, std::uint64_t seed);

struct TeacherTaskSpec {
    std::size_t d = 64;
    /// Vectors live in a random subspace of this dimension (d = isotropic).
    std::size_t intrinsic_dim = 64;
    std::size_t n = 1024;
    /// Fraction of labels replaced by a uniformly random one.
    double label_noise = 0.0;
    std::uint64_t seed = 0;
};

/// h = normalize(P z), z ~ N(0, I_k), P a d x k orthonormal basis; label is
/// argmax of a fixed random linear teacher over h.
Dataset make_teacher_task(const TeacherTaskSpec& spec, const std::vector<std::string>& label_names);

}  // namespace selfie

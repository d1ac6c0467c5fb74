#include "selfie/synthetic.hpp"

#include <Eigen/Dense>

#include "selfie/error.hpp"
#include "selfie/numeric.hpp"
#include "selfie/rng.hpp"

namespace selfie {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    }
    return m;
}

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rows, cols, rng));
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    // Fix column signs against R's diagonal so the draw is Haar-distributed.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    return q;
}

}  // namespace

std::vector<double> random_rotation(std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd q = orthonormal_columns(n, n, rng);
    if (q.determinant() < 0) q.col(0) *= -1.0;
    std::vector<double> out(d * d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = q(i, j);
    }
    return out;
}

PlantedRotationTask make_planted_rotation(std::size_t d, const std::vector<std::string>& label_names,
                                          std::size_t n, double sigma, std::uint64_t seed) {
    if (label_names.empty() || label_names.size() > d) {
        fail(ErrorCode::invalid_argument, "planted rotation needs 1..d label names");
    }
    if (n == 0) fail(ErrorCode::empty_input, "planted rotation needs n >= 1");
    PlantedRotationTask task{Dataset(std::make_shared<const VectorBank>(), {}), random_rotation(d, seed), {}};
    Rng rng(derive_seed(seed, 1));
    std::vector<std::vector<double>> rows;
    std::vector<VectorRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::size_t>(rng.below(label_names.size()));
        std::vector<double> h(d);
        for (std::size_t c = 0; c < d; ++c) h[c] = task.rotation[y * d + c] + sigma * rng.normal();  // (R^T e_y)_c = R_yc
        VectorRecord r;
        r.id = "planted-" + std::to_string(i);
        r.row = rows.size();
        r.labels = {label_names[y]};
        r.origin = Origin::synthetic;
        r.extras = {{"target", y}, {"raw_norm", l2_norm(h)}};
        rows.push_back(normalized(h));
        records.push_back(std::move(r));
        task.targets.push_back(static_cast<int>(y));
    }
    task.data = Dataset(std::make_shared<const VectorBank>(VectorBank::from_rows(rows)), std::move(records));
    return task;
}

Dataset make_teacher_task(const TeacherTaskSpec& spec, const std::vector<std::string>& label_names) {
    if (spec.intrinsic_dim == 0 || spec.intrinsic_dim > spec.d) {
        fail(ErrorCode::invalid_argument, "intrinsic_dim must be in [1, d]");
    }
    if (label_names.empty()) fail(ErrorCode::invalid_argument, "teacher task needs label names");
    Rng rng(spec.seed);
    const auto d = static_cast<Eigen::Index>(spec.d);
    const auto k = static_cast<Eigen::Index>(spec.intrinsic_dim);
    const auto v = static_cast<Eigen::Index>(label_names.size());
    const Eigen::MatrixXd basis = orthonormal_columns(d, k, rng);
    const Eigen::MatrixXd teacher = gaussian(v, d, rng);

    std::vector<std::vector<double>> rows;
    std::vector<VectorRecord> records;
    for (std::size_t i = 0; i < spec.n; ++i) {
        Eigen::VectorXd z(k);
        for (Eigen::Index j = 0; j < k; ++j) z(j) = rng.normal();
        Eigen::VectorXd h = basis * z;
        h.normalize();
        Eigen::Index y = 0;
        (teacher * h).maxCoeff(&y);
        if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise) {
            y = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(v)));
        }
        VectorRecord r;
        r.id = "teacher-" + std::to_string(i);
        r.row = rows.size();
        r.labels = {label_names[static_cast<std::size_t>(y)]};
        r.origin = Origin::synthetic;
        r.extras = {{"target", y}};
        rows.emplace_back(h.data(), h.data() + d);
        records.push_back(std::move(r));
    }
    return Dataset(std::make_shared<const VectorBank>(VectorBank::from_rows(rows)), std::move(records));
}

}  // namespace selfie

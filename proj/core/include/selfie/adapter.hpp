#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfie {

/// Width of the subject model's residual stream / embedding space.
struct ModelDims {
    std::size_t d = 0;

    explicit ModelDims(std::size_t width);
    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

enum class AdapterKind {
    identity,
    scale_only,
    scalar_affine,
    scalar_affine_low_rank,
    low_rank_only,
    full_rank,
};

std::string_view to_string(AdapterKind kind) noexcept;
AdapterKind parse_adapter_kind(std::string_view name);

constexpr bool has_alpha(AdapterKind k) noexcept {
    return k == AdapterKind::scale_only || k == AdapterKind::scalar_affine ||
           k == AdapterKind::scalar_affine_low_rank;
}
constexpr bool has_bias(AdapterKind k) noexcept {
    return k == AdapterKind::scalar_affine || k == AdapterKind::scalar_affine_low_rank ||
           k == AdapterKind::low_rank_only || k == AdapterKind::full_rank;
}
constexpr bool has_low_rank(AdapterKind k) noexcept {
    return k == AdapterKind::scalar_affine_low_rank || k == AdapterKind::low_rank_only;
}
constexpr bool has_full_matrix(AdapterKind k) noexcept { return k == AdapterKind::full_rank; }

/// Closed-form trainable parameter count for a kind at width d and rank r.
std::size_t parameter_count(AdapterKind kind, std::size_t d, std::size_t rank);

struct AdapterInit {
    double alpha0 = 5.0;
    std::uint64_t seed = 42;
};

/// Offsets of each parameter block inside the flat parameter vector.
/// Blocks are laid out as alpha, b, U, V, W (absent blocks have size 0),
/// which is also the tensor order of the checkpoint format.
struct ParameterLayout {
    std::size_t alpha_offset = 0, alpha_size = 0;
    std::size_t bias_offset = 0, bias_size = 0;
    std::size_t u_offset = 0, u_size = 0;
    std::size_t v_offset = 0, v_size = 0;
    std::size_t w_offset = 0, w_size = 0;

    std::size_t total() const noexcept { return w_offset + w_size; }
    friend bool operator==(const ParameterLayout&, const ParameterLayout&) = default;
};

ParameterLayout make_layout(AdapterKind kind, std::size_t d, std::size_t rank);

/// Gradient bundle sharing the adapter's parameter layout.
struct AdapterGradients {
    ParameterLayout layout;
    std::vector<double> values;

    double alpha() const { return values.at(layout.alpha_offset); }
    std::span<const double> bias() const { return block(layout.bias_offset, layout.bias_size); }
    std::span<const double> u() const { return block(layout.u_offset, layout.u_size); }
    std::span<const double> v() const { return block(layout.v_offset, layout.v_size); }
    std::span<const double> w() const { return block(layout.w_offset, layout.w_size); }

private:
    std::span<const double> block(std::size_t off, std::size_t n) const {
        return std::span<const double>(values).subspan(off, n);
    }
};

struct AdapterMetadata {
    double alpha_init = 5.0;
    std::uint64_t seed = 42;
    std::string training_config_digest;
    friend bool operator==(const AdapterMetadata&, const AdapterMetadata&) = default;
};

/// One of the six maps f: R^d -> R^d that carry an activation into the
/// frozen model's embedding space.
///
///   identity                 f(h) = h
///   scale_only               f(h) = alpha h
///   scalar_affine            f(h) = alpha h + b
///   scalar_affine_low_rank   f(h) = alpha h + U V^T h + b
///   low_rank_only            f(h) = U V^T h + b
///   full_rank                f(h) = W h + b
///
/// Parameters are stored as float32 (the checkpoint dtype); application and
/// gradients accumulate in double. U and V are d x r, W is d x d, row-major.
class Adapter {
public:
    static Adapter create(AdapterKind kind, ModelDims dims, std::size_t rank = 0,
                          const AdapterInit& init = {});
    static Adapter from_parameters(AdapterKind kind, ModelDims dims, std::size_t rank,
                                   std::vector<float> parameters,
                                   AdapterMetadata metadata = {});
    static Adapter scalar_affine(float alpha, std::vector<float> bias);

    AdapterKind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return d_; }
    ModelDims dims() const { return ModelDims(d_); }
    std::size_t rank() const noexcept { return rank_; }
    const ParameterLayout& layout() const noexcept { return layout_; }
    const AdapterMetadata& metadata() const noexcept { return meta_; }
    void set_training_config_digest(std::string digest) { meta_.training_config_digest = std::move(digest); }

    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<const float> parameters() const noexcept { return params_; }
    /// Writable view for the optimizer. Trainers hand out copies once done.
    std::span<float> mutable_parameters() noexcept { return params_; }

    float alpha() const;
    std::span<const float> bias() const { return block(layout_.bias_offset, layout_.bias_size); }
    std::span<const float> u() const { return block(layout_.u_offset, layout_.u_size); }
    std::span<const float> v() const { return block(layout_.v_offset, layout_.v_size); }
    std::span<const float> w() const { return block(layout_.w_offset, layout_.w_size); }

    std::vector<double> apply(std::span<const double> h) const;

    /// d(loss)/d(theta) given upstream = d(loss)/d(f(h)).
    AdapterGradients gradients(std::span<const double> h, std::span<const double> upstream) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Adapter&, const Adapter&) = default;

private:
    Adapter(AdapterKind kind, std::size_t d, std::size_t rank);

    std::span<const float> block(std::size_t off, std::size_t n) const {
        return std::span<const float>(params_).subspan(off, n);
    }

    AdapterKind kind_;
    std::size_t d_;
    std::size_t rank_;
    ParameterLayout layout_;
    std::vector<float> params_;
    AdapterMetadata meta_;
};

}  // namespace selfie

#include "selfie/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfie/error.hpp"
#include "selfie/rng.hpp"

namespace selfie {

ModelDims::ModelDims(std::size_t width) : d(width) {
    if (width == 0) fail(ErrorCode::invalid_argument, "model width d must be >= 1");
}

std::string_view to_string(AdapterKind kind) noexcept {
    switch (kind) {
        case AdapterKind::identity: return "identity";
        case AdapterKind::scale_only: return "scale_only";
        case AdapterKind::scalar_affine: return "scalar_affine";
        case AdapterKind::scalar_affine_low_rank: return "scalar_affine_low_rank";
        case AdapterKind::low_rank_only: return "low_rank_only";
        case AdapterKind::full_rank: return "full_rank";
    }
    return "unknown";
}

AdapterKind parse_adapter_kind(std::string_view name) {
    for (auto k : {AdapterKind::identity, AdapterKind::scale_only, AdapterKind::scalar_affine,
                   AdapterKind::scalar_affine_low_rank, AdapterKind::low_rank_only,
                   AdapterKind::full_rank}) {
        if (to_string(k) == name) return k;
    }
    fail(ErrorCode::kind_mismatch, "unknown adapter kind '" + std::string(name) + "'");
}

ParameterLayout make_layout(AdapterKind kind, std::size_t d, std::size_t rank) {
    if (has_low_rank(kind) && rank == 0) {
        fail(ErrorCode::invalid_argument,
             std::string(to_string(kind)) + " requires rank >= 1");
    }
    if (!has_low_rank(kind) && rank != 0) {
        fail(ErrorCode::kind_mismatch,
             std::string(to_string(kind)) + " takes no rank, got " + std::to_string(rank));
    }
    ParameterLayout l;
    std::size_t off = 0;
    l.alpha_offset = off;
    l.alpha_size = has_alpha(kind) ? 1 : 0;
    off += l.alpha_size;
    l.bias_offset = off;
    l.bias_size = has_bias(kind) ? d : 0;
    off += l.bias_size;
    l.u_offset = off;
    l.u_size = has_low_rank(kind) ? d * rank : 0;
    off += l.u_size;
    l.v_offset = off;
    l.v_size = l.u_size;
    off += l.v_size;
    l.w_offset = off;
    l.w_size = has_full_matrix(kind) ? d * d : 0;
    return l;
}

std::size_t parameter_count(AdapterKind kind, std::size_t d, std::size_t rank) {
    return make_layout(kind, d, rank).total();
}

Adapter::Adapter(AdapterKind kind, std::size_t d, std::size_t rank)
    : kind_(kind), d_(ModelDims(d).d), rank_(rank), layout_(make_layout(kind, d, rank)),
      params_(layout_.total(), 0.0f) {}

Adapter Adapter::create(AdapterKind kind, ModelDims dims, std::size_t rank,
                        const AdapterInit& init) {
    Adapter a(kind, dims.d, rank);
    a.meta_.alpha_init = init.alpha0;
    a.meta_.seed = init.seed;
    const auto d = dims.d;
    if (a.layout_.alpha_size) a.params_[a.layout_.alpha_offset] = static_cast<float>(init.alpha0);
    if (a.layout_.u_size) {
        Rng rng(init.seed);
        const double bound = 1.0 / std::sqrt(static_cast<double>(d));
        for (std::size_t i = 0; i < a.layout_.u_size + a.layout_.v_size; ++i) {
            a.params_[a.layout_.u_offset + i] = static_cast<float>(rng.uniform(-bound, bound));
        }
    }
    if (a.layout_.w_size) {
        for (std::size_t i = 0; i < d; ++i) {
            a.params_[a.layout_.w_offset + i * d + i] = static_cast<float>(init.alpha0);
        }
    }
    return a;
}

Adapter Adapter::from_parameters(AdapterKind kind, ModelDims dims, std::size_t rank,
                                 std::vector<float> parameters, AdapterMetadata metadata) {
    Adapter a(kind, dims.d, rank);
    if (parameters.size() != a.params_.size()) {
        fail(ErrorCode::dimension_mismatch,
             std::string(to_string(kind)) + " at d=" + std::to_string(dims.d) + " needs " +
                 std::to_string(a.params_.size()) + " parameters, got " +
                 std::to_string(parameters.size()));
    }
    a.params_ = std::move(parameters);
    if (!a.all_finite()) fail(ErrorCode::non_finite, "adapter parameters contain NaN or infinity");
    a.meta_ = std::move(metadata);
    return a;
}

Adapter Adapter::scalar_affine(float alpha, std::vector<float> bias) {
    const auto d = bias.size();
    std::vector<float> p;
    p.reserve(d + 1);
    p.push_back(alpha);
    p.insert(p.end(), bias.begin(), bias.end());
    return from_parameters(AdapterKind::scalar_affine, ModelDims(d), 0, std::move(p));
}

float Adapter::alpha() const {
    if (!layout_.alpha_size) {
        fail(ErrorCode::kind_mismatch, std::string(to_string(kind_)) + " has no alpha");
    }
    return params_[layout_.alpha_offset];
}

std::vector<double> Adapter::apply(std::span<const double> h) const {
    if (h.size() != d_) {
        fail(ErrorCode::dimension_mismatch, "adapter expects a vector of length " +
                                                std::to_string(d_) + ", got " +
                                                std::to_string(h.size()));
    }
    std::vector<double> out(d_, 0.0);
    switch (kind_) {
        case AdapterKind::identity:
            std::copy(h.begin(), h.end(), out.begin());
            return out;
        case AdapterKind::scale_only:
        case AdapterKind::scalar_affine:
        case AdapterKind::scalar_affine_low_rank: {
            const double a = params_[layout_.alpha_offset];
            for (std::size_t i = 0; i < d_; ++i) out[i] = a * h[i];
            break;
        }
        case AdapterKind::full_rank: {
            const auto w = this->w();
            for (std::size_t i = 0; i < d_; ++i) {
                double acc = 0.0;
                const float* row = w.data() + i * d_;
                for (std::size_t j = 0; j < d_; ++j) acc += static_cast<double>(row[j]) * h[j];
                out[i] = acc;
            }
            break;
        }
        case AdapterKind::low_rank_only:
            break;
    }
    if (has_low_rank(kind_)) {
        const auto u = this->u();
        const auto v = this->v();
        std::vector<double> t(rank_, 0.0);  // V^T h
        for (std::size_t j = 0; j < d_; ++j) {
            for (std::size_t k = 0; k < rank_; ++k) t[k] += static_cast<double>(v[j * rank_ + k]) * h[j];
        }
        for (std::size_t i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < rank_; ++k) acc += static_cast<double>(u[i * rank_ + k]) * t[k];
            out[i] += acc;
        }
    }
    if (has_bias(kind_)) {
        const auto b = bias();
        for (std::size_t i = 0; i < d_; ++i) out[i] += b[i];
    }
    return out;
}

AdapterGradients Adapter::gradients(std::span<const double> h,
                                    std::span<const double> upstream) const {
    if (h.size() != d_ || upstream.size() != d_) {
        fail(ErrorCode::dimension_mismatch,
             "gradients expect h and upstream of length " + std::to_string(d_));
    }
    AdapterGradients g{layout_, std::vector<double>(layout_.total(), 0.0)};
    auto& out = g.values;
    if (layout_.alpha_size) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d_; ++i) dot += upstream[i] * h[i];
        out[layout_.alpha_offset] = dot;
    }
    if (layout_.bias_size) {
        std::copy(upstream.begin(), upstream.end(), out.begin() + layout_.bias_offset);
    }
    if (layout_.u_size) {
        const auto u = this->u();
        const auto v = this->v();
        std::vector<double> t(rank_, 0.0);   // V^T h
        std::vector<double> ug(rank_, 0.0);  // U^T upstream
        for (std::size_t j = 0; j < d_; ++j) {
            for (std::size_t k = 0; k < rank_; ++k) {
                t[k] += static_cast<double>(v[j * rank_ + k]) * h[j];
                ug[k] += static_cast<double>(u[j * rank_ + k]) * upstream[j];
            }
        }
        for (std::size_t i = 0; i < d_; ++i) {
            for (std::size_t k = 0; k < rank_; ++k) {
                out[layout_.u_offset + i * rank_ + k] = upstream[i] * t[k];
                out[layout_.v_offset + i * rank_ + k] = h[i] * ug[k];
            }
        }
    }
    if (layout_.w_size) {
        for (std::size_t i = 0; i < d_; ++i) {
            for (std::size_t j = 0; j < d_; ++j) {
                out[layout_.w_offset + i * d_ + j] = upstream[i] * h[j];
            }
        }
    }
    return g;
}

bool Adapter::all_finite() const noexcept {
    return std::all_of(params_.begin(), params_.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace selfie

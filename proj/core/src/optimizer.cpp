#include "selfie/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "selfie/error.hpp"

namespace selfie {

AdamW::AdamW(std::size_t parameter_count, std::vector<bool> decay_mask, AdamWConfig config)
    : config_(config), decay_mask_(std::move(decay_mask)), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
    if (decay_mask_.size() != parameter_count) {
        fail(ErrorCode::dimension_mismatch, "decay mask length differs from parameter count");
    }
}

void AdamW::step(std::span<float> params, std::span<const double> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        fail(ErrorCode::dimension_mismatch, "optimizer step with mismatched parameter/gradient lengths");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double p = params[i];
        if (decay_mask_[i]) p *= 1.0 - lr * config_.weight_decay;
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        p -= lr * mhat / (std::sqrt(vhat) + config_.eps);
        params[i] = static_cast<float>(p);
    }
}

double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr,
                 double min_lr) {
    if (step < warmup_steps) {
        return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps + 1);
    }
    if (step + 1 >= total_steps) return min_lr;
    const double span = static_cast<double>(total_steps - 1 - warmup_steps);
    const double progress = static_cast<double>(step - warmup_steps) / span;
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_global_norm(std::span<double> grads, double max_norm) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (auto& g : grads) g *= s;
    }
    return norm;
}

}  // namespace selfie

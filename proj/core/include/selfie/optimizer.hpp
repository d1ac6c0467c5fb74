#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace selfie {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// Decoupled-weight-decay Adam over a flat float32 parameter vector.
/// Moments are kept in double. `decay_mask[i]` selects which entries decay.
class AdamW {
public:
    AdamW(std::size_t parameter_count, std::vector<bool> decay_mask, AdamWConfig config = {});

    void step(std::span<float> params, std::span<const double> grads, double lr);
    std::size_t steps_taken() const noexcept { return t_; }

private:
    AdamWConfig config_;
    std::vector<bool> decay_mask_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

/// Linear warmup to `base_lr` over steps 0..warmup, then cosine decay that
/// reaches `min_lr` exactly at the final step (total_steps - 1).
double cosine_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr,
                 double min_lr = 0.0);

/// Rescales grads in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

}  // namespace selfie

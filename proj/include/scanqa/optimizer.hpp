#pragma once

#include <vector>

#include "scanqa/matrix.hpp"

namespace scanqa {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct CyclicalLrConfig {
    double lr_min = 1.0e-8;
    double lr_max = 1.0e-4;
    long period = 2000;  // steps per full triangle
};

// Triangular wave: lr_min at step 0, lr_max at period/2, lr_min at period.
double cyclical_lr(long step, const CyclicalLrConfig& config);

// Per-parameter first/second moment state, aligned with the parameter list.
struct AdamWState {
    std::vector<std::vector<double>> m, v;
    long step = 0;

    void init_like(const std::vector<ParamRef>& params);
};

// Decoupled-weight-decay Adam update at the given learning rate.
// Parameters named in `frozen` (by index) are skipped.
void adamw_step(const std::vector<ParamRef>& params, const Gradients& grads, AdamWState& state,
                const AdamWConfig& config, double lr, const std::vector<bool>* frozen = nullptr);

}  // namespace scanqa

#include "scanqa/optimizer.hpp"

#include <cmath>

namespace scanqa {

double cyclical_lr(long step, const CyclicalLrConfig& config) {
    if (step < 0) throw ParameterError("cyclical_lr: step must be nonnegative");
    if (config.period <= 0) throw ParameterError("cyclical_lr: period must be positive");
    if (config.lr_min > config.lr_max) throw ParameterError("cyclical_lr: lr_min above lr_max");
    const long phase = step % config.period;
    const double half = static_cast<double>(config.period) / 2.0;
    const double frac = phase <= half ? static_cast<double>(phase) / half
                                      : (static_cast<double>(config.period - phase)) / half;
    return config.lr_min + (config.lr_max - config.lr_min) * frac;
}

void AdamWState::init_like(const std::vector<ParamRef>& params) {
    m.clear();
    v.clear();
    for (const ParamRef& p : params) {
        m.emplace_back(p.value->a.size(), 0.0);
        v.emplace_back(p.value->a.size(), 0.0);
    }
    step = 0;
}

void adamw_step(const std::vector<ParamRef>& params, const Gradients& grads, AdamWState& state,
                const AdamWConfig& config, double lr, const std::vector<bool>* frozen) {
    if (params.size() != grads.g.size() || params.size() != state.m.size())
        throw ShapeError("adamw_step: parameter/gradient/state sizes disagree");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (size_t p = 0; p < params.size(); ++p) {
        if (frozen && (*frozen)[p]) continue;
        Mat& value = *params[p].value;
        const Mat& grad = grads.g[p];
        auto& mp = state.m[p];
        auto& vp = state.v[p];
        for (size_t i = 0; i < value.a.size(); ++i) {
            const double g = grad.a[i];
            if (!std::isfinite(g))
                throw TrainError("adamw_step: non-finite gradient in parameter '" + params[p].name + "'");
            mp[i] = config.beta1 * mp[i] + (1.0 - config.beta1) * g;
            vp[i] = config.beta2 * vp[i] + (1.0 - config.beta2) * g * g;
            const double m_hat = mp[i] / bc1;
            const double v_hat = vp[i] / bc2;
            value.a[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * value.a[i]);
        }
    }
}

}  // namespace scanqa

#pragma once

#include <vector>

#include "dymecu/mlp.hpp"

namespace dymecu {

enum class OptMode { sgd, adam };

// First-order optimizer state. Adam moments are lazily sized on first step.
struct OptState {
    OptMode mode = OptMode::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

OptState make_sgd();
OptState make_adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// One descent step on `params` along `grad`. Layouts must match, lr > 0.
void optimizer_step(ParamVector& params, const ParamVector& grad, OptState& state, double lr);

// Exponential blend toward the element-wise mean of `sources`:
//   out_i = alpha * target_i + (1 - alpha) * mean_i
ParamVector ema_blend(const ParamVector& target, const std::vector<const ParamVector*>& sources,
                      double alpha);

} // namespace dymecu

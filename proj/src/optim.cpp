#include "dymecu/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dymecu {

OptState make_sgd() {
    OptState s;
    s.mode = OptMode::sgd;
    return s;
}

OptState make_adam(double beta1, double beta2, double eps) {
    OptState s;
    s.mode = OptMode::adam;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

void optimizer_step(ParamVector& params, const ParamVector& grad, OptState& state, double lr) {
    if (!(params.layout == grad.layout))
        throw std::invalid_argument("optimizer_step: parameter/gradient layout mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("optimizer_step: lr must be > 0");

    const std::size_t n = params.values.size();
    if (state.mode == OptMode::sgd) {
        for (std::size_t i = 0; i < n; ++i) params.values[i] -= lr * grad.values[i];
        ++state.step;
        return;
    }

    if (state.m.size() != n) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.values[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.values[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

ParamVector ema_blend(const ParamVector& target, const std::vector<const ParamVector*>& sources,
                      double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("ema_blend: alpha must lie in [0, 1]");
    if (sources.empty()) throw std::invalid_argument("ema_blend: sources must be non-empty");
    for (const auto* s : sources)
        if (!(s->layout == target.layout))
            throw std::invalid_argument("ema_blend: source layout differs from target");

    const double k = static_cast<double>(sources.size());
    ParamVector out;
    out.layout = target.layout;
    out.values.resize(target.values.size());
    for (std::size_t i = 0; i < target.values.size(); ++i) {
        double sum = 0.0;
        for (const auto* s : sources) sum += s->values[i];
        out.values[i] = alpha * target.values[i] + (1.0 - alpha) * (sum / k);
    }
    return out;
}

} // namespace dymecu

#include "dymecu/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dymecu {

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation '" + s + "' (expected relu or tanh)");
}

std::size_t ParamLayout::total() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
}

ParamLayout MlpSpec::layout() const {
    if (input_dim <= 0 || output_dim <= 0)
        throw std::invalid_argument("MlpSpec: input_dim and output_dim must be positive");
    for (int h : hidden_dims)
        if (h <= 0) throw std::invalid_argument("MlpSpec: hidden dims must be positive");
    ParamLayout lay;
    int in = input_dim;
    for (int h : hidden_dims) {
        lay.layers.push_back({h, in});
        in = h;
    }
    lay.layers.push_back({output_dim, in});
    return lay;
}

ParamVector zero_params(const MlpSpec& spec) {
    ParamVector p;
    p.layout = spec.layout();
    p.values.assign(p.layout.total(), 0.0);
    return p;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    ParamVector p;
    p.layout = spec.layout();
    p.values.resize(p.layout.total());
    Rng rng(seed);
    std::size_t off = 0;
    for (const auto& l : p.layout.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        const std::size_t n = l.param_count();
        for (std::size_t i = 0; i < n; ++i) p.values[off + i] = rng.uniform(-bound, bound);
        off += n;
    }
    return p;
}

namespace {

double activate(double v, Activation a) {
    return a == Activation::relu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
}

// derivative expressed through the activated output and pre-activation
double activate_grad(double y, double pre, Activation a) {
    return a == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

void check_forward_args(const MlpSpec& spec, const ParamVector& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != spec.input_dim)
        throw std::invalid_argument("forward: input length " + std::to_string(x.size()) +
                                    " != spec.input_dim " + std::to_string(spec.input_dim));
    if (!(params.layout == spec.layout()))
        throw std::invalid_argument("forward: parameter layout does not match spec");
}

// y = W x + b, accumulated column-wise so zero inputs cost nothing
void dense_forward(const double* w, const double* b, std::span<const double> x, int out,
                   std::vector<double>& y) {
    y.assign(static_cast<std::size_t>(out), 0.0);
    const int in = static_cast<int>(x.size());
    for (int i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* col = w + i;
        for (int o = 0; o < out; ++o) y[static_cast<std::size_t>(o)] += col[static_cast<std::size_t>(o) * in] * xi;
    }
    for (int o = 0; o < out; ++o) y[static_cast<std::size_t>(o)] += b[o];
}

} // namespace

LatentState forward(const MlpSpec& spec, const ParamVector& params, std::span<const double> x) {
    check_forward_args(spec, params, x);
    const auto& layers = params.layout.layers;
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    std::size_t off = 0;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& l = layers[li];
        const double* w = params.values.data() + off;
        const double* b = w + static_cast<std::size_t>(l.out) * l.in;
        dense_forward(w, b, cur, l.out, next);
        if (li + 1 != layers.size())
            for (auto& v : next) v = activate(v, spec.activation);
        cur.swap(next);
        off += l.param_count();
    }
    return cur;
}

void backward_into(const MlpSpec& spec, const ParamVector& params, std::span<const double> x,
                   std::span<const double> upstream, ParamVector& acc,
                   std::vector<double>* input_grad) {
    check_forward_args(spec, params, x);
    if (static_cast<int>(upstream.size()) != spec.output_dim)
        throw std::invalid_argument("backward: upstream length " + std::to_string(upstream.size()) +
                                    " != spec.output_dim " + std::to_string(spec.output_dim));
    if (!(acc.layout == params.layout))
        throw std::invalid_argument("backward: accumulator layout mismatch");

    const auto& layers = params.layout.layers;
    const std::size_t nl = layers.size();

    // forward pass keeping pre-activations and activated outputs per layer
    std::vector<std::vector<double>> pre(nl), act(nl);
    std::vector<std::size_t> offs(nl);
    {
        std::size_t off = 0;
        std::span<const double> cur = x;
        for (std::size_t li = 0; li < nl; ++li) {
            const auto& l = layers[li];
            offs[li] = off;
            const double* w = params.values.data() + off;
            const double* b = w + static_cast<std::size_t>(l.out) * l.in;
            dense_forward(w, b, cur, l.out, pre[li]);
            act[li] = pre[li];
            if (li + 1 != nl)
                for (auto& v : act[li]) v = activate(v, spec.activation);
            cur = act[li];
            off += l.param_count();
        }
    }

    // delta = dL/d(pre-activation of the current layer)
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> delta_prev;
    for (std::size_t li = nl; li-- > 0;) {
        const auto& l = layers[li];
        const double* w = params.values.data() + offs[li];
        double* gw = acc.values.data() + offs[li];
        double* gb = gw + static_cast<std::size_t>(l.out) * l.in;
        const std::span<const double> xin =
            li == 0 ? x : std::span<const double>(act[li - 1]);

        for (int o = 0; o < l.out; ++o) {
            const double d = delta[o];
            gb[o] += d;
            if (d == 0.0) continue;
            double* grow = gw + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) {
                const double xi = xin[static_cast<std::size_t>(i)];
                if (xi != 0.0) grow[i] += d * xi;
            }
        }

        const bool need_input = li > 0 || input_grad != nullptr;
        if (!need_input) break;
        delta_prev.assign(static_cast<std::size_t>(l.in), 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* wrow = w + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) delta_prev[i] += d * wrow[i];
        }
        if (li > 0) {
            for (int i = 0; i < layers[li - 1].out; ++i)
                delta_prev[i] *= activate_grad(act[li - 1][i], pre[li - 1][i], spec.activation);
        }
        delta.swap(delta_prev);
    }
    if (input_grad) *input_grad = std::move(delta);
}

BackwardResult backward_with_input(const MlpSpec& spec, const ParamVector& params,
                                   std::span<const double> x, std::span<const double> upstream) {
    BackwardResult res;
    res.param_grad.layout = params.layout;
    res.param_grad.values.assign(params.values.size(), 0.0);
    backward_into(spec, params, x, upstream, res.param_grad, &res.input_grad);
    return res;
}

ParamVector backward(const MlpSpec& spec, const ParamVector& params, std::span<const double> x,
                     std::span<const double> upstream) {
    return backward_with_input(spec, params, x, upstream).param_grad;
}

} // namespace dymecu

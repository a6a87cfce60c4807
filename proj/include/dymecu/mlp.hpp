#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dymecu/rng.hpp"

namespace dymecu {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Shape of one dense layer: weight matrix (out x in) followed by bias (out).
struct LayerShape {
    int out = 0;
    int in = 0;
    bool operator==(const LayerShape&) const = default;
    std::size_t param_count() const { return static_cast<std::size_t>(out) * in + out; }
};

struct ParamLayout {
    std::vector<LayerShape> layers;
    bool operator==(const ParamLayout&) const = default;
    std::size_t total() const;
};

// Flat parameter vector plus the layout that gives it meaning. Two vectors
// with equal layouts are element-wise combinable.
struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    bool operator==(const ParamVector&) const = default;
    std::size_t size() const { return values.size(); }
};

// Dense network shape: input -> hidden... -> output. Hidden layers are
// activated, the output layer is linear.
struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int output_dim = 0;
    Activation activation = Activation::relu;

    bool operator==(const MlpSpec&) const = default;
    ParamLayout layout() const;
    std::size_t param_count() const { return layout().total(); }
};

// Latent vector produced by a forward pass.
using LatentState = std::vector<double>;

// Zero-initialized parameters for the given spec.
ParamVector zero_params(const MlpSpec& spec);

// Seeded uniform fan-in init: each layer drawn from U(-1/sqrt(in), 1/sqrt(in)).
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

LatentState forward(const MlpSpec& spec, const ParamVector& params, std::span<const double> x);

struct BackwardResult {
    ParamVector param_grad;
    std::vector<double> input_grad;
};

// Reverse-mode gradients for a single input. `upstream` is dL/dz at the
// output; returns dL/dparams (and dL/dx in the _with_input variant).
ParamVector backward(const MlpSpec& spec, const ParamVector& params, std::span<const double> x,
                     std::span<const double> upstream);
BackwardResult backward_with_input(const MlpSpec& spec, const ParamVector& params,
                                   std::span<const double> x, std::span<const double> upstream);

// Accumulating form for batch updates: adds this sample's parameter gradient
// into `acc` (layout must match) without allocating. Zero input entries are
// skipped, which makes one-hot observations cheap. Returns dL/dx when
// `input_grad` is non-null.
void backward_into(const MlpSpec& spec, const ParamVector& params, std::span<const double> x,
                   std::span<const double> upstream, ParamVector& acc,
                   std::vector<double>* input_grad = nullptr);

} // namespace dymecu

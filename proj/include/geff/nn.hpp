#pragma once

#include <string>
#include <vector>

#include "geff/autodiff.hpp"

namespace geff {

enum class Activation { None, Relu, Sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected net: affine + activation per layer, ReLU on hidden layers.
struct Mlp {
    std::vector<int> sizes;
    std::vector<Tensor> weights;  // sizes[i] x sizes[i+1]
    std::vector<Tensor> biases;   // 1 x sizes[i+1]
    Activation output = Activation::None;

    static Mlp create(std::vector<int> layer_sizes, Activation output_act, Rng& rng);

    int input_size() const { return sizes.front(); }
    int output_size() const { return sizes.back(); }
    std::size_t param_count() const;
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;

    // Records the forward pass on the tape; x is M x input_size.
    Value forward(Tape& tape, Value x);
    // Same arithmetic without a tape, for inference-only paths.
    Tensor forward_plain(const Tensor& x) const;
};

// Bias-corrected Adam. Moment buffers are lazily shaped on first step.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<Tensor> m, v;

    // Throws NonFiniteError when any gradient entry is NaN/Inf.
    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
};

// Flat little-endian float64 serialization of a parameter list.
void append_params(const std::vector<const Tensor*>& params, std::vector<double>& out);
// Reads values back in the same order; throws ShapeError when sizes disagree.
std::size_t read_params(const std::vector<Tensor*>& params, const std::vector<double>& in,
                        std::size_t offset);

}  // namespace geff

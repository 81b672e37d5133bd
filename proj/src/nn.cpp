#include "skbsem/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace skbsem::nn {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("nn: unknown activation '" + s + "' (expected relu or sigmoid)");
}

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "sigmoid"; }

void Dense::init_xavier(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_size() + out_size()));
    init_scaled(rng, stddev);
}

void Dense::init_scaled(Rng& rng, double stddev) {
    for (double& v : weight.data) v = stddev * rng.gaussian();
    bias.fill(0.0);
}

void Dense::init_zero() {
    weight.fill(0.0);
    bias.fill(0.0);
}

BoundDense bind(autodiff::Tape& tape, const Dense& layer) {
    return {tape.leaf(layer.weight), tape.leaf(layer.bias)};
}

autodiff::Value affine(autodiff::Value x, const BoundDense& layer) {
    return autodiff::add_rowvec(autodiff::matmul(x, layer.weight), layer.bias);
}

autodiff::Value activate(autodiff::Value x, Activation act) {
    return act == Activation::Relu ? autodiff::relu(x) : autodiff::sigmoid(x);
}

}  // namespace skbsem::nn

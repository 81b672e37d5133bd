#pragma once

#include <string>
#include <vector>

#include "skbsem/autodiff.hpp"
#include "skbsem/rng.hpp"
#include "skbsem/tensor.hpp"

namespace skbsem::nn {

enum class Activation { Relu, Sigmoid };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// One fully connected layer; weights [in x out], bias [out].
struct Dense {
    Tensor weight;
    Tensor bias;

    Dense() = default;
    Dense(std::size_t in, std::size_t out) : weight({in, out}), bias({out}) {}

    std::size_t in_size() const { return weight.rows(); }
    std::size_t out_size() const { return weight.cols(); }

    // Xavier-scaled Gaussian weights, zero bias.
    void init_xavier(Rng& rng);
    // Gaussian weights with an explicit stddev, zero bias.
    void init_scaled(Rng& rng, double stddev);
    void init_zero();
};

// Pair of tape leaves for one Dense layer.
struct BoundDense {
    autodiff::Value weight;
    autodiff::Value bias;
};

BoundDense bind(autodiff::Tape& tape, const Dense& layer);
autodiff::Value affine(autodiff::Value x, const BoundDense& layer);
autodiff::Value activate(autodiff::Value x, Activation act);

}  // namespace skbsem::nn

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace skbsem {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
// simulator needs; scalars are shape {1}.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);
    static Tensor scalar(double v);
    static Tensor row_vector(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;

    void fill(double v);
    bool all_finite() const;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace skbsem

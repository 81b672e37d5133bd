#include "skbsem/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace skbsem {

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (shape.empty()) n = 0;
    data.assign(n, fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
}

Tensor Tensor::row_vector(std::vector<double> v) {
    Tensor t;
    t.shape = {v.size()};
    t.data = std::move(v);
    return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
    return Tensor({rows, cols}, fill);
}

std::size_t Tensor::rows() const {
    if (shape.size() != 2) throw std::invalid_argument("tensor: rows() on rank-" + std::to_string(shape.size()) + " tensor");
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (shape.size() != 2) throw std::invalid_argument("tensor: cols() on rank-" + std::to_string(shape.size()) + " tensor");
    return shape[1];
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

}  // namespace skbsem

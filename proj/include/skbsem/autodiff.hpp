#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "skbsem/tensor.hpp"

namespace skbsem::autodiff {

class Tape;

struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Node&)> backprop;  // empty for leaves
    Tape* tape = nullptr;
};

// Lightweight handle into a Tape. Valid for the tape's lifetime.
class Value {
public:
    Value() = default;
    explicit Value(Node* n) : node_(n) {}

    const Tensor& value() const { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    Node* node() const { return node_; }
    bool valid() const { return node_ != nullptr; }

private:
    Node* node_ = nullptr;
};

// A single-use computation graph. Nodes are appended in topological order
// (operands always precede results), so the backward pass is one reverse
// sweep over creation order. Build one tape per training step or inference
// call; nothing is shared between tapes.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value leaf(Tensor t);
    Value leaf(const std::vector<double>& row);  // rank-1 leaf

    // Seeds d(loss)/d(loss)=1 and accumulates gradients into every node.
    // loss must be a scalar (shape {1}).
    void backward(Value loss);

    std::size_t node_count() const { return nodes_.size(); }

    Node* make_node(Tensor value, std::function<void(Node&)> back);

private:
    std::deque<Node> nodes_;
};

// ---- differentiable operations -------------------------------------------
// Shape preconditions are checked and violations throw std::invalid_argument
// with a diagnostic naming the op and both shapes.

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value scale(Value a, double c);
Value add_scalar(Value a, double c);

// matrix product: a [m x k] * b [k x n]
Value matmul(Value a, Value b);
// m [r x c] + row vector v [c] broadcast over rows
Value add_rowvec(Value m, Value v);
// m [r x c] with row i scaled by v[i], v rank-1 [r]
Value mul_colvec(Value m, Value v);

Value relu(Value a);
Value sigmoid(Value a);
Value exp_op(Value a);
Value log_op(Value a);
Value sqrt_op(Value a);
Value square(Value a);
Value clamp_min(Value a, double floor);

Value sum(Value a);    // scalar
Value mean(Value a);   // scalar
Value row_sum(Value m);   // [r x c] -> rank-1 [r]
Value row_mean(Value m);  // [r x c] -> rank-1 [r]

// sum of squared differences, scalar
Value squared_error(Value a, Value b);

// mean over rows of -log softmax(logits)[target]; logits [n x classes]
Value softmax_cross_entropy(Value logits, const std::vector<std::size_t>& targets);

// sum over elements of the Bernoulli negative log-likelihood of targets
// under means sigmoid(logits), computed in the softplus form that never
// evaluates log(0).
Value bernoulli_nll(Value logits, const Tensor& targets);

// log(sum(exp(v))) for rank-1 v, max-shifted
Value logsumexp(Value v);

// mu + sigma .* eps with eps held fixed; the differentiable reparameterized
// Gaussian sample
Value gauss_reparam(Value mu, Value sigma, const Tensor& eps);

// column-wise concatenation of rank-2 values with equal row counts
Value concat_cols(const std::vector<Value>& parts);
// columns [start, start+len) of a rank-2 value
Value slice_cols(Value m, std::size_t start, std::size_t len);

}  // namespace skbsem::autodiff

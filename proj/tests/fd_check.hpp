// Test-only finite-difference oracle. Evaluates a scalar-valued graph
// function at perturbed inputs and compares central differences against the
// backward pass. Independent of the autodiff internals: it only calls the
// public build/eval API.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "skbsem/autodiff.hpp"
#include "skbsem/rng.hpp"
#include "skbsem/tensor.hpp"

namespace fdcheck {

using skbsem::Rng;
using skbsem::Tensor;
namespace ad = skbsem::autodiff;

// Builds a scalar value from leaves created in input order.
using GraphBuilder = std::function<ad::Value(ad::Tape&, const std::vector<ad::Value>&)>;

inline double eval_graph(const GraphBuilder& build, const std::vector<Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Value> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    return build(tape, leaves).value().data[0];
}

inline std::vector<Tensor> analytic_grads(const GraphBuilder& build, const std::vector<Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Value> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    tape.backward(build(tape, leaves));
    std::vector<Tensor> grads;
    grads.reserve(leaves.size());
    for (const ad::Value& v : leaves) grads.push_back(v.grad());
    return grads;
}

inline double relative_error(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct FdReport {
    double max_rel_err = 0.0;
    std::size_t entries_checked = 0;
};

// Central differences over every entry of every input; returns the worst
// relative error against the backward pass.
inline FdReport check_gradients(const GraphBuilder& build, std::vector<Tensor> inputs, double h = 1e-5) {
    const std::vector<Tensor> grads = analytic_grads(build, inputs);
    FdReport report;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::size_t i = 0; i < inputs[t].size(); ++i) {
            const double saved = inputs[t].data[i];
            inputs[t].data[i] = saved + h;
            const double fp = eval_graph(build, inputs);
            inputs[t].data[i] = saved - h;
            const double fm = eval_graph(build, inputs);
            inputs[t].data[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            report.max_rel_err = std::max(report.max_rel_err, relative_error(grads[t].data[i], fd));
            ++report.entries_checked;
        }
    }
    return report;
}

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -2.0, double hi = 2.0,
                            double kink_margin = 0.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) {
        do {
            v = rng.uniform(lo, hi);
        } while (kink_margin > 0.0 && std::fabs(v) < kink_margin);
    }
    return t;
}

// Projection of a (possibly non-scalar) op output into a scalar, so every
// output entry contributes to the checked gradient. The weights must be
// frozen by the caller: the builder runs once per finite-difference probe
// and has to evaluate the same function every time.
inline ad::Value project(ad::Tape& tape, ad::Value v, const Tensor& weights) {
    return ad::sum(ad::mul(v, tape.leaf(weights)));
}

inline Tensor projection_weights(Rng& rng, std::vector<std::size_t> shape) {
    Tensor w(std::move(shape));
    for (double& x : w.data) x = rng.uniform(-1.0, 1.0);
    return w;
}

// The spec-level property suite: every differentiable op checked against
// central differences on randomized tiny instances. Returns the number of
// instances and the worst relative error seen.
struct SuiteReport {
    std::size_t instances = 0;
    double max_rel_err = 0.0;

    void absorb(const FdReport& r) {
        ++instances;
        max_rel_err = std::max(max_rel_err, r.max_rel_err);
    }
};

SuiteReport run_op_gradient_suite(std::size_t instances_per_op, std::uint64_t seed);

}  // namespace fdcheck

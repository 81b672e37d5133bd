#include "skbsem/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skbsem/kernels.hpp"

namespace skbsem::autodiff {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument("autodiff: " + op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const std::string& expect) {
    throw std::invalid_argument("autodiff: " + op + ": got shape " + a.shape_str() + ", expected " + expect);
}

Tape* tape_of(Value a, Value b) {
    if (a.node()->tape != b.node()->tape)
        throw std::invalid_argument("autodiff: operands belong to different tapes");
    return a.node()->tape;
}

double sigmoid_scalar(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

}  // namespace

Node* Tape::make_node(Tensor value, std::function<void(Node&)> back) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.grad = Tensor(value.shape, 0.0);
    n.value = std::move(value);
    n.backprop = std::move(back);
    n.tape = this;
    return &n;
}

Value Tape::leaf(Tensor t) { return Value(make_node(std::move(t), nullptr)); }

Value Tape::leaf(const std::vector<double>& row) { return leaf(Tensor::row_vector(row)); }

void Tape::backward(Value loss) {
    if (!loss.valid() || loss.node()->tape != this)
        throw std::invalid_argument("autodiff: backward() on a value from another tape");
    if (loss.value().size() != 1) shape_error("backward", loss.value(), "scalar [1]");
    loss.node()->grad.data[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->backprop) it->backprop(*it);
    }
}

// ---- elementwise ----------------------------------------------------------

Value add(Value a, Value b) {
    Tape* t = tape_of(a, b);
    if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
    Tensor out(a.value().shape);
    kernels::map_binary(a.value().data.data(), b.value().data.data(), out.data.data(), out.size(),
                        [](double x, double y) { return x + y; });
    Node *an = a.node(), *bn = b.node();
    return Value(t->make_node(std::move(out), [an, bn](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            an->grad.data[i] += n.grad.data[i];
            bn->grad.data[i] += n.grad.data[i];
        }
    }));
}

Value sub(Value a, Value b) {
    Tape* t = tape_of(a, b);
    if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
    Tensor out(a.value().shape);
    kernels::map_binary(a.value().data.data(), b.value().data.data(), out.data.data(), out.size(),
                        [](double x, double y) { return x - y; });
    Node *an = a.node(), *bn = b.node();
    return Value(t->make_node(std::move(out), [an, bn](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            an->grad.data[i] += n.grad.data[i];
            bn->grad.data[i] -= n.grad.data[i];
        }
    }));
}

Value mul(Value a, Value b) {
    Tape* t = tape_of(a, b);
    if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
    Tensor out(a.value().shape);
    kernels::map_binary(a.value().data.data(), b.value().data.data(), out.data.data(), out.size(),
                        [](double x, double y) { return x * y; });
    Node *an = a.node(), *bn = b.node();
    return Value(t->make_node(std::move(out), [an, bn](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            an->grad.data[i] += n.grad.data[i] * bn->value.data[i];
            bn->grad.data[i] += n.grad.data[i] * an->value.data[i];
        }
    }));
}

Value scale(Value a, double c) {
    Tensor out = a.value();
    for (double& v : out.data) v *= c;
    Node* an = a.node();
    return Value(a.node()->tape->make_node(std::move(out), [an, c](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad.data[i] += c * n.grad.data[i];
    }));
}

Value add_scalar(Value a, double c) {
    Tensor out = a.value();
    for (double& v : out.data) v += c;
    Node* an = a.node();
    return Value(a.node()->tape->make_node(std::move(out), [an](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad.data[i] += n.grad.data[i];
    }));
}

// ---- linear algebra -------------------------------------------------------

Value matmul(Value a, Value b) {
    Tape* t = tape_of(a, b);
    const Tensor &av = a.value(), &bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) shape_error("matmul", av, bv);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out({m, n});
    kernels::gemm_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n, false);
    Node *an = a.node(), *bn = b.node();
    return Value(t->make_node(std::move(out), [an, bn, m, k, n](Node& node) {
        // dA += dC * B^T ; dB += A^T * dC
        kernels::gemm_nt(node.grad.data.data(), bn->value.data.data(), an->grad.data.data(), m, n, k, true);
        kernels::gemm_tn(an->value.data.data(), node.grad.data.data(), bn->grad.data.data(), k, m, n, true);
    }));
}

Value add_rowvec(Value m, Value v) {
    Tape* t = tape_of(m, v);
    const Tensor &mv = m.value(), &vv = v.value();
    if (mv.rank() != 2 || vv.rank() != 1 || vv.shape[0] != mv.cols()) shape_error("add_rowvec", mv, vv);
    Tensor out = mv;
    const std::size_t r = mv.rows(), c = mv.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += vv.data[j];
    Node *mn = m.node(), *vn = v.node();
    return Value(t->make_node(std::move(out), [mn, vn, r, c](Node& n) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                mn->grad.data[i * c + j] += n.grad.data[i * c + j];
                vn->grad.data[j] += n.grad.data[i * c + j];
            }
    }));
}

Value mul_colvec(Value m, Value v) {
    Tape* t = tape_of(m, v);
    const Tensor &mv = m.value(), &vv = v.value();
    if (mv.rank() != 2 || vv.rank() != 1 || vv.shape[0] != mv.rows()) shape_error("mul_colvec", mv, vv);
    const std::size_t r = mv.rows(), c = mv.cols();
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] = mv.data[i * c + j] * vv.data[i];
    Node *mn = m.node(), *vn = v.node();
    return Value(t->make_node(std::move(out), [mn, vn, r, c](Node& n) {
        for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                mn->grad.data[i * c + j] += n.grad.data[i * c + j] * vn->value.data[i];
                acc += n.grad.data[i * c + j] * mn->value.data[i * c + j];
            }
            vn->grad.data[i] += acc;
        }
    }));
}

// ---- nonlinearities -------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Value unary_op(Value a, Fwd fwd, Bwd bwd) {
    Tensor out(a.value().shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = fwd(a.value().data[i]);
    Node* an = a.node();
    return Value(a.node()->tape->make_node(std::move(out), [an, bwd](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            an->grad.data[i] += n.grad.data[i] * bwd(an->value.data[i], n.value.data[i]);
    }));
}

}  // namespace

Value relu(Value a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Value sigmoid(Value a) {
    return unary_op(
        a, [](double x) { return sigmoid_scalar(x); }, [](double, double y) { return y * (1.0 - y); });
}

Value exp_op(Value a) {
    return unary_op(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Value log_op(Value a) {
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Value sqrt_op(Value a) {
    return unary_op(
        a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Value square(Value a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Value clamp_min(Value a, double floor) {
    return unary_op(
        a, [floor](double x) { return x > floor ? x : floor; },
        [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

// ---- reductions -----------------------------------------------------------

Value sum(Value a) {
    double acc = 0.0;
    for (double v : a.value().data) acc += v;
    Node* an = a.node();
    return Value(a.node()->tape->make_node(Tensor::scalar(acc), [an](Node& n) {
        const double g = n.grad.data[0];
        for (double& dv : an->grad.data) dv += g;
    }));
}

Value mean(Value a) {
    if (a.value().size() == 0) shape_error("mean", a.value(), "nonempty");
    double acc = 0.0;
    for (double v : a.value().data) acc += v;
    const double inv = 1.0 / static_cast<double>(a.value().size());
    Node* an = a.node();
    return Value(a.node()->tape->make_node(Tensor::scalar(acc * inv), [an, inv](Node& n) {
        const double g = n.grad.data[0] * inv;
        for (double& dv : an->grad.data) dv += g;
    }));
}

Value row_sum(Value m) {
    const Tensor& mv = m.value();
    if (mv.rank() != 2) shape_error("row_sum", mv, "rank-2");
    const std::size_t r = mv.rows(), c = mv.cols();
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += mv.data[i * c + j];
        out.data[i] = acc;
    }
    Node* mn = m.node();
    return Value(m.node()->tape->make_node(std::move(out), [mn, r, c](Node& n) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) mn->grad.data[i * c + j] += n.grad.data[i];
    }));
}

Value row_mean(Value m) {
    const Tensor& mv = m.value();
    if (mv.rank() != 2 || mv.cols() == 0) shape_error("row_mean", mv, "rank-2 with columns");
    const std::size_t r = mv.rows(), c = mv.cols();
    const double inv = 1.0 / static_cast<double>(c);
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += mv.data[i * c + j];
        out.data[i] = acc * inv;
    }
    Node* mn = m.node();
    return Value(m.node()->tape->make_node(std::move(out), [mn, r, c, inv](Node& n) {
        for (std::size_t i = 0; i < r; ++i) {
            const double g = n.grad.data[i] * inv;
            for (std::size_t j = 0; j < c; ++j) mn->grad.data[i * c + j] += g;
        }
    }));
}

// ---- losses ---------------------------------------------------------------

Value squared_error(Value a, Value b) {
    Tape* t = tape_of(a, b);
    if (!a.value().same_shape(b.value())) shape_error("squared_error", a.value(), b.value());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) {
        const double d = a.value().data[i] - b.value().data[i];
        acc += d * d;
    }
    Node *an = a.node(), *bn = b.node();
    return Value(t->make_node(Tensor::scalar(acc), [an, bn](Node& n) {
        const double g = n.grad.data[0];
        for (std::size_t i = 0; i < an->grad.size(); ++i) {
            const double d = 2.0 * (an->value.data[i] - bn->value.data[i]) * g;
            an->grad.data[i] += d;
            bn->grad.data[i] -= d;
        }
    }));
}

Value softmax_cross_entropy(Value logits, const std::vector<std::size_t>& targets) {
    const Tensor& lv = logits.value();
    if (lv.rank() != 2) shape_error("softmax_cross_entropy", lv, "rank-2 [batch x classes]");
    const std::size_t n = lv.rows(), m = lv.cols();
    if (targets.size() != n)
        throw std::invalid_argument("autodiff: softmax_cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(n) + " rows");
    for (std::size_t t : targets)
        if (t >= m) throw std::invalid_argument("autodiff: softmax_cross_entropy: target class out of range");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = lv.data.data() + i * m;
        const double mx = *std::max_element(row, row + m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) z += std::exp(row[j] - mx);
        total += -(row[targets[i]] - mx - std::log(z));
    }
    Node* ln = logits.node();
    auto tgt = targets;
    return Value(logits.node()->tape->make_node(Tensor::scalar(total / static_cast<double>(n)),
                                                [ln, tgt, n, m](Node& node) {
        const double g = node.grad.data[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = ln->value.data.data() + i * m;
            const double mx = *std::max_element(row, row + m);
            double z = 0.0;
            for (std::size_t j = 0; j < m; ++j) z += std::exp(row[j] - mx);
            for (std::size_t j = 0; j < m; ++j) {
                const double p = std::exp(row[j] - mx) / z;
                ln->grad.data[i * m + j] += g * (p - (j == tgt[i] ? 1.0 : 0.0));
            }
        }
    }));
}

Value bernoulli_nll(Value logits, const Tensor& targets) {
    const Tensor& lv = logits.value();
    if (!lv.same_shape(targets)) shape_error("bernoulli_nll", lv, targets);
    double acc = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i)
        acc += softplus_scalar(lv.data[i]) - lv.data[i] * targets.data[i];
    Node* ln = logits.node();
    Tensor tgt = targets;
    return Value(logits.node()->tape->make_node(Tensor::scalar(acc), [ln, tgt](Node& n) {
        const double g = n.grad.data[0];
        for (std::size_t i = 0; i < ln->grad.size(); ++i)
            ln->grad.data[i] += g * (sigmoid_scalar(ln->value.data[i]) - tgt.data[i]);
    }));
}

Value logsumexp(Value v) {
    const Tensor& vv = v.value();
    if (vv.rank() != 1 || vv.size() == 0) shape_error("logsumexp", vv, "nonempty rank-1");
    const double mx = *std::max_element(vv.data.begin(), vv.data.end());
    double z = 0.0;
    for (double x : vv.data) z += std::exp(x - mx);
    Node* vn = v.node();
    return Value(v.node()->tape->make_node(Tensor::scalar(mx + std::log(z)), [vn](Node& n) {
        const double g = n.grad.data[0];
        const double lse = n.value.data[0];
        for (std::size_t i = 0; i < vn->grad.size(); ++i)
            vn->grad.data[i] += g * std::exp(vn->value.data[i] - lse);
    }));
}

Value gauss_reparam(Value mu, Value sigma, const Tensor& eps) {
    Tape* t = tape_of(mu, sigma);
    if (!mu.value().same_shape(sigma.value())) shape_error("gauss_reparam", mu.value(), sigma.value());
    if (!mu.value().same_shape(eps)) shape_error("gauss_reparam", mu.value(), eps);
    Tensor out(mu.value().shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = mu.value().data[i] + sigma.value().data[i] * eps.data[i];
    Node *mn = mu.node(), *sn = sigma.node();
    Tensor epsc = eps;
    return Value(t->make_node(std::move(out), [mn, sn, epsc](Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            mn->grad.data[i] += n.grad.data[i];
            sn->grad.data[i] += n.grad.data[i] * epsc.data[i];
        }
    }));
}

// ---- structure ------------------------------------------------------------

Value concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) throw std::invalid_argument("autodiff: concat_cols: no parts");
    Tape* t = parts[0].node()->tape;
    const std::size_t r = parts[0].value().rank() == 2 ? parts[0].value().rows() : 0;
    std::size_t total = 0;
    for (const Value& p : parts) {
        if (p.node()->tape != t) throw std::invalid_argument("autodiff: concat_cols: mixed tapes");
        if (p.value().rank() != 2 || p.value().rows() != r)
            shape_error("concat_cols", p.value(), "rank-2 with " + std::to_string(r) + " rows");
        total += p.value().cols();
    }
    Tensor out({r, total});
    std::size_t off = 0;
    for (const Value& p : parts) {
        const std::size_t c = p.value().cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out.data[i * total + off + j] = p.value().data[i * c + j];
        off += c;
    }
    std::vector<Node*> srcs;
    for (const Value& p : parts) srcs.push_back(p.node());
    return Value(t->make_node(std::move(out), [srcs, r, total](Node& n) {
        std::size_t off = 0;
        for (Node* src : srcs) {
            const std::size_t c = src->value.cols();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) src->grad.data[i * c + j] += n.grad.data[i * total + off + j];
            off += c;
        }
    }));
}

Value slice_cols(Value m, std::size_t start, std::size_t len) {
    const Tensor& mv = m.value();
    if (mv.rank() != 2 || start + len > mv.cols())
        shape_error("slice_cols", mv, "rank-2 with at least " + std::to_string(start + len) + " columns");
    const std::size_t r = mv.rows(), c = mv.cols();
    Tensor out({r, len});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < len; ++j) out.data[i * len + j] = mv.data[i * c + start + j];
    Node* mn = m.node();
    return Value(m.node()->tape->make_node(std::move(out), [mn, start, len, r, c](Node& n) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < len; ++j) mn->grad.data[i * c + start + j] += n.grad.data[i * len + j];
    }));
}

}  // namespace skbsem::autodiff

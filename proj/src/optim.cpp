#include "skbsem/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace skbsem {

void Adam::step(const std::vector<std::pair<std::string, Tensor*>>& params,
                const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam: " + std::to_string(params.size()) + " parameters but " +
                                    std::to_string(grads.size()) + " gradients");
    if (first_moment_.empty()) {
        for (const auto& [name, p] : params) {
            first_moment_.emplace_back(p->shape, 0.0);
            second_moment_.emplace_back(p->shape, 0.0);
        }
    }
    if (first_moment_.size() != params.size())
        throw std::invalid_argument("adam: parameter count changed between steps");

    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

    for (std::size_t idx = 0; idx < params.size(); ++idx) {
        Tensor& p = *params[idx].second;
        const Tensor& g = *grads[idx];
        if (!p.same_shape(g))
            throw std::invalid_argument("adam: gradient shape " + g.shape_str() + " does not match parameter '" +
                                        params[idx].first + "' " + p.shape_str());
        if (!g.all_finite())
            throw std::runtime_error("adam: non-finite gradient for parameter '" + params[idx].first +
                                     "' at step " + std::to_string(step_));
        Tensor& m = first_moment_[idx];
        Tensor& v = second_moment_[idx];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            p.data[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
        }
    }
}

}  // namespace skbsem

// Test-only independent evaluator of the unconditional grouped-latent ELBO:
// reconstruction negative log-likelihood plus per-group KL terms, written as
// plain double loops with its own dense forward passes, its own KL algebra
// and the textbook Bernoulli log-likelihood. Shares nothing with the
// autodiff-based loss except the parameter values and the frozen noise
// draws, so agreement between the two is a genuine dual-route check.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "skbsem/cvae.hpp"

namespace elbo_oracle {

inline std::vector<double> dense(const std::vector<double>& x, const skbsem::nn::Dense& layer) {
    const std::size_t in = layer.in_size(), out = layer.out_size();
    if (x.size() != in) throw std::invalid_argument("elbo oracle: dense input size mismatch");
    std::vector<double> y(out);
    for (std::size_t j = 0; j < out; ++j) {
        double acc = layer.bias.data[j];
        for (std::size_t i = 0; i < in; ++i) acc += x[i] * layer.weight.data[i * out + j];
        y[j] = acc;
    }
    return y;
}

inline void apply_sigmoid(std::vector<double>& v) {
    for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
}

// Unconditional (null-condition), noise-free hierarchical ELBO of `image`
// under `model`, with the posterior samples taken from the frozen noise
// bundle. Requires sigmoid hidden activations and a disabled channel.
inline double evaluate(const skbsem::CvaeModel& model, const skbsem::ImageTensor& image,
                       const skbsem::CvaeNoise& noise) {
    const skbsem::CvaeConfig& cfg = model.cfg;
    if (cfg.activation != skbsem::nn::Activation::Sigmoid)
        throw std::invalid_argument("elbo oracle: expects sigmoid hidden activations");
    if (noise.channel_enabled) throw std::invalid_argument("elbo oracle: expects a disabled channel");
    const double log_floor = std::log(cfg.sigma_floor);

    // Null condition: the embedding collapses to its bias.
    std::vector<double> cond_embed(model.cond_embed.bias.data);

    std::vector<double> z_all;
    double kl = 0.0;
    for (std::size_t g = 0; g < cfg.group_widths.size(); ++g) {
        const std::size_t w = cfg.group_widths[g];

        std::vector<double> pin = cond_embed;
        pin.insert(pin.end(), z_all.begin(), z_all.end());
        std::vector<double> ph = dense(pin, model.groups[g].prior_hidden);
        apply_sigmoid(ph);
        const std::vector<double> pout = dense(ph, model.groups[g].prior_out);

        std::vector<double> din = cond_embed;
        din.insert(din.end(), image.pixels.begin(), image.pixels.end());
        din.insert(din.end(), z_all.begin(), z_all.end());
        std::vector<double> dh = dense(din, model.groups[g].delta_hidden);
        apply_sigmoid(dh);
        const std::vector<double> dout = dense(dh, model.groups[g].delta_out);

        for (std::size_t j = 0; j < w; ++j) {
            const double mu_p = pout[j];
            const double log_sig_p = std::max(pout[w + j], log_floor);
            const double sig_p = std::exp(log_sig_p);
            const double mu_q = mu_p + dout[j];
            const double sig_q = sig_p * std::exp(std::max(dout[w + j], log_floor));
            kl += std::log(sig_p / sig_q) +
                  (sig_q * sig_q + (mu_q - mu_p) * (mu_q - mu_p)) / (2.0 * sig_p * sig_p) - 0.5;
            z_all.push_back(mu_q + sig_q * noise.group_eps[g].data[j]);
        }
    }

    std::vector<double> dec_in = cond_embed;
    dec_in.insert(dec_in.end(), z_all.begin(), z_all.end());
    std::vector<double> h = dense(dec_in, model.dec_hidden);
    apply_sigmoid(h);
    std::vector<double> means = dense(h, model.dec_out);
    apply_sigmoid(means);

    double nll = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        const double x = image.pixels[i];
        nll -= x * std::log(means[i]) + (1.0 - x) * std::log(1.0 - means[i]);
    }
    return nll + kl;
}

}  // namespace elbo_oracle

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skbsem/channel.hpp"
#include "skbsem/dataset.hpp"
#include "skbsem/image.hpp"
#include "skbsem/nn.hpp"
#include "skbsem/skb.hpp"

namespace skbsem {

// Hierarchical conditional VAE with grouped latents. The latent vector is an
// ordered sequence of groups; each group's prior is conditioned on all
// earlier groups plus the class-attribute condition, and the approximate
// posterior is parameterized as a residual on that prior:
//   p(z_g | z_<g, k) = N(mu, sigma)
//   q(z_g | z_<g, x, k) = N(mu + dmu, sigma * dsigma)
// with (dmu, dsigma) emitted by per-group delta networks.

struct CvaeConfig {
    std::size_t width = 16, height = 16, channels = 1;
    std::size_t attribute_count = 12;
    std::vector<std::size_t> group_widths = {8, 8};
    std::size_t cond_embed = 16;
    std::size_t hidden = 64;           // prior / delta network hidden width
    std::size_t decoder_hidden = 128;
    nn::Activation activation = nn::Activation::Relu;
    double sigma_floor = 1e-6;

    enum class Likelihood { Bernoulli, Gaussian };
    Likelihood likelihood = Likelihood::Bernoulli;
    double gaussian_sigma = 0.1;  // fixed stddev when likelihood is Gaussian

    std::size_t image_size() const { return width * height * channels; }
    std::size_t latent_size() const;
    void validate() const;
};

// Ordered per-group latent vectors.
struct LatentGroups {
    std::vector<std::vector<double>> groups;

    std::size_t group_count() const { return groups.size(); }
    std::size_t total_size() const;
    std::vector<double> flatten() const;
    static LatentGroups unflatten(const std::vector<double>& flat, const std::vector<std::size_t>& widths);
};

// Per-group factorial Gaussian; sigma strictly positive.
struct GroupGaussians {
    std::vector<double> mu;
    std::vector<double> sigma;
};

struct CvaeModel {
    struct GroupNets {
        nn::Dense prior_hidden, prior_out;  // (cond, z_<g) -> 2*w_g
        nn::Dense delta_hidden, delta_out;  // (cond, x, z_<g) -> 2*w_g
    };

    CvaeConfig cfg;
    nn::Dense cond_embed;  // linear embedding of the attribute vector
    std::vector<GroupNets> groups;
    nn::Dense dec_hidden, dec_out;  // (cond, z) -> pixel logits

    explicit CvaeModel(const CvaeConfig& cfg);

    // Hidden layers Xavier; prior/delta output layers start at zero so the
    // prior opens as N(0, I) and the posterior equals the prior exactly.
    void init(std::uint64_t seed);

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
    void save(const std::string& path) const;
    void load(const std::string& path);
};

// Null condition for unconditional (vanilla) operation: the zero attribute
// vector, which reduces the condition embedding to its bias.
std::vector<double> null_condition(const CvaeModel& model);

// Prior parameters of group prefix.group_count()+1 given the condition and
// the earlier groups.
GroupGaussians prior_params(const CvaeModel& model, const std::vector<double>& cond, const LatentGroups& prefix);

// Residual posterior of the same group: (mu + dmu, sigma * dsigma).
GroupGaussians posterior_params(const CvaeModel& model, const ImageTensor& x, const std::vector<double>& cond,
                                const LatentGroups& prefix);

// Closed-form KL(q || p) between factorial Gaussians; rejects nonpositive
// sigmas.
double kl_diag_gaussians(const GroupGaussians& q, const GroupGaussians& p);

// Ancestral posterior sample (top-down over groups), deterministic per seed.
LatentGroups cvae_encode(const CvaeModel& model, const ImageTensor& x, const std::vector<double>& cond,
                         std::uint64_t noise_seed);

// Decode latents under a condition into pixel means.
ImageTensor cvae_decode(const CvaeModel& model, const LatentGroups& z, const std::vector<double>& cond);

// Ancestral prior sample, deterministic per seed.
LatentGroups prior_sample(const CvaeModel& model, const std::vector<double>& cond, std::uint64_t seed);

// ---- loss -----------------------------------------------------------------

// Frozen randomness for one loss evaluation: per-group reparameterization
// draws plus the channel perturbation. Holding a bundle fixed makes the loss
// a deterministic differentiable function of the parameters (what the
// finite-difference checks need).
struct CvaeNoise {
    std::vector<Tensor> group_eps;  // [n x w_g] each
    Tensor channel_eps;             // [n x latent]; empty when channel off
    double snr_db = 0.0;            // empirical-power channel, ignored if off
    bool channel_enabled = false;
    bool channel_fixed_sigma = false;
    double fixed_sigma = 0.0;

    static CvaeNoise draw(Rng& rng, std::size_t batch, const CvaeConfig& cfg, const ChannelConfig& channel,
                          double snr_db_override);
};

// Loss value for a batch: (reconstruction NLL of x under the decoded means
// from the channel-perturbed latent + kl_weight * sum of per-group KLs on
// the clean latent) / batch.
double cvae_loss_eval(const CvaeModel& model, const Tensor& x_batch, const Tensor& k_batch, const CvaeNoise& noise,
                      double kl_weight);

// Gradients of the same loss w.r.t. every named tensor, in named_tensors()
// order.
std::vector<Tensor> cvae_loss_grads(const CvaeModel& model, const Tensor& x_batch, const Tensor& k_batch,
                                    const CvaeNoise& noise, double kl_weight, double* loss_out = nullptr);

// Single-image loss with noise drawn from `seed` (the spec-level op).
double loss_l2(const CvaeModel& model, const ImageTensor& x, const std::vector<double>& cond,
               const ChannelConfig& channel, double kl_weight, std::uint64_t seed);

// ---- training ---------------------------------------------------------------

struct CvaeTrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double kl_weight = 1.0;
    // Epochs over which the KL weight ramps linearly from 0 to kl_weight.
    // Without the ramp the optimizer prunes the latent path before the
    // delta networks learn anything (the usual posterior-collapse failure).
    std::size_t kl_warmup_epochs = 20;
    double train_snr_min_db = 0.0;  // per-batch SNR drawn uniformly from this range
    double train_snr_max_db = 10.0;
    bool conditional = true;  // false trains the vanilla (null-condition) variant
};

struct CvaeTrainTrace {
    std::vector<double> epoch_mean_loss;
};

// Alg.-3-style joint training of the generative encoder and decoder: the
// true class's attribute vector conditions both sides, the latent crosses
// the AWGN channel before decoding, Adam updates both parameter sets.
CvaeTrainTrace train_cvae(CvaeModel& model, const SampleSet& train, const AttributeMatrix& skb,
                          const CvaeTrainConfig& cfg, std::uint64_t seed);

}  // namespace skbsem

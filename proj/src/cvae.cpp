#include "skbsem/cvae.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "skbsem/optim.hpp"
#include "skbsem/snapshot.hpp"

namespace skbsem {

using autodiff::Tape;
using autodiff::Value;

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

std::size_t CvaeConfig::latent_size() const {
    std::size_t total = 0;
    for (std::size_t w : group_widths) total += w;
    return total;
}

void CvaeConfig::validate() const {
    if (image_size() == 0) throw std::invalid_argument("cvae: zero-sized image");
    if (attribute_count == 0) throw std::invalid_argument("cvae: zero attribute count");
    if (group_widths.empty()) throw std::invalid_argument("cvae: need at least one latent group");
    for (std::size_t w : group_widths)
        if (w == 0) throw std::invalid_argument("cvae: zero-width latent group");
    if (cond_embed == 0 || hidden == 0 || decoder_hidden == 0)
        throw std::invalid_argument("cvae: zero-sized network layer");
    if (sigma_floor <= 0.0) throw std::invalid_argument("cvae: sigma floor must be positive");
    if (likelihood == Likelihood::Gaussian && gaussian_sigma <= 0.0)
        throw std::invalid_argument("cvae: Gaussian likelihood needs positive sigma");
}

std::size_t LatentGroups::total_size() const {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    return total;
}

std::vector<double> LatentGroups::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_size());
    for (const auto& g : groups) flat.insert(flat.end(), g.begin(), g.end());
    return flat;
}

LatentGroups LatentGroups::unflatten(const std::vector<double>& flat, const std::vector<std::size_t>& widths) {
    std::size_t total = 0;
    for (std::size_t w : widths) total += w;
    if (flat.size() != total)
        throw std::invalid_argument("cvae: cannot unflatten " + std::to_string(flat.size()) + " values into groups totalling " +
                                    std::to_string(total));
    LatentGroups out;
    std::size_t off = 0;
    for (std::size_t w : widths) {
        out.groups.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                flat.begin() + static_cast<std::ptrdiff_t>(off + w));
        off += w;
    }
    return out;
}

CvaeModel::CvaeModel(const CvaeConfig& c) : cfg(c) {
    cfg.validate();
    cond_embed = nn::Dense(cfg.attribute_count, cfg.cond_embed);
    std::size_t prefix = 0;
    for (std::size_t w : cfg.group_widths) {
        GroupNets nets;
        nets.prior_hidden = nn::Dense(cfg.cond_embed + prefix, cfg.hidden);
        nets.prior_out = nn::Dense(cfg.hidden, 2 * w);
        nets.delta_hidden = nn::Dense(cfg.cond_embed + cfg.image_size() + prefix, cfg.hidden);
        nets.delta_out = nn::Dense(cfg.hidden, 2 * w);
        groups.push_back(std::move(nets));
        prefix += w;
    }
    dec_hidden = nn::Dense(cfg.cond_embed + cfg.latent_size(), cfg.decoder_hidden);
    dec_out = nn::Dense(cfg.decoder_hidden, cfg.image_size());
}

void CvaeModel::init(std::uint64_t seed) {
    Rng rng(seed);
    Rng cr = rng.derive(1);
    cond_embed.init_xavier(cr);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        Rng gr = rng.derive(2, g);
        Rng ph = gr.derive(1), dh = gr.derive(2);
        groups[g].prior_hidden.init_xavier(ph);
        groups[g].delta_hidden.init_xavier(dh);
        // Zero output layers: prior opens as N(0, I) and the posterior
        // equals the prior, so total KL is exactly zero at initialization.
        groups[g].prior_out.init_zero();
        groups[g].delta_out.init_zero();
    }
    Rng dr = rng.derive(3);
    Rng dr2 = rng.derive(4);
    dec_hidden.init_xavier(dr);
    dec_out.init_scaled(dr2, 0.01);
}

std::vector<std::pair<std::string, Tensor*>> CvaeModel::named_tensors() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("cvae/cond/w", &cond_embed.weight);
    out.emplace_back("cvae/cond/b", &cond_embed.bias);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::string p = "cvae/g" + std::to_string(g);
        out.emplace_back(p + "/prior_h/w", &groups[g].prior_hidden.weight);
        out.emplace_back(p + "/prior_h/b", &groups[g].prior_hidden.bias);
        out.emplace_back(p + "/prior_o/w", &groups[g].prior_out.weight);
        out.emplace_back(p + "/prior_o/b", &groups[g].prior_out.bias);
        out.emplace_back(p + "/delta_h/w", &groups[g].delta_hidden.weight);
        out.emplace_back(p + "/delta_h/b", &groups[g].delta_hidden.bias);
        out.emplace_back(p + "/delta_o/w", &groups[g].delta_out.weight);
        out.emplace_back(p + "/delta_o/b", &groups[g].delta_out.bias);
    }
    out.emplace_back("cvae/dec_h/w", &dec_hidden.weight);
    out.emplace_back("cvae/dec_h/b", &dec_hidden.bias);
    out.emplace_back("cvae/dec_o/w", &dec_out.weight);
    out.emplace_back("cvae/dec_o/b", &dec_out.bias);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> CvaeModel::named_tensors() const {
    auto mut = const_cast<CvaeModel*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [n, t] : mut) out.emplace_back(n, t);
    return out;
}

void CvaeModel::save(const std::string& path) const { save_snapshot(path, named_tensors()); }

void CvaeModel::load(const std::string& path) {
    const NamedTensors snap = load_snapshot(path);
    for (auto& [name, t] : named_tensors()) *t = snapshot_get(snap, name, t->shape);
}

std::vector<double> null_condition(const CvaeModel& model) {
    return std::vector<double>(model.cfg.attribute_count, 0.0);
}

// ---- graph machinery --------------------------------------------------------

namespace {

struct BoundCvae {
    nn::BoundDense cond;
    struct G {
        nn::BoundDense prior_hidden, prior_out, delta_hidden, delta_out;
    };
    std::vector<G> groups;
    nn::BoundDense dec_hidden, dec_out;
    std::vector<Value> leaves;  // named_tensors() order
};

BoundCvae bind_model(Tape& tape, const CvaeModel& model) {
    BoundCvae b;
    auto push = [&](const nn::Dense& d) {
        nn::BoundDense bd = nn::bind(tape, d);
        b.leaves.push_back(bd.weight);
        b.leaves.push_back(bd.bias);
        return bd;
    };
    b.cond = push(model.cond_embed);
    for (const auto& g : model.groups) {
        BoundCvae::G bg;
        bg.prior_hidden = push(g.prior_hidden);
        bg.prior_out = push(g.prior_out);
        bg.delta_hidden = push(g.delta_hidden);
        bg.delta_out = push(g.delta_out);
        b.groups.push_back(bg);
    }
    b.dec_hidden = push(model.dec_hidden);
    b.dec_out = push(model.dec_out);
    return b;
}

struct GaussParamsGraph {
    Value mu;
    Value log_sigma;
    Value sigma;
};

// (mu, log sigma) head: splits the 2w-wide output and floors the log-sigma.
GaussParamsGraph gauss_head(Value out, std::size_t width, double log_floor) {
    GaussParamsGraph g;
    g.mu = autodiff::slice_cols(out, 0, width);
    g.log_sigma = autodiff::clamp_min(autodiff::slice_cols(out, width, width), log_floor);
    g.sigma = autodiff::exp_op(g.log_sigma);
    return g;
}

Value concat_or_single(const std::vector<Value>& parts) {
    return parts.size() == 1 ? parts[0] : autodiff::concat_cols(parts);
}

// Sum over elements of KL(q || p) with both Gaussians given by
// (mu, log sigma) pairs.
Value kl_graph(const GaussParamsGraph& q, const GaussParamsGraph& p) {
    Value diff = autodiff::sub(p.log_sigma, q.log_sigma);
    Value quad = autodiff::scale(
        autodiff::mul(autodiff::add(autodiff::square(q.sigma), autodiff::square(autodiff::sub(q.mu, p.mu))),
                      autodiff::exp_op(autodiff::scale(p.log_sigma, -2.0))),
        0.5);
    return autodiff::sum(autodiff::add_scalar(autodiff::add(diff, quad), -0.5));
}

struct LossGraph {
    Value loss;
    std::vector<Value> leaves;
};

LossGraph build_loss_graph(Tape& tape, const CvaeModel& model, const Tensor& x_batch, const Tensor& k_batch,
                           const CvaeNoise& noise, double kl_weight) {
    const CvaeConfig& cfg = model.cfg;
    if (x_batch.rank() != 2 || x_batch.cols() != cfg.image_size())
        throw std::invalid_argument("cvae: image batch " + x_batch.shape_str() + " does not match image size " +
                                    std::to_string(cfg.image_size()));
    if (k_batch.rank() != 2 || k_batch.cols() != cfg.attribute_count || k_batch.rows() != x_batch.rows())
        throw std::invalid_argument("cvae: condition batch " + k_batch.shape_str() + " does not match images " +
                                    x_batch.shape_str());
    if (noise.group_eps.size() != cfg.group_widths.size())
        throw std::invalid_argument("cvae: noise bundle has " + std::to_string(noise.group_eps.size()) +
                                    " groups, model has " + std::to_string(cfg.group_widths.size()));
    if (kl_weight < 0.0) throw std::invalid_argument("cvae: negative KL weight");

    const std::size_t n = x_batch.rows();
    const double log_floor = std::log(cfg.sigma_floor);

    BoundCvae bound = bind_model(tape, model);
    Value x = tape.leaf(x_batch);
    Value k = tape.leaf(k_batch);
    Value e = nn::affine(k, bound.cond);

    std::vector<Value> zs;
    Value kl_total;
    for (std::size_t g = 0; g < cfg.group_widths.size(); ++g) {
        const std::size_t w = cfg.group_widths[g];

        std::vector<Value> prior_in{e};
        for (const Value& z : zs) prior_in.push_back(z);
        Value ph = nn::activate(nn::affine(concat_or_single(prior_in), bound.groups[g].prior_hidden), cfg.activation);
        GaussParamsGraph prior = gauss_head(nn::affine(ph, bound.groups[g].prior_out), w, log_floor);

        std::vector<Value> delta_in{e, x};
        for (const Value& z : zs) delta_in.push_back(z);
        Value dh = nn::activate(nn::affine(concat_or_single(delta_in), bound.groups[g].delta_hidden), cfg.activation);
        Value dout = nn::affine(dh, bound.groups[g].delta_out);

        // Residual posterior: mu_q = mu + dmu, log sigma_q = log sigma + log dsigma.
        GaussParamsGraph posterior;
        posterior.mu = autodiff::add(prior.mu, autodiff::slice_cols(dout, 0, w));
        posterior.log_sigma =
            autodiff::add(prior.log_sigma, autodiff::clamp_min(autodiff::slice_cols(dout, w, w), log_floor));
        posterior.sigma = autodiff::exp_op(posterior.log_sigma);

        zs.push_back(autodiff::gauss_reparam(posterior.mu, posterior.sigma, noise.group_eps[g]));

        Value kl_g = kl_graph(posterior, prior);
        kl_total = g == 0 ? kl_g : autodiff::add(kl_total, kl_g);
    }

    Value z = concat_or_single(zs);
    Value z_hat = z;
    if (noise.channel_enabled) {
        Value eps = tape.leaf(noise.channel_eps);
        if (noise.channel_fixed_sigma) {
            z_hat = autodiff::add(z, autodiff::scale(eps, noise.fixed_sigma));
        } else {
            // Per-sample empirical power sets the noise amplitude, inside the
            // graph so the loss stays differentiable end to end.
            Value amp = autodiff::scale(autodiff::sqrt_op(autodiff::row_mean(autodiff::square(z))),
                                        std::pow(10.0, -noise.snr_db / 20.0));
            z_hat = autodiff::add(z, autodiff::mul_colvec(eps, amp));
        }
    }

    Value dh = nn::activate(nn::affine(autodiff::concat_cols({e, z_hat}), bound.dec_hidden), cfg.activation);
    Value logits = nn::affine(dh, bound.dec_out);

    Value nll;
    if (cfg.likelihood == CvaeConfig::Likelihood::Bernoulli) {
        nll = autodiff::bernoulli_nll(logits, x_batch);
    } else {
        const double s = cfg.gaussian_sigma;
        Value means = autodiff::sigmoid(logits);
        nll = autodiff::add_scalar(autodiff::scale(autodiff::squared_error(means, x), 0.5 / (s * s)),
                                   static_cast<double>(x_batch.size()) * (std::log(s) + kHalfLog2Pi));
    }

    Value loss = autodiff::scale(autodiff::add(nll, autodiff::scale(kl_total, kl_weight)),
                                 1.0 / static_cast<double>(n));
    return {loss, std::move(bound.leaves)};
}

Tensor row_matrix(const std::vector<double>& v) {
    Tensor t({1, v.size()});
    t.data = v;
    return t;
}

void check_cond(const CvaeModel& model, const std::vector<double>& cond) {
    if (cond.size() != model.cfg.attribute_count)
        throw std::invalid_argument("cvae: condition length " + std::to_string(cond.size()) +
                                    " does not match attribute count " + std::to_string(model.cfg.attribute_count));
}

void check_prefix(const CvaeModel& model, const LatentGroups& prefix) {
    if (prefix.group_count() >= model.cfg.group_widths.size())
        throw std::invalid_argument("cvae: prefix already has " + std::to_string(prefix.group_count()) +
                                    " groups; model has only " + std::to_string(model.cfg.group_widths.size()));
    for (std::size_t g = 0; g < prefix.group_count(); ++g)
        if (prefix.groups[g].size() != model.cfg.group_widths[g])
            throw std::invalid_argument("cvae: prefix group " + std::to_string(g) + " has width " +
                                        std::to_string(prefix.groups[g].size()) + ", expected " +
                                        std::to_string(model.cfg.group_widths[g]));
}

struct InferenceHeads {
    GroupGaussians prior;
    GroupGaussians posterior;  // filled only when an image was supplied
};

// Evaluates the prior head of group prefix+1 (and the residual posterior
// when x is non-null) on a single-sample graph.
InferenceHeads eval_heads(const CvaeModel& model, const std::vector<double>& cond, const LatentGroups& prefix,
                          const ImageTensor* x) {
    check_cond(model, cond);
    check_prefix(model, prefix);
    const std::size_t g = prefix.group_count();
    const std::size_t w = model.cfg.group_widths[g];
    const double log_floor = std::log(model.cfg.sigma_floor);

    Tape tape;
    BoundCvae bound = bind_model(tape, model);
    Value e = nn::affine(tape.leaf(row_matrix(cond)), bound.cond);

    std::vector<Value> prior_in{e};
    for (const auto& zg : prefix.groups) prior_in.push_back(tape.leaf(row_matrix(zg)));
    Value ph = nn::activate(nn::affine(concat_or_single(prior_in), bound.groups[g].prior_hidden), model.cfg.activation);
    GaussParamsGraph prior = gauss_head(nn::affine(ph, bound.groups[g].prior_out), w, log_floor);

    InferenceHeads out;
    out.prior = {prior.mu.value().data, prior.sigma.value().data};

    if (x != nullptr) {
        if (x->size() != model.cfg.image_size())
            throw std::invalid_argument("cvae: image with " + std::to_string(x->size()) + " pixels, model expects " +
                                        std::to_string(model.cfg.image_size()));
        Tensor xt({1, x->size()});
        xt.data = x->pixels;
        std::vector<Value> delta_in{e, tape.leaf(std::move(xt))};
        for (const auto& zg : prefix.groups) delta_in.push_back(tape.leaf(row_matrix(zg)));
        Value dh =
            nn::activate(nn::affine(concat_or_single(delta_in), bound.groups[g].delta_hidden), model.cfg.activation);
        Value dout = nn::affine(dh, bound.groups[g].delta_out);

        out.posterior.mu.resize(w);
        out.posterior.sigma.resize(w);
        for (std::size_t j = 0; j < w; ++j) {
            const double dmu = dout.value().data[j];
            const double log_dsig = std::max(dout.value().data[w + j], log_floor);
            out.posterior.mu[j] = out.prior.mu[j] + dmu;
            out.posterior.sigma[j] = out.prior.sigma[j] * std::exp(log_dsig);
        }
    }
    return out;
}

}  // namespace

GroupGaussians prior_params(const CvaeModel& model, const std::vector<double>& cond, const LatentGroups& prefix) {
    return eval_heads(model, cond, prefix, nullptr).prior;
}

GroupGaussians posterior_params(const CvaeModel& model, const ImageTensor& x, const std::vector<double>& cond,
                                const LatentGroups& prefix) {
    return eval_heads(model, cond, prefix, &x).posterior;
}

double kl_diag_gaussians(const GroupGaussians& q, const GroupGaussians& p) {
    if (q.mu.size() != q.sigma.size() || p.mu.size() != p.sigma.size() || q.mu.size() != p.mu.size())
        throw std::invalid_argument("cvae: KL of mismatched Gaussian parameter lengths");
    double total = 0.0;
    for (std::size_t j = 0; j < q.mu.size(); ++j) {
        if (!(q.sigma[j] > 0.0) || !(p.sigma[j] > 0.0))
            throw std::invalid_argument("cvae: KL with nonpositive sigma");
        const double dm = q.mu[j] - p.mu[j];
        total += std::log(p.sigma[j] / q.sigma[j]) +
                 (q.sigma[j] * q.sigma[j] + dm * dm) / (2.0 * p.sigma[j] * p.sigma[j]) - 0.5;
    }
    return total;
}

LatentGroups cvae_encode(const CvaeModel& model, const ImageTensor& x, const std::vector<double>& cond,
                         std::uint64_t noise_seed) {
    Rng rng(noise_seed);
    LatentGroups z;
    for (std::size_t g = 0; g < model.cfg.group_widths.size(); ++g) {
        const GroupGaussians q = posterior_params(model, x, cond, z);
        Rng group_rng = rng.derive(g);
        std::vector<double> sample(q.mu.size());
        for (std::size_t j = 0; j < sample.size(); ++j) sample[j] = q.mu[j] + q.sigma[j] * group_rng.gaussian();
        z.groups.push_back(std::move(sample));
    }
    return z;
}

LatentGroups prior_sample(const CvaeModel& model, const std::vector<double>& cond, std::uint64_t seed) {
    Rng rng(seed);
    LatentGroups z;
    for (std::size_t g = 0; g < model.cfg.group_widths.size(); ++g) {
        const GroupGaussians p = prior_params(model, cond, z);
        Rng group_rng = rng.derive(g);
        std::vector<double> sample(p.mu.size());
        for (std::size_t j = 0; j < sample.size(); ++j) sample[j] = p.mu[j] + p.sigma[j] * group_rng.gaussian();
        z.groups.push_back(std::move(sample));
    }
    return z;
}

ImageTensor cvae_decode(const CvaeModel& model, const LatentGroups& z, const std::vector<double>& cond) {
    check_cond(model, cond);
    if (z.group_count() != model.cfg.group_widths.size())
        throw std::invalid_argument("cvae: decode with " + std::to_string(z.group_count()) + " groups, model has " +
                                    std::to_string(model.cfg.group_widths.size()));
    for (std::size_t g = 0; g < z.group_count(); ++g)
        if (z.groups[g].size() != model.cfg.group_widths[g])
            throw std::invalid_argument("cvae: decode group " + std::to_string(g) + " has width " +
                                        std::to_string(z.groups[g].size()) + ", expected " +
                                        std::to_string(model.cfg.group_widths[g]));

    Tape tape;
    BoundCvae bound = bind_model(tape, model);
    Value e = nn::affine(tape.leaf(row_matrix(cond)), bound.cond);
    Value zl = tape.leaf(row_matrix(z.flatten()));
    Value h = nn::activate(nn::affine(autodiff::concat_cols({e, zl}), bound.dec_hidden), model.cfg.activation);
    Value pixels = autodiff::sigmoid(nn::affine(h, bound.dec_out));

    ImageTensor img(model.cfg.width, model.cfg.height, model.cfg.channels);
    img.pixels = pixels.value().data;
    return img;
}

CvaeNoise CvaeNoise::draw(Rng& rng, std::size_t batch, const CvaeConfig& cfg, const ChannelConfig& channel,
                          double snr_db_override) {
    CvaeNoise noise;
    for (std::size_t g = 0; g < cfg.group_widths.size(); ++g) {
        Rng gr = rng.derive(100 + g);
        Tensor eps({batch, cfg.group_widths[g]});
        eps.data = gr.gaussian_vector(eps.size());
        noise.group_eps.push_back(std::move(eps));
    }
    noise.channel_enabled = !channel.noise_disabled();
    if (noise.channel_enabled) {
        noise.channel_fixed_sigma = channel.power_mode == ChannelConfig::PowerMode::FixedSigma;
        noise.fixed_sigma = channel.fixed_sigma;
        noise.snr_db = snr_db_override;
        Rng cr = rng.derive(999);
        Tensor eps({batch, cfg.latent_size()});
        eps.data = cr.gaussian_vector(eps.size());
        noise.channel_eps = std::move(eps);
    }
    return noise;
}

double cvae_loss_eval(const CvaeModel& model, const Tensor& x_batch, const Tensor& k_batch, const CvaeNoise& noise,
                      double kl_weight) {
    Tape tape;
    return build_loss_graph(tape, model, x_batch, k_batch, noise, kl_weight).loss.value().data[0];
}

std::vector<Tensor> cvae_loss_grads(const CvaeModel& model, const Tensor& x_batch, const Tensor& k_batch,
                                    const CvaeNoise& noise, double kl_weight, double* loss_out) {
    Tape tape;
    LossGraph graph = build_loss_graph(tape, model, x_batch, k_batch, noise, kl_weight);
    if (loss_out) *loss_out = graph.loss.value().data[0];
    tape.backward(graph.loss);
    std::vector<Tensor> grads;
    grads.reserve(graph.leaves.size());
    for (const Value& v : graph.leaves) grads.push_back(v.grad());
    return grads;
}

double loss_l2(const CvaeModel& model, const ImageTensor& x, const std::vector<double>& cond,
               const ChannelConfig& channel, double kl_weight, std::uint64_t seed) {
    check_cond(model, cond);
    if (x.size() != model.cfg.image_size())
        throw std::invalid_argument("cvae: image with " + std::to_string(x.size()) + " pixels, model expects " +
                                    std::to_string(model.cfg.image_size()));
    Tensor xb({1, x.size()});
    xb.data = x.pixels;
    Rng rng(seed);
    const CvaeNoise noise = CvaeNoise::draw(rng, 1, model.cfg, channel, channel.snr_db);
    const double value = cvae_loss_eval(model, xb, row_matrix(cond), noise, kl_weight);
    if (!std::isfinite(value)) throw std::runtime_error("cvae: non-finite loss value");
    return value;
}

CvaeTrainTrace train_cvae(CvaeModel& model, const SampleSet& train, const AttributeMatrix& skb,
                          const CvaeTrainConfig& cfg, std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("cvae: empty training set");
    if (cfg.batch_size == 0) throw std::invalid_argument("cvae: zero batch size");
    if (cfg.train_snr_min_db > cfg.train_snr_max_db)
        throw std::invalid_argument("cvae: training SNR range is inverted");
    if (skb.attribute_count() != model.cfg.attribute_count)
        throw std::invalid_argument("cvae: SKB attribute count " + std::to_string(skb.attribute_count()) +
                                    " does not match model " + std::to_string(model.cfg.attribute_count));
    for (const auto& s : train)
        if (s.class_index >= skb.class_count())
            throw std::invalid_argument("cvae: training label out of range for the SKB");

    model.init(seed);
    Adam adam({cfg.learning_rate});
    Rng root(seed);
    Rng shuffle_rng = root.derive(1);

    const bool snr_range_disabled = std::isinf(cfg.train_snr_min_db) && std::isinf(cfg.train_snr_max_db);
    const std::size_t image_size = model.cfg.image_size();
    const std::size_t d = model.cfg.attribute_count;

    CvaeTrainTrace trace;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        const double kl_weight =
            cfg.kl_warmup_epochs == 0
                ? cfg.kl_weight
                : cfg.kl_weight * std::min(1.0, static_cast<double>(epoch) / static_cast<double>(cfg.kl_warmup_epochs));
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const std::size_t n = end - start;

            Tensor xb({n, image_size});
            Tensor kb({n, d});
            for (std::size_t i = 0; i < n; ++i) {
                const LabeledSample& s = train[order[start + i]];
                if (s.image.size() != image_size)
                    throw std::invalid_argument("cvae: training image size mismatch");
                for (std::size_t j = 0; j < image_size; ++j) xb.data[i * image_size + j] = s.image.pixels[j];
                if (cfg.conditional) {
                    const auto& row = skb.row(s.class_index);
                    for (std::size_t j = 0; j < d; ++j) kb.data[i * d + j] = row[j];
                }
            }

            Rng batch_rng = root.derive(2 + epoch, batches);
            ChannelConfig channel;
            double snr = 0.0;
            if (snr_range_disabled) {
                channel = ChannelConfig::noiseless();
            } else {
                snr = cfg.train_snr_min_db == cfg.train_snr_max_db
                          ? cfg.train_snr_min_db
                          : batch_rng.uniform(cfg.train_snr_min_db, cfg.train_snr_max_db);
                channel.snr_db = snr;
            }
            Rng noise_rng = batch_rng.derive(7);
            const CvaeNoise noise = CvaeNoise::draw(noise_rng, n, model.cfg, channel, snr);

            Tape tape;
            LossGraph graph = build_loss_graph(tape, model, xb, kb, noise, kl_weight);
            const double loss_value = graph.loss.value().data[0];
            if (!std::isfinite(loss_value))
                throw std::runtime_error("cvae: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
            tape.backward(graph.loss);

            auto params = model.named_tensors();
            std::vector<const Tensor*> grads;
            grads.reserve(graph.leaves.size());
            for (const Value& v : graph.leaves) grads.push_back(&v.grad());
            adam.step(params, grads);

            epoch_loss += loss_value;
            ++batches;
        }
        trace.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(batches));
    }
    return trace;
}

}  // namespace skbsem

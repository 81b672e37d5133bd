#include "skbsem/config.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace skbsem {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw std::runtime_error("config: " + what); }

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) config_error("unknown key '" + it.key() + "' in section '" + section + "'");
    }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) obj.at(key).get_to(out);
}

// snr_db accepts a number or the strings "inf" / "off" for a noiseless link.
void get_snr(const json& obj, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "off") {
            out = std::numeric_limits<double>::infinity();
            return;
        }
        config_error(std::string("bad value for ") + key + ": '" + s + "'");
    }
    v.get_to(out);
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) config_error("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        config_error(path + ": " + e.what());
    }

    RunConfig cfg;
    check_keys(j, "<root>", {"paths", "glyphs", "encoder", "cvae", "channel", "rate", "run", "sweep", "ablate"});

    if (j.contains("paths")) {
        const json& p = j["paths"];
        check_keys(p, "paths", {"data_dir", "model_dir", "results_dir"});
        get_to(p, "data_dir", cfg.paths.data_dir);
        get_to(p, "model_dir", cfg.paths.model_dir);
        get_to(p, "results_dir", cfg.paths.results_dir);
    }

    if (j.contains("glyphs")) {
        const json& g = j["glyphs"];
        check_keys(g, "glyphs", {"classes", "attributes", "width", "height", "channels", "train_per_class",
                                 "test_per_class", "seed", "jitter", "pixel_noise"});
        get_to(g, "classes", cfg.glyphs.classes);
        get_to(g, "attributes", cfg.glyphs.attributes);
        get_to(g, "width", cfg.glyphs.width);
        get_to(g, "height", cfg.glyphs.height);
        get_to(g, "channels", cfg.glyphs.channels);
        get_to(g, "train_per_class", cfg.glyphs.train_per_class);
        get_to(g, "test_per_class", cfg.glyphs.test_per_class);
        get_to(g, "seed", cfg.glyphs.seed);
        get_to(g, "jitter", cfg.glyphs.jitter);
        get_to(g, "pixel_noise", cfg.glyphs.pixel_noise);
    }

    if (j.contains("encoder")) {
        const json& e = j["encoder"];
        check_keys(e, "encoder", {"hidden", "activation", "epochs", "batch_size", "learning_rate", "mse_weight",
                                  "ce_weight", "loss_mode", "seed"});
        get_to(e, "hidden", cfg.encoder.hidden);
        get_to(e, "activation", cfg.encoder.activation);
        get_to(e, "epochs", cfg.encoder.train.epochs);
        get_to(e, "batch_size", cfg.encoder.train.batch_size);
        get_to(e, "learning_rate", cfg.encoder.train.learning_rate);
        get_to(e, "mse_weight", cfg.encoder.train.weights.mse_weight);
        get_to(e, "ce_weight", cfg.encoder.train.weights.ce_weight);
        if (e.contains("loss_mode")) {
            const std::string mode = e["loss_mode"].get<std::string>();
            if (mode == "standard")
                cfg.encoder.train.loss_mode = EncoderLossMode::Standard;
            else if (mode == "paper-literal")
                cfg.encoder.train.loss_mode = EncoderLossMode::PaperLiteral;
            else
                config_error("encoder.loss_mode must be 'standard' or 'paper-literal'");
        }
        get_to(e, "seed", cfg.encoder.seed);
    }

    if (j.contains("cvae")) {
        const json& c = j["cvae"];
        check_keys(c, "cvae",
                   {"group_widths", "cond_embed", "hidden", "decoder_hidden", "activation", "likelihood",
                    "gaussian_sigma", "sigma_floor", "epochs", "batch_size", "learning_rate", "kl_weight",
                    "train_snr_min_db", "train_snr_max_db", "conditional", "seed"});
        get_to(c, "group_widths", cfg.cvae.group_widths);
        get_to(c, "cond_embed", cfg.cvae.cond_embed);
        get_to(c, "hidden", cfg.cvae.hidden);
        get_to(c, "decoder_hidden", cfg.cvae.decoder_hidden);
        get_to(c, "activation", cfg.cvae.activation);
        get_to(c, "likelihood", cfg.cvae.likelihood);
        get_to(c, "gaussian_sigma", cfg.cvae.gaussian_sigma);
        get_to(c, "sigma_floor", cfg.cvae.sigma_floor);
        get_to(c, "epochs", cfg.cvae.train.epochs);
        get_to(c, "batch_size", cfg.cvae.train.batch_size);
        get_to(c, "learning_rate", cfg.cvae.train.learning_rate);
        get_to(c, "kl_weight", cfg.cvae.train.kl_weight);
        get_snr(c, "train_snr_min_db", cfg.cvae.train.train_snr_min_db);
        get_snr(c, "train_snr_max_db", cfg.cvae.train.train_snr_max_db);
        get_to(c, "conditional", cfg.cvae.train.conditional);
        get_to(c, "seed", cfg.cvae.seed);
    }

    if (j.contains("channel")) {
        const json& c = j["channel"];
        check_keys(c, "channel", {"snr_db", "power_mode", "fixed_sigma", "seed"});
        get_snr(c, "snr_db", cfg.channel.snr_db);
        if (c.contains("power_mode")) {
            const std::string mode = c["power_mode"].get<std::string>();
            if (mode == "empirical")
                cfg.channel.power_mode = ChannelConfig::PowerMode::Empirical;
            else if (mode == "fixed_sigma")
                cfg.channel.power_mode = ChannelConfig::PowerMode::FixedSigma;
            else
                config_error("channel.power_mode must be 'empirical' or 'fixed_sigma'");
        }
        get_to(c, "fixed_sigma", cfg.channel.fixed_sigma);
        get_to(c, "seed", cfg.channel.seed);
    }

    if (j.contains("rate")) {
        const json& r = j["rate"];
        check_keys(r, "rate", {"test_cr"});
        get_to(r, "test_cr", cfg.rate.test_cr);
    }

    if (j.contains("run")) {
        const json& r = j["run"];
        check_keys(r, "run", {"seed", "dump_images"});
        get_to(r, "seed", cfg.run.seed);
        get_to(r, "dump_images", cfg.run.dump_images);
    }

    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, "sweep", {"snr_db", "test_cr", "seeds", "include_baseline"});
        get_to(s, "snr_db", cfg.sweep_grid.snr_db);
        get_to(s, "test_cr", cfg.sweep_grid.test_cr);
        get_to(s, "seeds", cfg.sweep_grid.seeds);
        get_to(s, "include_baseline", cfg.sweep_grid.include_baseline);
    }

    if (j.contains("ablate")) {
        const json& a = j["ablate"];
        check_keys(a, "ablate", {"attribute_counts", "seeds", "classes", "train_per_class", "test_per_class",
                                 "hidden", "epochs"});
        get_to(a, "attribute_counts", cfg.ablate.attribute_counts);
        get_to(a, "seeds", cfg.ablate.seeds);
        get_to(a, "classes", cfg.ablate.classes);
        get_to(a, "train_per_class", cfg.ablate.train_per_class);
        get_to(a, "test_per_class", cfg.ablate.test_per_class);
        get_to(a, "hidden", cfg.ablate.hidden);
        get_to(a, "epochs", cfg.ablate.epochs);
    }

    return cfg;
}

EncoderConfig make_encoder_config(const RunConfig& cfg, const GlyphDataset& data) {
    EncoderConfig out;
    out.input_size = data.train.empty() ? data.test[0].image.size() : data.train[0].image.size();
    out.attribute_count = data.skb.attribute_count();
    out.hidden = cfg.encoder.hidden;
    out.activation = nn::activation_from_string(cfg.encoder.activation);
    return out;
}

CvaeConfig make_cvae_config(const RunConfig& cfg, const GlyphDataset& data) {
    CvaeConfig out;
    out.width = cfg.glyphs.width;
    out.height = cfg.glyphs.height;
    out.channels = cfg.glyphs.channels;
    const std::size_t actual = data.train.empty() ? data.test[0].image.size() : data.train[0].image.size();
    if (actual != out.image_size())
        throw std::runtime_error("config: dataset images have " + std::to_string(actual) +
                                 " pixels but glyphs config says " + std::to_string(out.image_size()));
    out.attribute_count = data.skb.attribute_count();
    out.group_widths = cfg.cvae.group_widths;
    out.cond_embed = cfg.cvae.cond_embed;
    out.hidden = cfg.cvae.hidden;
    out.decoder_hidden = cfg.cvae.decoder_hidden;
    out.activation = nn::activation_from_string(cfg.cvae.activation);
    out.sigma_floor = cfg.cvae.sigma_floor;
    if (cfg.cvae.likelihood == "bernoulli")
        out.likelihood = CvaeConfig::Likelihood::Bernoulli;
    else if (cfg.cvae.likelihood == "gaussian")
        out.likelihood = CvaeConfig::Likelihood::Gaussian;
    else
        throw std::runtime_error("config: cvae.likelihood must be 'bernoulli' or 'gaussian'");
    out.gaussian_sigma = cfg.cvae.gaussian_sigma;
    return out;
}

RateConfig make_rate_config(const RunConfig& cfg, const GlyphDataset& data) {
    RateConfig out;
    out.test_cr = cfg.rate.test_cr;
    out.index_symbols = 1;
    std::size_t latent = 0;
    for (std::size_t w : cfg.cvae.group_widths) latent += w;
    out.latent_symbols = latent;
    out.width = cfg.glyphs.width;
    out.height = cfg.glyphs.height;
    out.channels = cfg.glyphs.channels;
    (void)data;
    return out;
}

}  // namespace skbsem

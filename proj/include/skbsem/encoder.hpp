#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skbsem/dataset.hpp"
#include "skbsem/image.hpp"
#include "skbsem/nn.hpp"
#include "skbsem/skb.hpp"

namespace skbsem {

// Which form the similarity term of the encoder loss takes. Standard is the
// negative log-softmax of <s_i, k_m> over all SKB classes. PaperLiteral is
// the positively signed log with the batch's own correct-class products in
// the denominator; it is kept selectable for comparison runs but does not
// train anything useful by itself.
enum class EncoderLossMode { Standard, PaperLiteral };

struct EncoderLossWeights {
    double mse_weight = 1.0;  // on the mean squared feature-prototype error
    double ce_weight = 0.1;   // on the similarity term

    void validate() const;
};

struct EncoderConfig {
    std::size_t input_size = 256;  // W*H*C
    std::size_t attribute_count = 12;
    std::size_t hidden = 256;
    nn::Activation activation = nn::Activation::Relu;
};

// The semantic encoder: input -> hidden -> hidden -> attributes, sigmoid
// output so features always land strictly inside (0,1)^d.
struct EncoderModel {
    EncoderConfig cfg;
    nn::Dense layer1, layer2, layer3;

    explicit EncoderModel(const EncoderConfig& cfg);

    void init(std::uint64_t seed);
    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;

    void save(const std::string& path) const;
    void load(const std::string& path);
};

// Forward graph over a batch [n x input_size]; returns features [n x d].
autodiff::Value encoder_forward(autodiff::Tape& tape, const EncoderModel& model, autodiff::Value batch);

// Deterministic single-image forward pass.
std::vector<double> encode(const EncoderModel& model, const ImageTensor& image);

// Loss over a feature batch (no network involved): mse_weight * mean_i
// |s_i - k_{m_i}|^2 plus the similarity term per `mode`.
double loss_l1(const std::vector<std::vector<double>>& features, const std::vector<std::size_t>& classes,
               const AttributeMatrix& skb, const EncoderLossWeights& weights,
               EncoderLossMode mode = EncoderLossMode::Standard);

// Same loss as an autodiff graph node; `features` is a [n x d] value.
autodiff::Value loss_l1_graph(autodiff::Tape& tape, autodiff::Value features, const std::vector<std::size_t>& classes,
                              const AttributeMatrix& skb, const EncoderLossWeights& weights,
                              EncoderLossMode mode = EncoderLossMode::Standard);

struct EncoderTrainConfig {
    std::size_t epochs = 25;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    EncoderLossWeights weights;
    EncoderLossMode loss_mode = EncoderLossMode::Standard;
};

struct TrainTrace {
    std::vector<double> epoch_mean_loss;
};

// Minibatch Adam over the whole train set; deterministic given the seed.
// Aborts with a diagnostic naming epoch and batch if the loss goes
// non-finite.
TrainTrace train_semantic_encoder(EncoderModel& model, const SampleSet& train, const AttributeMatrix& skb,
                                  const EncoderTrainConfig& cfg, std::uint64_t seed);

}  // namespace skbsem

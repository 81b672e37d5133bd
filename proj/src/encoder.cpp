#include "skbsem/encoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "skbsem/optim.hpp"
#include "skbsem/snapshot.hpp"

namespace skbsem {

using autodiff::Tape;
using autodiff::Value;

void EncoderLossWeights::validate() const {
    if (mse_weight < 0.0 || ce_weight < 0.0)
        throw std::invalid_argument("encoder: loss weights must be nonnegative");
}

EncoderModel::EncoderModel(const EncoderConfig& c)
    : cfg(c),
      layer1(c.input_size, c.hidden),
      layer2(c.hidden, c.hidden),
      layer3(c.hidden, c.attribute_count) {
    if (c.input_size == 0 || c.hidden == 0 || c.attribute_count == 0)
        throw std::invalid_argument("encoder: zero-sized layer in configuration");
}

void EncoderModel::init(std::uint64_t seed) {
    Rng rng(seed);
    Rng r1 = rng.derive(1), r2 = rng.derive(2), r3 = rng.derive(3);
    layer1.init_xavier(r1);
    layer2.init_xavier(r2);
    layer3.init_xavier(r3);
}

std::vector<std::pair<std::string, Tensor*>> EncoderModel::named_tensors() {
    return {{"enc/w1", &layer1.weight}, {"enc/b1", &layer1.bias},   {"enc/w2", &layer2.weight},
            {"enc/b2", &layer2.bias},   {"enc/w3", &layer3.weight}, {"enc/b3", &layer3.bias}};
}

std::vector<std::pair<std::string, const Tensor*>> EncoderModel::named_tensors() const {
    auto mut = const_cast<EncoderModel*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [n, t] : mut) out.emplace_back(n, t);
    return out;
}

void EncoderModel::save(const std::string& path) const { save_snapshot(path, named_tensors()); }

void EncoderModel::load(const std::string& path) {
    const NamedTensors snap = load_snapshot(path);
    for (auto& [name, t] : named_tensors()) *t = snapshot_get(snap, name, t->shape);
}

Value encoder_forward(Tape& tape, const EncoderModel& model, Value batch) {
    if (batch.value().rank() != 2 || batch.value().cols() != model.cfg.input_size)
        throw std::invalid_argument("encoder: batch shape " + batch.value().shape_str() + " does not match input size " +
                                    std::to_string(model.cfg.input_size));
    const auto l1 = nn::bind(tape, model.layer1);
    const auto l2 = nn::bind(tape, model.layer2);
    const auto l3 = nn::bind(tape, model.layer3);
    Value h = nn::activate(nn::affine(batch, l1), model.cfg.activation);
    h = nn::activate(nn::affine(h, l2), model.cfg.activation);
    return autodiff::sigmoid(nn::affine(h, l3));
}

namespace {

Tensor batch_tensor(const SampleSet& set, const std::vector<std::size_t>& indices, std::size_t input_size) {
    Tensor batch({indices.size(), input_size});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const ImageTensor& img = set[indices[i]].image;
        if (img.size() != input_size)
            throw std::invalid_argument("encoder: image with " + std::to_string(img.size()) +
                                        " pixels fed to an encoder expecting " + std::to_string(input_size));
        for (std::size_t j = 0; j < input_size; ++j) batch.data[i * input_size + j] = img.pixels[j];
    }
    return batch;
}

Tensor skb_transpose(const AttributeMatrix& skb) {
    Tensor t({skb.attribute_count(), skb.class_count()});
    for (std::size_t m = 0; m < skb.class_count(); ++m)
        for (std::size_t j = 0; j < skb.attribute_count(); ++j) t.data[j * skb.class_count() + m] = skb.row(m)[j];
    return t;
}

Tensor prototype_batch(const AttributeMatrix& skb, const std::vector<std::size_t>& classes) {
    Tensor t({classes.size(), skb.attribute_count()});
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& row = skb.row(classes[i]);
        for (std::size_t j = 0; j < row.size(); ++j) t.data[i * row.size() + j] = row[j];
    }
    return t;
}

}  // namespace

std::vector<double> encode(const EncoderModel& model, const ImageTensor& image) {
    Tape tape;
    Tensor in({1, model.cfg.input_size});
    if (image.size() != model.cfg.input_size)
        throw std::invalid_argument("encoder: image with " + std::to_string(image.size()) +
                                    " pixels fed to an encoder expecting " + std::to_string(model.cfg.input_size));
    in.data = image.pixels;
    const Value out = encoder_forward(tape, model, tape.leaf(std::move(in)));
    return out.value().data;
}

Value loss_l1_graph(Tape& tape, Value features, const std::vector<std::size_t>& classes, const AttributeMatrix& skb,
                    const EncoderLossWeights& weights, EncoderLossMode mode) {
    weights.validate();
    const Tensor& fv = features.value();
    if (fv.rank() != 2 || fv.cols() != skb.attribute_count())
        throw std::invalid_argument("encoder: feature batch " + fv.shape_str() + " does not match attribute count " +
                                    std::to_string(skb.attribute_count()));
    const std::size_t n = fv.rows();
    if (n == 0) throw std::invalid_argument("encoder: empty batch");
    if (classes.size() != n) throw std::invalid_argument("encoder: class list does not match batch size");
    for (std::size_t c : classes)
        if (c >= skb.class_count()) throw std::invalid_argument("encoder: class index out of range");

    const Value prototypes = tape.leaf(prototype_batch(skb, classes));
    const Value mse = autodiff::scale(autodiff::squared_error(features, prototypes),
                                      weights.mse_weight / static_cast<double>(n));

    Value similarity_term;
    if (mode == EncoderLossMode::Standard) {
        // -log softmax over all SKB classes of the inner products <s_i, k_m>.
        const Value logits = autodiff::matmul(features, tape.leaf(skb_transpose(skb)));
        similarity_term = autodiff::scale(autodiff::softmax_cross_entropy(logits, classes), weights.ce_weight);
    } else {
        // Literal printed form: +log of the batch-normalized correct-class
        // products, mean over the batch.
        const Value own = autodiff::row_sum(autodiff::mul(features, prototypes));  // <s_i, k_{m_i}>
        similarity_term =
            autodiff::scale(autodiff::sub(autodiff::mean(own), autodiff::logsumexp(own)), weights.ce_weight);
    }
    return autodiff::add(mse, similarity_term);
}

double loss_l1(const std::vector<std::vector<double>>& features, const std::vector<std::size_t>& classes,
               const AttributeMatrix& skb, const EncoderLossWeights& weights, EncoderLossMode mode) {
    if (features.empty()) throw std::invalid_argument("encoder: empty batch");
    Tape tape;
    Tensor f({features.size(), skb.attribute_count()});
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != skb.attribute_count())
            throw std::invalid_argument("encoder: feature length does not match attribute count");
        for (std::size_t j = 0; j < features[i].size(); ++j) f.data[i * skb.attribute_count() + j] = features[i][j];
    }
    return loss_l1_graph(tape, tape.leaf(std::move(f)), classes, skb, weights, mode).value().data[0];
}

TrainTrace train_semantic_encoder(EncoderModel& model, const SampleSet& train, const AttributeMatrix& skb,
                                  const EncoderTrainConfig& cfg, std::uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("encoder: empty training set");
    if (cfg.batch_size == 0) throw std::invalid_argument("encoder: zero batch size");
    cfg.weights.validate();

    model.init(seed);
    Adam adam({cfg.learning_rate});
    Rng shuffle_rng = Rng(seed).derive(0x5AFFEull);

    TrainTrace trace;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<std::size_t> classes(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) classes[i] = train[idx[i]].class_index;

            Tape tape;
            auto params = model.named_tensors();
            std::vector<Value> leaves;
            leaves.reserve(params.size());
            for (auto& [name, t] : params) leaves.push_back(tape.leaf(*t));
            // Rebind the forward pass to the leaf copies so gradients land
            // on this step's parameters.
            Value batch = tape.leaf(batch_tensor(train, idx, model.cfg.input_size));
            Value features = [&] {
                const auto l1 = nn::BoundDense{leaves[0], leaves[1]};
                const auto l2 = nn::BoundDense{leaves[2], leaves[3]};
                const auto l3 = nn::BoundDense{leaves[4], leaves[5]};
                Value h = nn::activate(nn::affine(batch, l1), model.cfg.activation);
                h = nn::activate(nn::affine(h, l2), model.cfg.activation);
                return autodiff::sigmoid(nn::affine(h, l3));
            }();
            Value loss = loss_l1_graph(tape, features, classes, skb, cfg.weights, cfg.loss_mode);
            const double loss_value = loss.value().data[0];
            if (!std::isfinite(loss_value))
                throw std::runtime_error("encoder: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
            tape.backward(loss);

            std::vector<const Tensor*> grads;
            grads.reserve(leaves.size());
            for (const Value& v : leaves) grads.push_back(&v.grad());
            adam.step(params, grads);

            epoch_loss += loss_value;
            ++batches;
        }
        trace.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(batches));
    }
    return trace;
}

}  // namespace skbsem

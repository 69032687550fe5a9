#include "geomae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "geomae/autodiff.hpp"
#include "geomae/errors.hpp"
#include "geomae/geometry.hpp"

namespace geomae {

std::size_t MLPParams::in_dim() const {
  if (layers.empty()) throw std::logic_error("empty network");
  return layers.front().weight.cols();
}

std::size_t MLPParams::out_dim() const {
  if (layers.empty()) throw std::logic_error("empty network");
  return layers.back().weight.rows();
}

std::vector<std::size_t> MLPParams::dims() const {
  std::vector<std::size_t> d{in_dim()};
  for (const Layer& layer : layers) d.push_back(layer.weight.rows());
  return d;
}

void MLPParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Layer& layer = layers[k];
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.size() != layer.weight.rows()) {
      throw ShapeError("layer " + std::to_string(k) + ": weight " + layer.weight.shape_string() +
                       " incompatible with bias " + layer.bias.shape_string());
    }
    if (k > 0 && layers[k - 1].weight.rows() != layer.weight.cols()) {
      throw ShapeError("layer " + std::to_string(k) + " input " +
                       std::to_string(layer.weight.cols()) + " does not chain with output " +
                       std::to_string(layers[k - 1].weight.rows()));
    }
  }
}

std::vector<Tensor*> MLPParams::parameters() {
  std::vector<Tensor*> out;
  for (Layer& layer : layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

void Autoencoder::validate() const {
  encoder.validate();
  decoder.validate();
  if (encoder.out_dim() != decoder.in_dim()) {
    throw ShapeError("encoder output " + std::to_string(encoder.out_dim()) +
                     " != decoder input " + std::to_string(decoder.in_dim()));
  }
  if (decoder.out_dim() != encoder.in_dim()) {
    throw ShapeError("decoder output does not match encoder input");
  }
}

std::vector<Tensor*> Autoencoder::parameters() {
  auto out = encoder.parameters();
  auto dec = decoder.parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

MLPParams init_mlp(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("init_mlp needs at least two dimensions");
  if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end()) {
    throw std::invalid_argument("init_mlp: zero-sized layer");
  }
  std::mt19937_64 rng(seed);
  MLPParams net;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t in = dims[k];
    const std::size_t out = dims[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer{Tensor({out, in}), Tensor({out})};
    for (double& w : layer.weight.data()) w = dist(rng);
    for (double& b : layer.bias.data()) b = dist(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Autoencoder init_autoencoder(std::size_t input_dim, std::size_t latent_dim, std::size_t width,
                             std::size_t depth, std::uint64_t seed) {
  std::vector<std::size_t> enc{input_dim};
  for (std::size_t i = 0; i < depth; ++i) enc.push_back(width);
  enc.push_back(latent_dim);
  std::vector<std::size_t> dec(enc.rbegin(), enc.rend());
  // Distinct streams for the two halves.
  return {init_mlp(enc, seed), init_mlp(dec, seed ^ 0x9E3779B97F4A7C15ULL)};
}

BoundMLP bind_parameters(Tape& tape, MLPParams& params) {
  params.validate();
  BoundMLP net;
  for (Layer& layer : params.layers) {
    net.weights.push_back(tape.parameter(layer.weight));
    net.biases.push_back(tape.parameter(layer.bias));
  }
  return net;
}

BoundMLP bind_constants(Tape& tape, const MLPParams& params) {
  params.validate();
  BoundMLP net;
  for (const Layer& layer : params.layers) {
    net.weights.push_back(tape.constant(layer.weight));
    net.biases.push_back(tape.constant(layer.bias));
  }
  return net;
}

ForwardTrace forward_trace(const BoundMLP& net, Var x) {
  const std::size_t depth = net.weights.size();
  if (x.value().cols() != net.weights.front().value().cols()) {
    throw ShapeError("forward: input has " + std::to_string(x.value().cols()) +
                     " columns, network expects " +
                     std::to_string(net.weights.front().value().cols()));
  }
  ForwardTrace trace;
  Var h = x;
  for (std::size_t k = 0; k < depth; ++k) {
    Var a = ad::add_bias(ad::matmul(h, ad::transpose(net.weights[k])), net.biases[k]);
    if (k + 1 < depth) {
      trace.preactivations.push_back(a);
      h = ad::elu(a);
    } else {
      h = a;
    }
  }
  trace.output = h;
  return trace;
}

Var forward(const BoundMLP& net, Var x) { return forward_trace(net, x).output; }

Matrix forward(const MLPParams& net, const Matrix& x) {
  net.validate();
  if (static_cast<std::size_t>(x.cols()) != net.in_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                     std::to_string(net.in_dim()));
  }
  Matrix h = x;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    const Matrix w = layer.weight.to_matrix();
    const Eigen::Map<const Eigen::RowVectorXd> b(layer.bias.data().data(),
                                                 static_cast<Eigen::Index>(layer.bias.size()));
    Matrix a = h * w.transpose();
    a.rowwise() += b;
    if (k + 1 < net.layers.size()) {
      a = a.unaryExpr([](double v) { return v >= 0.0 ? v : std::expm1(v); });
    }
    h = std::move(a);
  }
  return h;
}

Var reconstruction_loss(Var x, Var x_hat) { return ad::mean(ad::square(ad::sub(x, x_hat))); }

void adam_step(std::span<Tensor* const> params, AdamState& state, double learning_rate,
               double weight_decay) {
  for (Tensor* p : params) {
    if (!p->has_grad()) throw std::logic_error("adam_step called before backward");
  }
  if (state.first_moment.empty()) {
    for (Tensor* p : params) {
      state.first_moment.emplace_back(p->size(), 0.0);
      state.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::logic_error("adam state tracks a different parameter set");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.size()) throw std::logic_error("adam moment shape mismatch");
    const auto g = p.grad();
    auto w = p.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + weight_decay * w[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      w[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    p.clear_grad();
  }
}

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::none:
      return "none";
    case Regularizer::geometric:
      return "geometric";
    case Regularizer::lee:
      return "lee";
  }
  return "unknown";
}

Regularizer parse_regularizer(const std::string& name) {
  if (name == "none" || name == "vanilla") return Regularizer::none;
  if (name == "geometric") return Regularizer::geometric;
  if (name == "lee") return Regularizer::lee;
  throw std::invalid_argument("unknown regularizer '" + name + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
  if (det_floor && !(*det_floor > 0.0)) throw std::invalid_argument("det floor must be > 0");
}

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,rec_loss,reg_loss\n";
  for (const EpochRecord& r : epochs) {
    os << r.epoch << ',' << r.reconstruction << ',' << r.regularizer << '\n';
  }
  return os.str();
}

namespace {

Matrix gather_rows(const Matrix& data, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), data.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

double logged_regularizer(Regularizer kind, const MLPParams& decoder, const Matrix& z) {
  if (kind == Regularizer::lee) return lee_loss_value(decoder, z);
  return geometric_loss_value(decoder, z);
}

}  // namespace

TrainingLog train(Autoencoder& model, const Matrix& data, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (data.rows() == 0) throw std::invalid_argument("train: empty dataset");
  if (static_cast<std::size_t>(data.cols()) != model.encoder.in_dim()) {
    throw ShapeError("train: data has " + std::to_string(data.cols()) +
                     " features, encoder expects " + std::to_string(model.encoder.in_dim()));
  }

  const auto m = static_cast<std::size_t>(data.rows());
  const bool regularize = config.regularizer != Regularizer::none && config.alpha > 0.0;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(m);
  AdamState adam;
  auto params = model.parameters();
  TrainingLog log;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double rec_total = 0.0;
    double reg_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < m; start += config.batch_size) {
      const std::size_t stop = std::min(m, start + config.batch_size);
      const Matrix batch = gather_rows(data, std::span(order).subspan(start, stop - start));
      try {
        Tape tape;
        const BoundMLP enc = bind_parameters(tape, model.encoder);
        const BoundMLP dec = bind_parameters(tape, model.decoder);
        const Var x = tape.constant(Tensor::from_matrix(batch));
        const Var z = forward(enc, x);
        const Var rec = reconstruction_loss(x, forward(dec, z));
        Var loss = rec;
        double reg_value = 0.0;
        if (regularize) {
          const Var reg = config.regularizer == Regularizer::lee
                              ? lee_loss(dec, z, config.det_floor)
                              : geometric_loss(dec, z, config.det_floor);
          reg_value = reg.value().item();
          loss = ad::add(rec, ad::scale(reg, config.alpha));
        } else {
          reg_value = logged_regularizer(config.regularizer, model.decoder, z.value().to_matrix());
        }
        tape.backward(loss);
        adam_step(params, adam, config.learning_rate, config.weight_decay);
        rec_total += rec.value().item();
        reg_total += reg_value;
      } catch (const NumericError& e) {
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + ": " + e.what());
      }
      ++batches;
    }
    const auto nb = static_cast<double>(batches);
    log.epochs.push_back({epoch, rec_total / nb, reg_total / nb});
  }
  return log;
}

}  // namespace geomae

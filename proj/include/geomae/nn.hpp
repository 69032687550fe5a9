#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomae/tape.hpp"
#include "geomae/tensor.hpp"

namespace geomae {

struct Layer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
};

// Fully connected network; ELU after every layer except the last.
struct MLPParams {
  std::vector<Layer> layers;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::vector<std::size_t> dims() const;
  // Throws ShapeError if consecutive layers do not chain.
  void validate() const;
  std::vector<Tensor*> parameters();
};

struct Autoencoder {
  MLPParams encoder;
  MLPParams decoder;

  std::size_t latent_dim() const { return encoder.out_dim(); }
  void validate() const;
  std::vector<Tensor*> parameters();
};

// Weights and biases ~ Uniform(-1/sqrt(in), 1/sqrt(in)) per layer.
MLPParams init_mlp(std::span<const std::size_t> dims, std::uint64_t seed);

// Encoder n-h-...-h-l and the mirrored decoder, `depth` hidden layers each.
Autoencoder init_autoencoder(std::size_t input_dim, std::size_t latent_dim, std::size_t width,
                             std::size_t depth, std::uint64_t seed);

// Network parameters placed on a tape, as leaves or as constants.
struct BoundMLP {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

BoundMLP bind_parameters(Tape& tape, MLPParams& params);
BoundMLP bind_constants(Tape& tape, const MLPParams& params);

struct ForwardTrace {
  Var output;
  std::vector<Var> preactivations;  // one per hidden layer
};

Var forward(const BoundMLP& net, Var x);
ForwardTrace forward_trace(const BoundMLP& net, Var x);
// Tape-free evaluation on a batch of row vectors.
Matrix forward(const MLPParams& net, const Matrix& x);

// Mean squared error over all entries.
Var reconstruction_loss(Var x, Var x_hat);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One Adam update with coupled (L2) weight decay: grad + weight_decay * w
// feeds the moments. Consumes and clears every parameter's gradient; throws
// std::logic_error if some parameter has none.
void adam_step(std::span<Tensor* const> params, AdamState& state, double learning_rate,
               double weight_decay);

enum class Regularizer { none, geometric, lee };

std::string to_string(Regularizer r);
Regularizer parse_regularizer(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 125;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  Regularizer regularizer = Regularizer::geometric;
  // When set, determinants/eigenvalues below the floor are clamped to it
  // instead of aborting the run.
  std::optional<double> det_floor;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  double reconstruction;
  double regularizer;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Minibatch training of L_rec + alpha * L_reg. Each epoch draws a seeded
// permutation and walks it in consecutive batches (the last one may be
// short). The logged regularizer is the batch mean of the selected loss
// (L_det for `none`), evaluated even when alpha == 0; with alpha == 0 it
// never enters the gradient.
TrainingLog train(Autoencoder& model, const Matrix& data, const TrainConfig& config);

// Binary model container "GAE1", all little-endian:
//   magic "GAE1" | u32 network count | per network: u32 layer count |
//   per layer: u32 out, u32 in, out*in f64 weights (row-major), out f64 biases
std::vector<std::uint8_t> encode_model(const Autoencoder& model);
Autoencoder decode_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const Autoencoder& model);
Autoencoder load_model(const std::filesystem::path& path);

}  // namespace geomae

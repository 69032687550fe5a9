#include <doctest.h>

#include <cmath>
#include <random>

#include "geomae/autodiff.hpp"
#include "geomae/datasets.hpp"
#include "geomae/errors.hpp"
#include "geomae/geometry.hpp"
#include "geomae/nn.hpp"

using namespace geomae;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

bool same_params(Autoencoder a, Autoencoder b) {
  auto pa = a.parameters();
  auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    auto da = pa[i]->data();
    auto db = pb[i]->data();
    if (!std::equal(da.begin(), da.end(), db.begin(), db.end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init_autoencoder builds mirrored networks") {
  const Autoencoder ae = init_autoencoder(5, 2, 16, 4, 1);
  CHECK(ae.encoder.dims() == std::vector<std::size_t>{5, 16, 16, 16, 16, 2});
  CHECK(ae.decoder.dims() == std::vector<std::size_t>{2, 16, 16, 16, 16, 5});
  CHECK(ae.latent_dim() == 2);
  ae.validate();
  const double bound = 1.0 / std::sqrt(5.0);
  for (double w : ae.encoder.layers[0].weight.data()) CHECK(std::abs(w) <= bound);
}

TEST_CASE("init is seeded") {
  CHECK(same_params(init_autoencoder(3, 2, 8, 2, 9), init_autoencoder(3, 2, 8, 2, 9)));
  CHECK_FALSE(same_params(init_autoencoder(3, 2, 8, 2, 9), init_autoencoder(3, 2, 8, 2, 10)));
}

TEST_CASE("tape forward matches tape-free forward") {
  Autoencoder ae = init_autoencoder(3, 2, 6, 2, 4);
  const Matrix x = random_matrix(7, 3, 5);
  Tape tape;
  const BoundMLP enc = bind_constants(tape, ae.encoder);
  const Matrix on_tape = forward(enc, tape.constant(Tensor::from_matrix(x))).value().to_matrix();
  const Matrix direct = forward(ae.encoder, x);
  CHECK((on_tape - direct).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(forward(ae.encoder, random_matrix(2, 4, 1)), ShapeError);
}

TEST_CASE("reconstruction loss is the mean squared error") {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = tape.constant(Tensor::matrix(2, 2, {1, 0, 3, 0}));
  CHECK(reconstruction_loss(a, b).value().item() == doctest::Approx(5.0));
}

TEST_CASE("adam minimizes a quadratic") {
  Tensor w = Tensor::vector({3.0, -2.0});
  AdamState state;
  std::vector<Tensor*> params{&w};
  for (int i = 0; i < 2000; ++i) {
    Tape tape;
    tape.backward(ad::sum(ad::square(tape.parameter(w))));
    adam_step(params, state, 1e-2, 0.0);
  }
  CHECK(std::abs(w[0]) < 1e-3);
  CHECK(std::abs(w[1]) < 1e-3);
  CHECK_FALSE(w.has_grad());
}

TEST_CASE("adam_step without gradients is a logic error") {
  Tensor w = Tensor::vector({1.0});
  AdamState state;
  std::vector<Tensor*> params{&w};
  CHECK_THROWS_AS(adam_step(params, state, 1e-3, 0.0), std::logic_error);
}

TEST_CASE("first Adam step moves every weight by about the learning rate") {
  Tensor w = Tensor::vector({1.0, -5.0});
  AdamState state;
  std::vector<Tensor*> params{&w};
  Tape tape;
  tape.backward(ad::sum(ad::square(tape.parameter(w))));
  adam_step(params, state, 0.1, 0.0);
  CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(-4.9).epsilon(1e-6));
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.validate();
  c.alpha = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_regularizer("ridge"), std::invalid_argument);
  CHECK(parse_regularizer("vanilla") == Regularizer::none);
  CHECK(parse_regularizer("geometric") == Regularizer::geometric);
  CHECK(parse_regularizer("lee") == Regularizer::lee);
}

TEST_CASE("training lowers the reconstruction loss on a toy manifold") {
  const EmbeddingFrame f = standardize(toy_manifold(ToyKind::swiss_roll, 500, 3));
  Autoencoder ae = init_autoencoder(3, 2, 32, 2, 3);
  TrainConfig c;
  c.epochs = 15;
  c.regularizer = Regularizer::none;
  const TrainingLog log = train(ae, f.x, c);
  REQUIRE(log.epochs.size() == 15);
  CHECK(log.epochs.back().reconstruction < log.epochs.front().reconstruction);
  const std::string csv = log.to_csv();
  CHECK(csv.rfind("epoch,rec_loss,reg_loss\n", 0) == 0);
}

TEST_CASE("geometric with alpha 0 is identical to vanilla") {
  const EmbeddingFrame f = standardize(toy_manifold(ToyKind::hemisphere, 300, 8));
  Autoencoder a = init_autoencoder(3, 2, 16, 2, 5);
  Autoencoder b = a;
  TrainConfig c;
  c.epochs = 4;
  c.seed = 11;
  c.regularizer = Regularizer::none;
  const TrainingLog la = train(a, f.x, c);
  c.regularizer = Regularizer::geometric;
  c.alpha = 0.0;
  const TrainingLog lb = train(b, f.x, c);
  REQUIRE(la.epochs.size() == lb.epochs.size());
  for (std::size_t i = 0; i < la.epochs.size(); ++i) {
    CHECK(la.epochs[i].reconstruction == lb.epochs[i].reconstruction);
    CHECK(la.epochs[i].regularizer == lb.epochs[i].regularizer);
  }
  CHECK(same_params(a, b));
}

TEST_CASE("training is deterministic under a fixed seed") {
  const EmbeddingFrame f = standardize(toy_manifold(ToyKind::two_moons_3d, 300, 2));
  Autoencoder a = init_autoencoder(3, 2, 16, 2, 1);
  Autoencoder b = a;
  TrainConfig c;
  c.epochs = 3;
  c.regularizer = Regularizer::lee;
  train(a, f.x, c);
  train(b, f.x, c);
  CHECK(same_params(a, b));
}

TEST_CASE("model container round trip") {
  const Autoencoder ae = init_autoencoder(4, 2, 5, 2, 6);
  const auto bytes = encode_model(ae);
  CHECK(bytes[0] == 'G');
  CHECK(bytes[3] == '1');
  const Autoencoder back = decode_model(bytes);
  CHECK(same_params(ae, back));
  CHECK(encode_model(back) == bytes);
}

TEST_CASE("model container rejects corrupt input") {
  auto bytes = encode_model(init_autoencoder(3, 2, 4, 1, 1));
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_model(truncated), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_model(bad_magic), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_model(trailing), FormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.gae"), IoError);
}

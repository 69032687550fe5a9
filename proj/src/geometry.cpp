#include "geomae/geometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "geomae/autodiff.hpp"
#include "geomae/errors.hpp"

namespace geomae {

namespace {

constexpr Eigen::Index kChunk = 512;

template <class F>
void for_each_chunk(const Matrix& z, F&& f) {
  for (Eigen::Index start = 0; start < z.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, z.rows() - start);
    f(start, Matrix(z.middleRows(start, len)));
  }
}

Var metric_blocks(const BoundMLP& decoder, Var z) {
  return ad::block_gram(decoder_jacobian(decoder, z), z.value().cols());
}

double population_variance(const std::vector<double>& v) {
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mu) * (x - mu);
  return var / static_cast<double>(v.size());
}

}  // namespace

Var decoder_jacobian(const BoundMLP& decoder, Var z) {
  const std::size_t l = z.value().cols();
  const std::size_t b = z.value().rows();
  const ForwardTrace trace = forward_trace(decoder, z);
  const std::size_t depth = decoder.weights.size();
  Var j = ad::tile_cols(decoder.weights[0], b);
  for (std::size_t k = 0; k < depth; ++k) {
    if (k > 0) j = ad::matmul(decoder.weights[k], j);
    if (k + 1 < depth) {
      Var slope = ad::repeat_cols(ad::transpose(ad::elu_prime(trace.preactivations[k])), l);
      j = ad::mul(slope, j);
    }
  }
  return j;
}

Tensor decoder_jacobian(const MLPParams& decoder, std::span<const double> z) {
  Tape tape;
  const BoundMLP net = bind_constants(tape, decoder);
  const Var zv = tape.constant(Tensor::matrix(1, z.size(), {z.begin(), z.end()}));
  return decoder_jacobian(net, zv).value();
}

PullbackMetric pullback_metric(const Tensor& jacobian, std::vector<double> base_point) {
  if (jacobian.rank() != 2) throw ShapeError("pullback_metric: Jacobian must be a matrix");
  if (jacobian.rows() < jacobian.cols()) {
    throw ShapeError("pullback_metric: need n >= l, got " + jacobian.shape_string());
  }
  const Matrix j = jacobian.to_matrix();
  const Matrix g = j.transpose() * j;
  return {Tensor::from_matrix(g), std::move(base_point)};
}

PullbackMetric metric_at(const MLPParams& decoder, std::span<const double> z) {
  return pullback_metric(decoder_jacobian(decoder, z), {z.begin(), z.end()});
}

double gen_jac_det(const PullbackMetric& metric) {
  const Tensor& g = metric.g;
  switch (g.rows()) {
    case 1:
      return g[0];
    case 2:
      return g[0] * g[3] - g[1] * g[2];
    default:
      return determinant_lu(g);
  }
}

double condition_number(const PullbackMetric& metric) {
  double lo = 0.0;
  double hi = 0.0;
  if (metric.dim() == 2) {
    const Tensor& g = metric.g;
    const SymEigen2 e = sym_eigen2(g[0], 0.5 * (g[1] + g[2]), g[3]);
    lo = e.lambda_min;
    hi = e.lambda_max;
  } else {
    const Matrix g = metric.g.to_matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(g, Eigen::EigenvaluesOnly);
    lo = solver.eigenvalues().minCoeff();
    hi = solver.eigenvalues().maxCoeff();
  }
  if (!(lo > 0.0)) throw NumericError("condition number of a metric with lambda_min <= 0");
  return hi / lo;
}

Var log_gen_jac_dets(const BoundMLP& decoder, Var z, std::optional<double> floor) {
  const std::size_t l = z.value().cols();
  Var dets = ad::batched_det(metric_blocks(decoder, z), l);
  if (floor) {
    dets = ad::clamp_min(dets, *floor);
  } else {
    const Tensor& d = dets.value();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(d[i] > 0.0)) throw NonImmersionError(i, d[i]);
    }
  }
  return ad::log(dets);
}

Var geometric_loss(const BoundMLP& decoder, Var z, std::optional<double> floor) {
  if (z.value().rows() == 0) throw std::invalid_argument("geometric_loss: empty batch");
  return ad::variance(log_gen_jac_dets(decoder, z, floor));
}

Var lee_loss(const BoundMLP& decoder, Var z, std::optional<double> floor) {
  const std::size_t l = z.value().cols();
  if (l != 2) throw std::invalid_argument("lee_loss: closed-form eigenvalues need latent dim 2");
  if (z.value().rows() == 0) throw std::invalid_argument("lee_loss: empty batch");
  Var eig = ad::sym2_eigenvalues(metric_blocks(decoder, z));
  if (floor) {
    eig = ad::clamp_min(eig, *floor);
  } else {
    const Tensor& e = eig.value();
    for (std::size_t i = 0; i < e.rows(); ++i) {
      if (!(e(i, 0) > 0.0)) throw NonImmersionError(i, e(i, 0));
    }
  }
  const Var centered = ad::sub_broadcast(ad::log(eig), ad::log(ad::mean(eig)));
  return ad::scale(ad::mean(ad::square(centered)), static_cast<double>(l));
}

std::vector<double> gen_jac_dets(const MLPParams& decoder, const Matrix& z) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(z.rows()));
  const std::size_t l = static_cast<std::size_t>(z.cols());
  if (l > 3) {
    for (const PullbackMetric& m : metrics_at(decoder, z)) out.push_back(gen_jac_det(m));
    return out;
  }
  for_each_chunk(z, [&](Eigen::Index, const Matrix& chunk) {
    Tape tape;
    const BoundMLP net = bind_constants(tape, decoder);
    const Var d = ad::batched_det(metric_blocks(net, tape.constant(Tensor::from_matrix(chunk))), l);
    out.insert(out.end(), d.value().data().begin(), d.value().data().end());
  });
  return out;
}

std::vector<PullbackMetric> metrics_at(const MLPParams& decoder, const Matrix& z) {
  std::vector<PullbackMetric> out;
  out.reserve(static_cast<std::size_t>(z.rows()));
  const std::size_t l = static_cast<std::size_t>(z.cols());
  for_each_chunk(z, [&](Eigen::Index, const Matrix& chunk) {
    Tape tape;
    const BoundMLP net = bind_constants(tape, decoder);
    const Var g = metric_blocks(net, tape.constant(Tensor::from_matrix(chunk)));
    const Tensor& gv = g.value();
    for (Eigen::Index i = 0; i < chunk.rows(); ++i) {
      const auto* row = &gv.data()[static_cast<std::size_t>(i) * l * l];
      std::vector<double> base(chunk.row(i).data(), chunk.row(i).data() + l);
      out.push_back({Tensor::matrix(l, l, {row, row + l * l}), std::move(base)});
    }
  });
  return out;
}

double geometric_loss_value(const MLPParams& decoder, const Matrix& z) {
  const auto dets = gen_jac_dets(decoder, z);
  std::vector<double> logs;
  logs.reserve(dets.size());
  for (double d : dets) {
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    logs.push_back(std::log(d));
  }
  return population_variance(logs);
}

double lee_loss_value(const MLPParams& decoder, const Matrix& z) {
  if (z.cols() != 2) throw std::invalid_argument("lee_loss: closed-form eigenvalues need latent dim 2");
  std::vector<double> eigs;
  for (const PullbackMetric& m : metrics_at(decoder, z)) {
    const Tensor& g = m.g;
    const SymEigen2 e = sym_eigen2(g[0], 0.5 * (g[1] + g[2]), g[3]);
    if (!(e.lambda_min > 0.0)) return std::numeric_limits<double>::infinity();
    eigs.push_back(e.lambda_min);
    eigs.push_back(e.lambda_max);
  }
  double mean = 0.0;
  for (double v : eigs) mean += v;
  mean /= static_cast<double>(eigs.size());
  const double log_mean = std::log(mean);
  double total = 0.0;
  for (double v : eigs) total += (std::log(v) - log_mean) * (std::log(v) - log_mean);
  return total / static_cast<double>(z.rows());
}

}  // namespace geomae

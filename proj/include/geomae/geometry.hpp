#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "geomae/nn.hpp"
#include "geomae/tape.hpp"
#include "geomae/tensor.hpp"

namespace geomae {

// Pullback of the Euclidean metric through the decoder at one latent point.
struct PullbackMetric {
  Tensor g;  // [l x l], symmetric
  std::vector<double> base_point;

  std::size_t dim() const { return g.rows(); }
};

// Jacobians of the decoder at every row of z[b x l], as the closed-form
// product W_K diag(elu'(a_{K-1})) W_{K-1} ... diag(elu'(a_1)) W_1. Returned in
// block layout [n x b*l]: columns i*l .. i*l+l-1 hold the Jacobian at z_i.
// Differentiable w.r.t. decoder weights and z.
Var decoder_jacobian(const BoundMLP& decoder, Var z);

// Jacobian [n x l] of the decoder at a single point.
Tensor decoder_jacobian(const MLPParams& decoder, std::span<const double> z);

// g = J^T J. Requires n >= l.
PullbackMetric pullback_metric(const Tensor& jacobian, std::vector<double> base_point = {});
PullbackMetric metric_at(const MLPParams& decoder, std::span<const double> z);

// det(g): the generalized Jacobian determinant.
double gen_jac_det(const PullbackMetric& metric);

// lambda_max / lambda_min of g. Throws NumericError if lambda_min <= 0.
double condition_number(const PullbackMetric& metric);

// log det(J^T J) at every batch point, shape [b]. A non-positive determinant
// raises NonImmersionError with the batch index, unless `floor` is given, in
// which case determinants are clamped to it.
Var log_gen_jac_dets(const BoundMLP& decoder, Var z, std::optional<double> floor = {});

// L_det: population variance over the batch of log det(J^T J).
Var geometric_loss(const BoundMLP& decoder, Var z, std::optional<double> floor = {});

// Comparison regularizer driving the decoder towards a scaled isometry:
// mean over the batch of sum_i (log lambda_i(z) - log mean_{j,z'} lambda_j(z'))^2.
// Latent dimension must be 2.
Var lee_loss(const BoundMLP& decoder, Var z, std::optional<double> floor = {});

// Tape-free evaluation over arbitrarily many points (processed in chunks).
std::vector<double> gen_jac_dets(const MLPParams& decoder, const Matrix& z);
std::vector<PullbackMetric> metrics_at(const MLPParams& decoder, const Matrix& z);

// Loss values for logging: +inf where the tape version would throw.
double geometric_loss_value(const MLPParams& decoder, const Matrix& z);
double lee_loss_value(const MLPParams& decoder, const Matrix& z);

}  // namespace geomae

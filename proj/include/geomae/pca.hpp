#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "geomae/nn.hpp"
#include "geomae/tensor.hpp"

namespace geomae {

struct PcaModel {
  Matrix components;                    // [l x n], orthonormal rows
  Vector mean;                          // [n]
  std::vector<double> singular_values;  // of the centered data, all of them
  // The l-th and (l+1)-th singular values (nearly) coincide, so the
  // subspace is not unique.
  bool spectral_gap_warning = false;

  std::size_t latent_dim() const { return static_cast<std::size_t>(components.rows()); }
};

// Top-l right singular vectors of the centered data. Each component is signed
// so that its largest-magnitude entry is positive. Throws
// std::invalid_argument if m <= l or the data has rank below l.
PcaModel pca_fit(const Matrix& x, std::size_t l);

Matrix pca_encode(const PcaModel& pca, const Matrix& x);
Matrix pca_decode(const PcaModel& pca, const Matrix& z);
// Sum over points of the squared reconstruction error.
double pca_reconstruction_error(const PcaModel& pca, const Matrix& x);

// Single affine layer each way: encoder W(x - mu), decoder W^T z + mu.
Autoencoder pca_as_autoencoder(const PcaModel& pca);

// Principal angles (radians, ascending) between the column spaces of a and b.
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

struct LinearAeOptions {
  std::size_t steps = 100000;
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
};

struct B1Report {
  std::vector<double> principal_angles;  // decoder column space vs PCA subspace
  double max_principal_angle = 0.0;
  std::vector<double> mixing_singular_values;  // of A = E W^T
  double product_residual = 0.0;               // Frobenius norm of DE - W^T W
  double final_loss = 0.0;
  bool converged = false;
  Matrix encoder;  // [l x n]
  Matrix decoder;  // [n x l]

  std::string to_text() const;
  std::string to_csv() const;
};

// Trains a bias-free linear autoencoder z = E x, x' = D z on the centered
// data with full-batch Adam and coupled weight decay, then compares it with
// PCA. Non-convergence is reported through `converged`, not thrown.
B1Report theorem_b1_harness(const Matrix& x, std::size_t l, std::uint64_t seed,
                            const LinearAeOptions& options = {});

// Mean over points and decoder Jacobian columns of |cos| of the angle between
// the residual x - D(E(x)) and the column. Zero residuals count as orthogonal.
double orthogonality_residual(const Autoencoder& model, const Matrix& x);

}  // namespace geomae

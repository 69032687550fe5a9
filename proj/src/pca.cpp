#include "geomae/pca.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "geomae/autodiff.hpp"
#include "geomae/geometry.hpp"
#include "geomae/tape.hpp"

namespace geomae {

namespace {

Matrix centered(const Matrix& x, const Vector& mean) {
  return x.rowwise() - mean.transpose();
}

}  // namespace

PcaModel pca_fit(const Matrix& x, std::size_t l) {
  const auto m = static_cast<std::size_t>(x.rows());
  const auto n = static_cast<std::size_t>(x.cols());
  if (l == 0 || l > n) throw std::invalid_argument("pca_fit: latent dimension must be in [1, n]");
  if (m <= l) throw std::invalid_argument("pca_fit: need more than " + std::to_string(l) + " points");

  PcaModel pca;
  pca.mean = x.colwise().mean().transpose();
  const Matrix xc = centered(x, pca.mean);
  Eigen::JacobiSVD<Matrix> svd(xc, Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  pca.singular_values.assign(s.data(), s.data() + s.size());
  const auto li = static_cast<Eigen::Index>(l);
  const double top = s(0);
  if (!(top > 0.0) || s(li - 1) <= 1e-12 * top) {
    throw std::invalid_argument("pca_fit: data has rank below " + std::to_string(l));
  }
  if (li < s.size() && s(li - 1) - s(li) <= 1e-10 * top) pca.spectral_gap_warning = true;

  pca.components = svd.matrixV().leftCols(li).transpose();
  for (Eigen::Index r = 0; r < li; ++r) {
    Eigen::Index arg = 0;
    pca.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (pca.components(r, arg) < 0.0) pca.components.row(r) *= -1.0;
  }
  return pca;
}

Matrix pca_encode(const PcaModel& pca, const Matrix& x) {
  return centered(x, pca.mean) * pca.components.transpose();
}

Matrix pca_decode(const PcaModel& pca, const Matrix& z) {
  Matrix out = z * pca.components;
  out.rowwise() += pca.mean.transpose();
  return out;
}

double pca_reconstruction_error(const PcaModel& pca, const Matrix& x) {
  return (x - pca_decode(pca, pca_encode(pca, x))).squaredNorm();
}

Autoencoder pca_as_autoencoder(const PcaModel& pca) {
  const Matrix& w = pca.components;
  const auto l = static_cast<std::size_t>(w.rows());
  const auto n = static_cast<std::size_t>(w.cols());
  const Vector enc_bias = -(w * pca.mean);
  Autoencoder ae;
  ae.encoder.layers.push_back({Tensor::from_matrix(w),
                               Tensor::vector({enc_bias.data(), enc_bias.data() + l})});
  const Matrix wt = w.transpose();
  ae.decoder.layers.push_back({Tensor::from_matrix(wt),
                               Tensor::vector({pca.mean.data(), pca.mean.data() + n})});
  ae.validate();
  return ae;
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("principal_angles: ambient dimensions differ");
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    angles.push_back(std::acos(std::clamp(svd.singularValues()(i), -1.0, 1.0)));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

B1Report theorem_b1_harness(const Matrix& x, std::size_t l, std::uint64_t seed,
                            const LinearAeOptions& options) {
  const PcaModel pca = pca_fit(x, l);
  const Matrix xc = centered(x, pca.mean);
  const auto n = static_cast<std::size_t>(x.cols());

  std::mt19937_64 rng(seed);
  auto uniform_init = [&](std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(static_cast<double>(cols)),
                                             1.0 / std::sqrt(static_cast<double>(cols)));
    std::vector<double> v(rows * cols);
    for (double& e : v) e = u(rng);
    return Tensor::matrix(rows, cols, std::move(v));
  };
  Tensor enc = uniform_init(l, n);
  Tensor dec = uniform_init(n, l);
  std::vector<Tensor*> params = {&enc, &dec};
  AdamState adam;
  const Tensor data = Tensor::from_matrix(xc);

  B1Report report;
  // Adam jitters around the optimum, so convergence compares the mean loss
  // of the last 1000 steps with that of the 1000 before.
  constexpr std::size_t kWindow = 1000;
  double mean_last = 0.0;
  double mean_prev = 0.0;
  for (std::size_t step = 0; step < options.steps; ++step) {
    Tape tape;
    const Var xv = tape.constant(data);
    const Var e = tape.parameter(enc);
    const Var d = tape.parameter(dec);
    const Var recon = ad::matmul(ad::matmul(xv, ad::transpose(e)), ad::transpose(d));
    const Var loss = reconstruction_loss(xv, recon);
    tape.backward(loss);
    adam_step(params, adam, options.learning_rate, options.weight_decay);
    report.final_loss = loss.value().item();
    if (step + kWindow >= options.steps) {
      mean_last += report.final_loss / kWindow;
    } else if (step + 2 * kWindow >= options.steps) {
      mean_prev += report.final_loss / kWindow;
    }
  }
  report.converged = options.steps >= 2 * kWindow && std::abs(mean_last - mean_prev) <= 1e-3 * mean_last;

  report.encoder = enc.to_matrix();
  report.decoder = dec.to_matrix();
  const Matrix& w = pca.components;
  report.principal_angles = principal_angles(report.decoder, w.transpose());
  report.max_principal_angle = report.principal_angles.back();
  Eigen::JacobiSVD<Matrix> mix(report.encoder * w.transpose());
  const Vector sv = mix.singularValues();
  report.mixing_singular_values.assign(sv.data(), sv.data() + sv.size());
  report.product_residual = (report.decoder * report.encoder - w.transpose() * w).norm();
  return report;
}

std::string B1Report::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << "principal angles (rad):";
  for (double a : principal_angles) os << ' ' << a;
  os << "\nmixing singular values:";
  for (double s : mixing_singular_values) os << ' ' << s;
  os << "\n|DE - W^T W|_F: " << product_residual << "\nfinal loss: " << final_loss
     << "\nconverged: " << (converged ? "yes" : "no") << '\n';
  return os.str();
}

std::string B1Report::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "quantity,index,value\n";
  for (std::size_t i = 0; i < principal_angles.size(); ++i) os << "principal_angle," << i << ',' << principal_angles[i] << '\n';
  for (std::size_t i = 0; i < mixing_singular_values.size(); ++i) {
    os << "mixing_singular_value," << i << ',' << mixing_singular_values[i] << '\n';
  }
  os << "product_residual,0," << product_residual << '\n';
  os << "final_loss,0," << final_loss << '\n';
  os << "converged,0," << (converged ? 1 : 0) << '\n';
  return os.str();
}

double orthogonality_residual(const Autoencoder& model, const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("orthogonality_residual: empty data");
  const Matrix z = forward(model.encoder, x);
  const Matrix recon = forward(model.decoder, z);
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector r = (x.row(i) - recon.row(i)).transpose();
    const Vector zi = z.row(i).transpose();
    const Matrix j = decoder_jacobian(model.decoder, std::span<const double>(zi.data(), zi.size())).to_matrix();
    // Residuals at rounding level carry no direction.
    const double rn = r.norm() > 1e-12 * (1.0 + x.row(i).norm()) ? r.norm() : 0.0;
    for (Eigen::Index c = 0; c < j.cols(); ++c) {
      const double cn = j.col(c).norm();
      if (rn > 0.0 && cn > 0.0) total += std::abs(r.dot(j.col(c))) / (rn * cn);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace geomae

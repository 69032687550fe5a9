#include "geomae/verify.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "geomae/geometry.hpp"
#include "geomae/metrics.hpp"
#include "geomae/nn.hpp"
#include "geomae/oracles.hpp"
#include "geomae/pca.hpp"

namespace geomae {

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

double loss_on_tape(const MLPParams& decoder, const Matrix& z) {
  Tape tape;
  const BoundMLP net = bind_constants(tape, decoder);
  return geometric_loss(net, tape.constant(Tensor::from_matrix(z))).value().item();
}

void scale_tensor(Tensor& t, double s) {
  for (double& v : t.data()) v *= s;
}

CheckResult below(const std::string& name, double value, double tol, std::string detail = {}) {
  return {name, value, tol, value < tol, std::move(detail)};
}

}  // namespace

Matrix gaussian_with_spectrum(std::size_t m, std::span<const double> spectrum, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = spectrum.size();
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(n, n, rng)).householderQ();
  Matrix x = gaussian_matrix(m, n, rng);
  for (std::size_t c = 0; c < n; ++c) x.col(static_cast<Eigen::Index>(c)) *= spectrum[c];
  return x * q.transpose();
}

double max_scale_invariance_error(std::uint64_t seed, std::span<const double> betas, std::size_t networks) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  const std::vector<std::size_t> dims = {2, 8, 8, 3};
  for (std::size_t k = 0; k < networks; ++k) {
    const MLPParams dec = init_mlp(dims, rng());
    const Matrix z = uniform_matrix(16, 2, -2.0, 2.0, rng);
    const double base = loss_on_tape(dec, z);
    for (double beta : betas) {
      MLPParams scaled = dec;
      scale_tensor(scaled.layers.front().weight, beta);
      const double moved = loss_on_tape(scaled, z / beta);
      worst = std::max(worst, std::abs(moved - base));
    }
  }
  return worst;
}

RegularizerSweep regularizer_sweep(std::uint64_t seed, std::size_t pairs, double c) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width(4, 16);
  std::uniform_int_distribution<std::size_t> out_dim(3, 6);
  std::uniform_int_distribution<std::size_t> batch(2, 32);
  RegularizerSweep sweep;
  sweep.min_loss = std::numeric_limits<double>::infinity();
  sweep.pairs = pairs;
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::size_t n = out_dim(rng);
    const std::size_t w = width(rng);
    const std::vector<std::size_t> dims = {2, w, w, n};
    const MLPParams dec = init_mlp(dims, rng());
    const Matrix z = uniform_matrix(batch(rng), 2, -2.0, 2.0, rng);
    const double loss = loss_on_tape(dec, z);
    sweep.min_loss = std::min(sweep.min_loss, loss);

    // det g scales by s^(2l) = c when the latent scaling s is composed into
    // the first layer (points mapped along) ...
    const double s = std::pow(c, 1.0 / 4.0);
    MLPParams inner = dec;
    scale_tensor(inner.layers.front().weight, s);
    sweep.max_scaling_error = std::max(sweep.max_scaling_error, std::abs(loss_on_tape(inner, z / s) - loss));
    // ... and likewise when the decoder output is scaled by s.
    MLPParams outer = dec;
    scale_tensor(outer.layers.back().weight, s);
    scale_tensor(outer.layers.back().bias, s);
    sweep.max_scaling_error = std::max(sweep.max_scaling_error, std::abs(loss_on_tape(outer, z) - loss));

    const std::vector<std::size_t> linear_dims = {2, n};
    const MLPParams linear = init_mlp(linear_dims, rng());
    sweep.max_linear_loss = std::max(sweep.max_linear_loss, loss_on_tape(linear, z));
  }
  return sweep;
}

PcaIsotropy pca_isotropy(std::uint64_t seed, std::size_t steps) {
  const std::vector<double> spectrum = {4.0, 2.5, 1.0, 0.5, 0.2};
  const Matrix x = gaussian_with_spectrum(400, spectrum, seed);
  const PcaModel pca = pca_fit(x, 2);
  const Autoencoder ae = pca_as_autoencoder(pca);
  const Matrix z = pca_encode(pca, x);
  const Vector lo = z.colwise().minCoeff();
  const Vector hi = z.colwise().maxCoeff();
  PcaIsotropy out;
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j < steps; ++j) {
      const double tx = static_cast<double>(i) / static_cast<double>(steps - 1);
      const double ty = static_cast<double>(j) / static_cast<double>(steps - 1);
      const double p[2] = {lo(0) + tx * (hi(0) - lo(0)), lo(1) + ty * (hi(1) - lo(1))};
      const PullbackMetric g = metric_at(ae.decoder, p);
      out.max_condition_deviation = std::max(out.max_condition_deviation, std::abs(condition_number(g) - 1.0));
      out.max_det_deviation = std::max(out.max_det_deviation, std::abs(gen_jac_det(g) - 1.0));
      ++out.points;
    }
  }
  return out;
}

SuiteReport run_invariance_suite(std::uint64_t seed) {
  SuiteReport report{"invariance", {}};
  const double betas[] = {0.1, 2.0, 17.0};
  report.checks.push_back(below("scale_invariance", max_scale_invariance_error(seed, betas, 5), 1e-10,
                                "5 networks, beta in {0.1, 2, 17}"));
  const RegularizerSweep sweep = regularizer_sweep(seed + 1, 100, 7.0);
  report.checks.push_back({"nonnegativity", sweep.min_loss, 0.0, sweep.min_loss >= 0.0,
                           std::to_string(sweep.pairs) + " random pairs, value = min L_det"});
  report.checks.push_back(below("linear_decoder_zero", sweep.max_linear_loss, 1e-20));
  report.checks.push_back(below("determinant_scaling_c7", sweep.max_scaling_error, 1e-10));
  return report;
}

SuiteReport run_pca_suite(std::uint64_t seed) {
  SuiteReport report{"pca", {}};
  const PcaIsotropy iso = pca_isotropy(seed, 20);
  report.checks.push_back(below("condition_number_is_one", iso.max_condition_deviation, 1e-9,
                                std::to_string(iso.points) + " grid points"));
  report.checks.push_back(below("gen_jac_det_is_one", iso.max_det_deviation, 1e-12));

  const std::vector<double> spectrum = {5.0, 2.0, 0.1};
  const Matrix x = gaussian_with_spectrum(300, spectrum, seed + 7);
  const PcaModel pca = pca_fit(x, 2);
  const double energy = pca_reconstruction_error(pca, x);
  const double oracle_energy = oracle::pca_residual_energy(x, 2);
  report.checks.push_back(below("reconstruction_energy", std::abs(energy - oracle_energy) / oracle_energy, 1e-8));
  const double ortho = (pca.components * pca.components.transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff();
  report.checks.push_back(below("orthonormal_rows", ortho, 1e-10));
  report.checks.push_back(below("pca_orthogonal_residual", orthogonality_residual(pca_as_autoencoder(pca), x), 1e-10));

  const B1Report b1 = theorem_b1_harness(x, 2, seed + 11);
  report.checks.push_back(below("linear_ae_principal_angle", b1.max_principal_angle, 0.02,
                                b1.converged ? "converged" : "not converged"));
  double sv_dev = 0.0;
  for (double s : b1.mixing_singular_values) sv_dev = std::max(sv_dev, std::abs(s - 1.0));
  report.checks.push_back(below("linear_ae_mixing_singular_values", sv_dev, 0.05));
  return report;
}

SuiteReport run_metrics_suite(std::uint64_t seed) {
  SuiteReport report{"metrics", {}};
  std::mt19937_64 rng(seed);
  const std::vector<std::size_t> ks = {3, 5, 10};
  double knn_diff = 0.0, trust_diff = 0.0, stress_diff = 0.0, spear_diff = 0.0, kl_diff = 0.0, kl100_diff = 0.0, kl100_rel = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = gaussian_matrix(30, 5, rng);
    const Matrix z = x.leftCols(2) + 0.3 * gaussian_matrix(30, 2, rng);
    knn_diff = std::max(knn_diff, std::abs(knn_recall(x, z, ks) - oracle::knn_recall(x, z, ks)));
    trust_diff = std::max(trust_diff, std::abs(trustworthiness(x, z, ks) - oracle::trustworthiness(x, z, ks)));
    stress_diff = std::max(stress_diff, std::abs(stress(x, z) - oracle::stress(x, z)));
    spear_diff = std::max(spear_diff, std::abs(spearman_distances(x, z) - oracle::spearman(x, z)));
    const double ref_local = oracle::kl_sigma(x, z, 0.1);
    kl_diff = std::max(kl_diff, std::abs(kl_sigma(x, z, 0.1) - ref_local) / std::max(ref_local, 1e-300));
    const double ref_global = oracle::kl_sigma(x, z, 100.0);
    const double diff = std::abs(kl_sigma(x, z, 100.0) - ref_global);
    kl100_diff = std::max(kl100_diff, diff);
    kl100_rel = std::max(kl100_rel, diff / std::max(ref_global, 1e-300));
  }
  report.checks.push_back({"knn_matches_oracle", knn_diff, 0.0, knn_diff == 0.0, "exact"});
  report.checks.push_back({"trust_matches_oracle", trust_diff, 0.0, trust_diff == 0.0, "exact"});
  report.checks.push_back({"stress_matches_oracle", stress_diff, 0.0, stress_diff == 0.0, "exact"});
  report.checks.push_back(below("spearman_matches_oracle", spear_diff, 1e-12));
  report.checks.push_back(below("kl_0.1_matches_oracle", kl_diff, 1e-12, "relative"));
  // KL_100 is a sum of O(1e-4 / m) terms that cancels to O(1e-8), so its
  // relative difference says little; the bound is absolute.
  std::ostringstream kl_note;
  kl_note << "absolute; max relative " << kl100_rel;
  report.checks.push_back(below("kl_100_matches_oracle", kl100_diff, 1e-12, kl_note.str()));

  const Matrix x = gaussian_matrix(40, 3, rng);
  const double id_err = std::max({std::abs(knn_recall(x, x, ks) - 1.0), std::abs(trustworthiness(x, x, ks) - 1.0),
                                  stress(x, x), std::abs(spearman_distances(x, x) - 1.0), std::abs(kl_sigma(x, x, 0.1)),
                                  std::abs(kl_sigma(x, x, 100.0))});
  report.checks.push_back(below("identity_embedding", id_err, 1e-15, "Z == X"));

  // Rigid motion of Z.
  const Matrix z = x.leftCols(2) + 0.2 * gaussian_matrix(40, 2, rng);
  const double angle = 0.7;
  Matrix rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Matrix moved = z * rot.transpose();
  moved.col(0).array() += 3.0;
  moved.col(1).array() -= 1.5;
  const double rigid = std::max({std::abs(knn_recall(x, z, ks) - knn_recall(x, moved, ks)),
                                 std::abs(trustworthiness(x, z, ks) - trustworthiness(x, moved, ks)),
                                 std::abs(stress(x, z) - stress(x, moved)),
                                 std::abs(spearman_distances(x, z) - spearman_distances(x, moved)),
                                 std::abs(kl_sigma(x, z, 0.1) - kl_sigma(x, moved, 0.1))});
  report.checks.push_back(below("rigid_motion_invariance", rigid, 1e-9));

  bool in_range = true;
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix a = gaussian_matrix(20, 4, rng);
    const Matrix b = gaussian_matrix(20, 2, rng);
    const std::vector<std::size_t> small_ks = {3, 5};
    const double knn = knn_recall(a, b, small_ks);
    const double trust = trustworthiness(a, b, small_ks);
    const double sp = spearman_distances(a, b);
    in_range = in_range && knn >= 0.0 && knn <= 1.0 && trust >= 0.0 && trust <= 1.0 && sp >= -1.0 && sp <= 1.0 &&
               stress(a, b) >= 0.0 && kl_sigma(a, b, 0.1) >= 0.0;
  }
  report.checks.push_back({"value_ranges", in_range ? 0.0 : 1.0, 0.5, in_range, "100 random instances"});
  return report;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "invariance") return run_invariance_suite(seed);
  if (name == "pca") return run_pca_suite(seed);
  if (name == "metrics") return run_metrics_suite(seed);
  throw std::invalid_argument("unknown suite '" + name + "' (expected invariance, pca or metrics)");
}

}  // namespace geomae

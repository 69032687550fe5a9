#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "geomae/gradcheck.hpp"
#include "geomae/tensor.hpp"

namespace geomae {

// m samples of a zero-mean Gaussian in R^n whose principal standard
// deviations are `spectrum`, along randomly rotated axes.
Matrix gaussian_with_spectrum(std::size_t m, std::span<const double> spectrum, std::uint64_t seed);

// Largest change of L_det when the first decoder layer is scaled by beta
// and the latent batch by 1/beta, over `networks` random 2-8-8-3 decoders
// and every beta.
double max_scale_invariance_error(std::uint64_t seed, std::span<const double> betas, std::size_t networks);

struct RegularizerSweep {
  double min_loss = 0.0;            // over random (network, batch) pairs
  double max_linear_loss = 0.0;     // single affine layer decoders
  double max_scaling_error = 0.0;   // all determinants multiplied by c
  std::size_t pairs = 0;
};
RegularizerSweep regularizer_sweep(std::uint64_t seed, std::size_t pairs, double c);

struct PcaIsotropy {
  double max_condition_deviation = 0.0;  // |kappa - 1|
  double max_det_deviation = 0.0;        // |det g - 1|
  std::size_t points = 0;
};
// PCA decoder of a random 5D Gaussian evaluated on a steps x steps grid over
// the bounding box of the encoded data.
PcaIsotropy pca_isotropy(std::uint64_t seed, std::size_t steps);

SuiteReport run_invariance_suite(std::uint64_t seed);
SuiteReport run_pca_suite(std::uint64_t seed);
SuiteReport run_metrics_suite(std::uint64_t seed);
// "invariance", "pca" or "metrics"; throws std::invalid_argument otherwise.
SuiteReport run_suite(const std::string& name, std::uint64_t seed);

}  // namespace geomae

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "geomae/nn.hpp"
#include "geomae/tape.hpp"
#include "geomae/tensor.hpp"

namespace geomae {

// One named check of a verification suite.
struct CheckResult {
  std::string name;
  double value = 0.0;      // measured error or statistic
  double tolerance = 0.0;  // pass iff value < tolerance (or the check says otherwise)
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
  std::string to_text() const;
};

// Builds a scalar loss on `tape` from leaves holding the inputs, in order.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradComparison {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t entries = 0;
};

// Reverse-mode gradient against central differences with step h, entry by
// entry. Relative error is |a - f| / max(|a|, |f|, 1e-7).
GradComparison compare_gradients(const std::vector<Tensor>& inputs, const LossBuilder& build,
                                 double h = 1e-5);

// Tensors of an MLP in binding order (w0, b0, w1, b1, ...), and the inverse.
std::vector<Tensor> flatten_mlp(const MLPParams& net);
BoundMLP bound_from_vars(std::span<const Var> vars);

// Finite-difference suite over the tape ops, the reconstruction loss of a
// 3-4-2-4-3 autoencoder and both regularizers on a 3-6-2-6-3 autoencoder.
SuiteReport run_gradcheck(std::uint64_t seed);

}  // namespace geomae

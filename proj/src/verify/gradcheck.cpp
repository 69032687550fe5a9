#include "geomae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "geomae/autodiff.hpp"
#include "geomae/geometry.hpp"

namespace geomae {

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string SuiteReport::to_text() const {
  std::ostringstream os;
  os.precision(3);
  for (const CheckResult& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << suite << '/' << c.name << "  value=" << std::scientific
       << c.value << " tol=" << c.tolerance << std::defaultfloat;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  return os.str();
}

GradComparison compare_gradients(const std::vector<Tensor>& inputs, const LossBuilder& build, double h) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
    const Var loss = build(tape, leaves);
    tape.backward(loss);
    for (const Var& v : leaves) {
      const auto g = tape.grad(v);
      analytic.emplace_back(g.begin(), g.end());
    }
  }

  std::vector<Tensor> work = inputs;
  auto evaluate = [&] {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : work) leaves.push_back(tape.constant(t));
    return build(tape, leaves).value().item();
  };

  GradComparison cmp;
  for (std::size_t k = 0; k < work.size(); ++k) {
    for (std::size_t e = 0; e < work[k].size(); ++e) {
      const double saved = work[k][e];
      work[k][e] = saved + h;
      const double up = evaluate();
      work[k][e] = saved - h;
      const double down = evaluate();
      work[k][e] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic[k].empty() ? 0.0 : analytic[k][e];
      const double abs_err = std::abs(a - fd);
      const double rel = abs_err / std::max({std::abs(a), std::abs(fd), 1e-7});
      cmp.max_absolute_error = std::max(cmp.max_absolute_error, abs_err);
      cmp.max_relative_error = std::max(cmp.max_relative_error, rel);
      ++cmp.entries;
    }
  }
  return cmp;
}

std::vector<Tensor> flatten_mlp(const MLPParams& net) {
  std::vector<Tensor> out;
  for (const Layer& layer : net.layers) {
    out.push_back(layer.weight);
    out.push_back(layer.bias);
  }
  return out;
}

BoundMLP bound_from_vars(std::span<const Var> vars) {
  BoundMLP net;
  for (std::size_t i = 0; i + 1 < vars.size(); i += 2) {
    net.weights.push_back(vars[i]);
    net.biases.push_back(vars[i + 1]);
  }
  return net;
}

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(std::vector<std::size_t> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.data()) v = u(rng_);
    return t;
  }

  // Entries bounded away from 0, where the ELU derivative has its kink.
  Tensor off_zero(std::vector<std::size_t> shape) {
    Tensor t = uniform(std::move(shape), -1.5, 1.5);
    for (double& v : t.data()) {
      if (std::abs(v) < 0.05) v += v < 0.0 ? -0.1 : 0.1;
    }
    return t;
  }

  // Rows of b symmetric positive definite 2x2 matrices with distinct eigenvalues.
  Tensor spd2_rows(std::size_t b) {
    Tensor t({b, 4});
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < b; ++i) {
      const double a = u(rng_);
      const double c = u(rng_);
      const double d = u(rng_);
      t(i, 0) = a * a + c * c + 0.5;
      t(i, 1) = t(i, 2) = a * d;
      t(i, 3) = d * d + 1.2 + 0.3 * static_cast<double>(i % 2);
    }
    return t;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Random linear functional of the op's output, so every output entry matters.
Var project(Var out, const Tensor& weights) {
  Tape& t = out.tape();
  return ad::sum(ad::mul(out, t.constant(weights.reshaped(out.value().shape()))));
}

void add_check(SuiteReport& report, const std::string& name, const GradComparison& cmp, double tol) {
  std::ostringstream detail;
  detail << cmp.entries << " entries, max abs err " << cmp.max_absolute_error;
  report.checks.push_back({name, cmp.max_relative_error, tol, cmp.max_relative_error < tol, detail.str()});
}

}  // namespace

SuiteReport run_gradcheck(std::uint64_t seed) {
  SuiteReport report{"gradcheck", {}};
  Sampler s(seed);
  constexpr double op_tol = 1e-5;

  using Unary = Var (*)(Var);
  auto unary = [&](const std::string& name, Unary op, Tensor x) {
    const Tensor w = s.uniform(x.shape(), -1.0, 1.0);
    add_check(report, name,
              compare_gradients({x}, [&](Tape&, std::span<const Var> in) { return project(op(in[0]), w); }),
              op_tol);
  };
  // Ops with a scalar output are checked through a nonlinear wrapper so
  // that the upstream gradient is not constant.
  auto scalar_op = [&](const std::string& name, Unary op, Tensor x) {
    add_check(report, name,
              compare_gradients({x}, [&](Tape&, std::span<const Var> in) { return ad::square(op(in[0])); }),
              op_tol);
  };

  unary("transpose", ad::transpose, s.uniform({3, 4}, -1, 1));
  unary("log", ad::log, s.uniform({3, 3}, 0.5, 2.0));
  unary("square", ad::square, s.uniform({2, 5}, -1, 1));
  unary("elu", ad::elu, s.off_zero({4, 4}));
  unary("elu_prime", ad::elu_prime, s.off_zero({4, 4}));
  scalar_op("sum", ad::sum, s.uniform({3, 4}, -1, 1));
  scalar_op("mean", ad::mean, s.uniform({3, 4}, -1, 1));
  scalar_op("variance", ad::variance, s.uniform({7}, -1, 1));
  scalar_op("det_small_2", ad::det_small, s.uniform({2, 2}, -1, 1));
  scalar_op("det_small_3", ad::det_small, s.uniform({3, 3}, -1, 1));

  {
    const Tensor a = s.uniform({3, 3}, -1, 1);
    const Tensor b = s.uniform({3, 3}, -1, 1);
    add_check(report, "matmul",
              compare_gradients({a, b}, [](Tape&, std::span<const Var> in) { return ad::sum(ad::matmul(in[0], in[1])); }),
              op_tol);
  }
  {
    const Tensor a = s.uniform({3, 4}, -1, 1);
    const Tensor b = s.uniform({3, 4}, -1, 1);
    const Tensor w = s.uniform({3, 4}, -1, 1);
    add_check(report, "add", compare_gradients({a, b}, [&](Tape&, std::span<const Var> in) {
                return project(ad::add(in[0], in[1]), w);
              }), op_tol);
    add_check(report, "sub", compare_gradients({a, b}, [&](Tape&, std::span<const Var> in) {
                return project(ad::sub(in[0], in[1]), w);
              }), op_tol);
    add_check(report, "mul", compare_gradients({a, b}, [&](Tape&, std::span<const Var> in) {
                return project(ad::mul(in[0], in[1]), w);
              }), op_tol);
    add_check(report, "scale", compare_gradients({a}, [&](Tape&, std::span<const Var> in) {
                return project(ad::scale(in[0], -2.5), w);
              }), op_tol);
    add_check(report, "reshape", compare_gradients({a}, [&](Tape&, std::span<const Var> in) {
                return project(ad::reshape(in[0], {4, 3}), w);
              }), op_tol);
  }
  {
    const Tensor x = s.uniform({4, 3}, -1, 1);
    const Tensor bias = s.uniform({3}, -1, 1);
    const Tensor scalar = s.uniform({1}, -1, 1);
    const Tensor w = s.uniform({4, 3}, -1, 1);
    add_check(report, "add_bias", compare_gradients({x, bias}, [&](Tape&, std::span<const Var> in) {
                return project(ad::add_bias(in[0], in[1]), w);
              }), op_tol);
    add_check(report, "sub_broadcast", compare_gradients({x, scalar}, [&](Tape&, std::span<const Var> in) {
                return project(ad::sub_broadcast(in[0], in[1]), w);
              }), op_tol);
  }
  {
    Tensor x = s.uniform({3, 4}, 0.2, 1.0);
    x(0, 0) = -0.3;  // clamped entry
    const Tensor w = s.uniform({3, 4}, -1, 1);
    add_check(report, "clamp_min", compare_gradients({x}, [&](Tape&, std::span<const Var> in) {
                return project(ad::clamp_min(in[0], 0.1), w);
              }), op_tol);
  }
  {
    const Tensor x = s.uniform({3, 2}, -1, 1);
    const Tensor w = s.uniform({3, 6}, -1, 1);
    add_check(report, "repeat_cols", compare_gradients({x}, [&](Tape&, std::span<const Var> in) {
                return project(ad::repeat_cols(in[0], 3), w);
              }), op_tol);
    add_check(report, "tile_cols", compare_gradients({x}, [&](Tape&, std::span<const Var> in) {
                return project(ad::tile_cols(in[0], 3), w);
              }), op_tol);
  }
  {
    const Tensor j = s.uniform({4, 6}, -1, 1);
    const Tensor w = s.uniform({3, 4}, -1, 1);
    add_check(report, "block_gram", compare_gradients({j}, [&](Tape&, std::span<const Var> in) {
                return project(ad::block_gram(in[0], 2), w);
              }), op_tol);
  }
  for (std::size_t l = 1; l <= 3; ++l) {
    const Tensor g = s.uniform({4, l * l}, -1, 1);
    const Tensor w = s.uniform({4}, -1, 1);
    add_check(report, "batched_det_" + std::to_string(l),
              compare_gradients({g}, [&](Tape&, std::span<const Var> in) {
                return project(ad::batched_det(in[0], l), w);
              }),
              op_tol);
  }
  {
    const Tensor g = s.spd2_rows(5);
    const Tensor w = s.uniform({5, 2}, -1, 1);
    add_check(report, "sym2_eigenvalues", compare_gradients({g}, [&](Tape&, std::span<const Var> in) {
                return project(ad::sym2_eigenvalues(in[0]), w);
              }), op_tol);
  }

  // Whole-model checks. Inputs: data batch, then encoder and decoder tensors.
  auto model_check = [&](const std::string& name, std::size_t hidden, std::size_t batch, auto&& loss_of) {
    const Autoencoder ae = init_autoencoder(3, 2, hidden, 1, s.rng()());
    std::vector<Tensor> inputs = {s.uniform({batch, 3}, -1, 1)};
    const auto enc = flatten_mlp(ae.encoder);
    const auto dec = flatten_mlp(ae.decoder);
    inputs.insert(inputs.end(), enc.begin(), enc.end());
    inputs.insert(inputs.end(), dec.begin(), dec.end());
    const std::size_t ne = enc.size();
    // The data batch is perturbed too; harmless and it exercises more paths.
    add_check(report, name,
              compare_gradients(inputs,
                                [&](Tape&, std::span<const Var> in) {
                                  const BoundMLP e = bound_from_vars(in.subspan(1, ne));
                                  const BoundMLP d = bound_from_vars(in.subspan(1 + ne));
                                  return loss_of(e, d, in[0]);
                                }),
              1e-4);
  };
  model_check("reconstruction_3-4-2-4-3", 4, 6, [](const BoundMLP& e, const BoundMLP& d, Var x) {
    return reconstruction_loss(x, forward(d, forward(e, x)));
  });
  model_check("geometric_loss_3-6-2-6-3", 6, 5, [](const BoundMLP& e, const BoundMLP& d, Var x) {
    return geometric_loss(d, forward(e, x));
  });
  model_check("lee_loss_3-6-2-6-3", 6, 5, [](const BoundMLP& e, const BoundMLP& d, Var x) {
    return lee_loss(d, forward(e, x));
  });
  model_check("combined_loss_3-6-2-6-3", 6, 5, [](const BoundMLP& e, const BoundMLP& d, Var x) {
    const Var z = forward(e, x);
    return ad::add(reconstruction_loss(x, forward(d, z)), ad::scale(geometric_loss(d, z), 0.1));
  });
  return report;
}

}  // namespace geomae

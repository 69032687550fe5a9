#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "geomae/autodiff.hpp"
#include "geomae/errors.hpp"

namespace geomae {

namespace {

using RowMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Matrix>;

ConstRowMap view(const Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}

RowMap view(std::span<double> buf, std::size_t rows, std::size_t cols) {
  return {buf.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + a.shape_string());
  }
}

// Elementwise unary op: value f(x), local derivative df(x).
template <class F, class DF>
Var unary(const char* op, Var x, F f, DF df) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros_like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xi = x.id();
  return tape.record(op, std::move(out), {x}, [xi, df](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto gx = t.grad_accumulator(xi);
    const Tensor& xv = t.value(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * df(xv[i]);
  });
}

double det3(const double* m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

double det_closed(const double* m, std::size_t l) {
  switch (l) {
    case 1:
      return m[0];
    case 2:
      return m[0] * m[3] - m[1] * m[2];
    case 3:
      return det3(m);
    default:
      throw std::invalid_argument("closed-form determinant needs l <= 3");
  }
}

// Cofactor matrix (the gradient of det) written into out[l*l].
void cofactors(const double* m, std::size_t l, double* out) {
  switch (l) {
    case 1:
      out[0] = 1.0;
      return;
    case 2:
      out[0] = m[3];
      out[1] = -m[2];
      out[2] = -m[1];
      out[3] = m[0];
      return;
    case 3: {
      auto cross = [](const double* u, const double* v, double* w) {
        w[0] = u[1] * v[2] - u[2] * v[1];
        w[1] = u[2] * v[0] - u[0] * v[2];
        w[2] = u[0] * v[1] - u[1] * v[0];
      };
      cross(m + 3, m + 6, out);
      cross(m + 6, m, out + 3);
      cross(m, m + 3, out + 6);
      return;
    }
    default:
      throw std::invalid_argument("closed-form cofactors need l <= 3");
  }
}

}  // namespace

double determinant_lu(const Tensor& square) {
  if (square.rank() != 2 || square.rows() != square.cols()) {
    throw ShapeError("determinant of non-square tensor " + square.shape_string());
  }
  const std::size_t n = square.rows();
  std::vector<double> a(square.data().begin(), square.data().end());
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(a[r * n + k]) > std::abs(a[pivot * n + k])) pivot = r;
    }
    if (a[pivot * n + k] == 0.0) return 0.0;
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[k * n + c], a[pivot * n + c]);
      det = -det;
    }
    const double p = a[k * n + k];
    det *= p;
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r * n + k] / p;
      for (std::size_t c = k + 1; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
    }
  }
  return det;
}

SymEigen2 sym_eigen2(double a, double b, double c) {
  const double mid = 0.5 * (a + c);
  const double half_diff = 0.5 * (a - c);
  const double radius = std::hypot(half_diff, b);
  SymEigen2 out{};
  out.lambda_max = mid + radius;
  out.lambda_min = mid - radius;
  if (radius == 0.0) {
    out.v_min[0] = 1.0;
    out.v_min[1] = 0.0;
    out.v_max[0] = 0.0;
    out.v_max[1] = 1.0;
    return out;
  }
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  out.v_max[0] = std::cos(theta);
  out.v_max[1] = std::sin(theta);
  out.v_min[0] = -out.v_max[1];
  out.v_min[1] = out.v_max[0];
  return out;
}

namespace ad {

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("matmul", av);
  require_matrix("matmul", bv);
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + av.shape_string() + " * " +
                     bv.shape_string());
  }
  Tensor out({av.rows(), bv.cols()});
  view(out.data(), out.rows(), out.cols()).noalias() = view(av) * view(bv);
  const std::size_t ai = a.id();
  const std::size_t bi = b.id();
  return a.tape().record("matmul", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    auto g = t.grad(self);
    ConstRowMap gm(g.data(), static_cast<Eigen::Index>(av.rows()),
                   static_cast<Eigen::Index>(bv.cols()));
    if (auto ga = t.grad_accumulator(ai); !ga.empty()) {
      view(ga, av.rows(), av.cols()).noalias() += gm * view(bv).transpose();
    }
    if (auto gb = t.grad_accumulator(bi); !gb.empty()) {
      view(gb, bv.rows(), bv.cols()).noalias() += view(av).transpose() * gm;
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  out.clear_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const std::size_t ai = a.id();
  const std::size_t bi = b.id();
  return a.tape().record("add", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (std::size_t id : {ai, bi}) {
      auto acc = t.grad_accumulator(id);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  out.clear_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ai = a.id();
  const std::size_t bi = b.id();
  return a.tape().record("sub", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad_accumulator(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    auto gb = t.grad_accumulator(bi);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  out.clear_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ai = a.id();
  const std::size_t bi = b.id();
  return a.tape().record("mul", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    auto ga = t.grad_accumulator(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    auto gb = t.grad_accumulator(bi);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double) { return factor; });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_matrix("transpose", av);
  const std::size_t r = av.rows();
  const std::size_t c = av.cols();
  Tensor out({c, r});
  view(out.data(), c, r) = view(av).transpose();
  const std::size_t ai = a.id();
  return a.tape().record("transpose", std::move(out), {a}, [ai, r, c](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad_accumulator(ai);
    view(ga, r, c) += ConstRowMap(g.data(), static_cast<Eigen::Index>(c),
                                  static_cast<Eigen::Index>(r))
                          .transpose();
  });
}

Var reshape(Var a, std::vector<std::size_t> shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ai = a.id();
  return a.tape().record("reshape", std::move(out), {a}, [ai](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad_accumulator(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
  });
}

Var log(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value " + std::to_string(v));
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id();
  return a.tape().record("sum", Tensor::scalar(s), {a}, [ai](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad_accumulator(ai)) v += g;
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (a.value().size() == 0) throw ShapeError("mean of empty tensor");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id();
  return a.tape().record("mean", Tensor::scalar(s / n), {a}, [ai, n](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0] / n;
    for (double& v : t.grad_accumulator(ai)) v += g;
  });
}

Var variance(Var a) {
  const Tensor& av = a.value();
  if (av.size() == 0) throw ShapeError("variance of empty tensor");
  const auto n = static_cast<double>(av.size());
  double mu = 0.0;
  for (double v : av.data()) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : av.data()) var += (v - mu) * (v - mu);
  var /= n;
  const std::size_t ai = a.id();
  return a.tape().record(
      "variance", Tensor::scalar(var), {a}, [ai, n, mu](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& av = t.value(ai);
        auto ga = t.grad_accumulator(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * 2.0 * (av[i] - mu) / n;
      });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_matrix("add_bias", xv);
  if (bv.size() != xv.cols()) {
    throw ShapeError("add_bias: bias " + bv.shape_string() + " vs input " + xv.shape_string());
  }
  Tensor out = xv;
  out.clear_grad();
  const std::size_t r = xv.rows();
  const std::size_t c = xv.cols();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out(i, j) += bv[j];
  }
  const std::size_t xi = x.id();
  const std::size_t bi = bias.id();
  return x.tape().record(
      "add_bias", std::move(out), {x, bias}, [xi, bi, r, c](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_accumulator(xi);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
        if (auto gb = t.grad_accumulator(bi); !gb.empty()) {
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
          }
        }
      });
}

Var sub_broadcast(Var x, Var s) {
  const double sv = s.value().item();
  Tensor out = x.value();
  out.clear_grad();
  for (double& v : out.data()) v -= sv;
  const std::size_t xi = x.id();
  const std::size_t si = s.id();
  return x.tape().record(
      "sub_broadcast", std::move(out), {x, s}, [xi, si](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_accumulator(xi);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
        if (auto gs = t.grad_accumulator(si); !gs.empty()) {
          double total = 0.0;
          for (double v : g) total += v;
          gs[0] -= total;
        }
      });
}

Var elu(Var x) {
  return unary(
      "elu", x, [](double v) { return v >= 0.0 ? v : std::expm1(v); },
      [](double v) { return v >= 0.0 ? 1.0 : std::exp(v); });
}

Var elu_prime(Var x) {
  return unary(
      "elu_prime", x, [](double v) { return v >= 0.0 ? 1.0 : std::exp(v); },
      [](double v) { return v >= 0.0 ? 0.0 : std::exp(v); });
}

Var clamp_min(Var x, double floor) {
  return unary(
      "clamp_min", x, [floor](double v) { return v < floor ? floor : v; },
      [floor](double v) { return v < floor ? 0.0 : 1.0; });
}

Var repeat_cols(Var x, std::size_t times) {
  const Tensor& xv = x.value();
  require_matrix("repeat_cols", xv);
  const std::size_t r = xv.rows();
  const std::size_t c = xv.cols();
  Tensor out({r, c * times});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t k = 0; k < times; ++k) out(i, j * times + k) = xv(i, j);
    }
  }
  const std::size_t xi = x.id();
  return x.tape().record(
      "repeat_cols", std::move(out), {x}, [xi, r, c, times](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_accumulator(xi);
        const std::size_t w = c * times;
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            for (std::size_t k = 0; k < times; ++k) gx[i * c + j] += g[i * w + j * times + k];
          }
        }
      });
}

Var tile_cols(Var x, std::size_t times) {
  const Tensor& xv = x.value();
  require_matrix("tile_cols", xv);
  const std::size_t r = xv.rows();
  const std::size_t c = xv.cols();
  Tensor out({r, c * times});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t k = 0; k < times; ++k) {
      for (std::size_t j = 0; j < c; ++j) out(i, k * c + j) = xv(i, j);
    }
  }
  const std::size_t xi = x.id();
  return x.tape().record(
      "tile_cols", std::move(out), {x}, [xi, r, c, times](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        auto gx = t.grad_accumulator(xi);
        const std::size_t w = c * times;
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t k = 0; k < times; ++k) {
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * w + k * c + j];
          }
        }
      });
}

Var block_gram(Var j, std::size_t l) {
  const Tensor& jv = j.value();
  require_matrix("block_gram", jv);
  if (l == 0 || jv.cols() % l != 0) {
    throw ShapeError("block_gram: " + std::to_string(jv.cols()) + " columns are not blocks of " +
                     std::to_string(l));
  }
  const std::size_t n = jv.rows();
  const std::size_t w = jv.cols();
  const std::size_t b = w / l;
  Tensor out({b, l * l});
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = &jv.data()[r * w];
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t c = 0; c < l; ++c) {
        for (std::size_t d = 0; d < l; ++d) {
          out(i, c * l + d) += row[i * l + c] * row[i * l + d];
        }
      }
    }
  }
  const std::size_t ji = j.id();
  return j.tape().record(
      "block_gram", std::move(out), {j}, [ji, n, w, b, l](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        const Tensor& jv = t.value(ji);
        auto gj = t.grad_accumulator(ji);
        for (std::size_t r = 0; r < n; ++r) {
          const double* row = &jv.data()[r * w];
          double* grow = &gj[r * w];
          for (std::size_t i = 0; i < b; ++i) {
            const double* gi = &g[i * l * l];
            for (std::size_t c = 0; c < l; ++c) {
              double acc = 0.0;
              for (std::size_t d = 0; d < l; ++d) {
                acc += (gi[c * l + d] + gi[d * l + c]) * row[i * l + d];
              }
              grow[i * l + c] += acc;
            }
          }
        }
      });
}

Var batched_det(Var g, std::size_t l) {
  const Tensor& gv = g.value();
  if (l == 0 || l > 3) throw std::invalid_argument("batched_det supports 1 <= l <= 3");
  if (gv.cols() != l * l) {
    throw ShapeError("batched_det: expected rows of " + std::to_string(l * l) + " entries, got " +
                     gv.shape_string());
  }
  const std::size_t b = gv.rank() == 2 ? gv.rows() : 1;
  Tensor out({b});
  for (std::size_t i = 0; i < b; ++i) out[i] = det_closed(&gv.data()[i * l * l], l);
  const std::size_t gi = g.id();
  return g.tape().record("det", std::move(out), {g}, [gi, b, l](Tape& t, std::size_t self) {
    auto up = t.grad(self);
    const Tensor& gv = t.value(gi);
    auto acc = t.grad_accumulator(gi);
    double cof[9];
    for (std::size_t i = 0; i < b; ++i) {
      cofactors(&gv.data()[i * l * l], l, cof);
      for (std::size_t k = 0; k < l * l; ++k) acc[i * l * l + k] += up[i] * cof[k];
    }
  });
}

Var det_small(Var g) {
  const Tensor& gv = g.value();
  if (gv.rank() != 2 || gv.rows() != gv.cols()) {
    throw ShapeError("det_small: non-square input " + gv.shape_string());
  }
  const std::size_t l = gv.rows();
  if (l <= 3) return reshape(batched_det(reshape(g, {1, l * l}), l), {});
  if (g.requires_grad()) {
    throw std::invalid_argument("det_small: no gradient for l > 3; use l <= 3 on training paths");
  }
  return g.tape().constant(Tensor::scalar(determinant_lu(gv)));
}

Var sym2_eigenvalues(Var g) {
  const Tensor& gv = g.value();
  if (gv.cols() != 4) throw ShapeError("sym2_eigenvalues: expected [b x 4], got " + gv.shape_string());
  const std::size_t b = gv.rank() == 2 ? gv.rows() : 1;
  Tensor out({b, 2});
  for (std::size_t i = 0; i < b; ++i) {
    const double* m = &gv.data()[i * 4];
    const SymEigen2 e = sym_eigen2(m[0], 0.5 * (m[1] + m[2]), m[3]);
    out(i, 0) = e.lambda_min;
    out(i, 1) = e.lambda_max;
  }
  const std::size_t gi = g.id();
  return g.tape().record("sym2_eigenvalues", std::move(out), {g}, [gi, b](Tape& t, std::size_t self) {
    auto up = t.grad(self);
    const Tensor& gv = t.value(gi);
    auto acc = t.grad_accumulator(gi);
    for (std::size_t i = 0; i < b; ++i) {
      const double* m = &gv.data()[i * 4];
      const SymEigen2 e = sym_eigen2(m[0], 0.5 * (m[1] + m[2]), m[3]);
      const double g_min = up[i * 2];
      const double g_max = up[i * 2 + 1];
      double* a = &acc[i * 4];
      a[0] += g_min * e.v_min[0] * e.v_min[0] + g_max * e.v_max[0] * e.v_max[0];
      const double off = g_min * e.v_min[0] * e.v_min[1] + g_max * e.v_max[0] * e.v_max[1];
      a[1] += off;
      a[2] += off;
      a[3] += g_min * e.v_min[1] * e.v_min[1] + g_max * e.v_max[1] * e.v_max[1];
    }
  });
}

}  // namespace ad
}  // namespace geomae

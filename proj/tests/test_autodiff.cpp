#include <doctest.h>

#include <cmath>

#include "geomae/autodiff.hpp"
#include "geomae/errors.hpp"
#include "geomae/gradcheck.hpp"

using namespace geomae;

TEST_CASE("matmul forward and backward") {
  Tape tape;
  Var a = tape.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = tape.leaf(Tensor::matrix(3, 1, {1, 0, -1}));
  Var c = ad::matmul(a, b);
  CHECK(c.value()(0, 0) == -2.0);
  CHECK(c.value()(1, 0) == -2.0);
  tape.backward(ad::sum(c));
  // d sum(AB) / dA = 1 * b^T per row
  auto ga = tape.grad(a);
  CHECK(ga[0] == 1.0);
  CHECK(ga[1] == 0.0);
  CHECK(ga[2] == -1.0);
  auto gb = tape.grad(b);
  CHECK(gb[0] == 5.0);
  CHECK(gb[1] == 7.0);
  CHECK(gb[2] == 9.0);
}

TEST_CASE("shape mismatches throw ShapeError") {
  Tape tape;
  Var a = tape.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = tape.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK_THROWS_AS(ad::matmul(a, b), ShapeError);
  Var v = tape.leaf(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(ad::add(a, v), ShapeError);
  CHECK_THROWS_AS(ad::block_gram(a, 2), ShapeError);
}

TEST_CASE("non-finite results raise NumericError") {
  Tape tape;
  Var a = tape.leaf(Tensor::vector({1.0, -1.0}));
  CHECK_THROWS_AS(ad::log(a), NumericError);
  Var z = tape.leaf(Tensor::vector({0.0}));
  CHECK_THROWS_AS(ad::log(z), NumericError);
}

TEST_CASE("backward twice without reset throws") {
  Tape tape;
  Var a = tape.leaf(Tensor::scalar(3.0));
  Var s = ad::square(a);
  tape.backward(s);
  CHECK(tape.grad(a)[0] == doctest::Approx(6.0));
  CHECK_THROWS(tape.backward(s));
  tape.reset_grads();
  tape.backward(s);
  CHECK(tape.grad(a)[0] == doctest::Approx(6.0));
}

TEST_CASE("parameters accumulate into bound tensors") {
  Tensor w = Tensor::vector({1.0, 2.0});
  Tape tape;
  Var p = tape.parameter(w);
  tape.backward(ad::sum(ad::square(p)));
  REQUIRE(w.has_grad());
  CHECK(w.grad()[0] == doctest::Approx(2.0));
  CHECK(w.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("a variable used twice gets both contributions") {
  Tape tape;
  Var a = tape.leaf(Tensor::scalar(2.0));
  Var y = ad::mul(a, a);  // a^2
  Var z = ad::add(y, a);  // a^2 + a
  tape.backward(ad::sum(z));
  CHECK(tape.grad(a)[0] == doctest::Approx(5.0));
}

TEST_CASE("variance is the population variance") {
  Tape tape;
  Var a = tape.leaf(Tensor::vector({1, 2, 3, 4}));
  CHECK(ad::variance(a).value().item() == doctest::Approx(1.25));
  CHECK(ad::mean(a).value().item() == doctest::Approx(2.5));
}

TEST_CASE("elu and its derivative at zero use the right limit") {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({-1.0, 0.0, 2.0}));
  const Tensor& e = ad::elu(x).value();
  CHECK(e[0] == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(e[1] == 0.0);
  CHECK(e[2] == 2.0);
  const Tensor& d = ad::elu_prime(x).value();
  CHECK(d[0] == doctest::Approx(std::exp(-1.0)));
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 1.0);
}

TEST_CASE("batched determinants and Gram blocks") {
  Tape tape;
  // Two 3x2 Jacobian blocks side by side.
  Var j = tape.leaf(Tensor::matrix(3, 4, {1, 0, 2, 0,
                                          0, 1, 0, 3,
                                          0, 0, 0, 0}));
  Var g = ad::block_gram(j, 2);
  CHECK(g.value().rows() == 2);
  CHECK(g.value()(0, 0) == 1.0);
  CHECK(g.value()(1, 0) == 4.0);
  CHECK(g.value()(1, 3) == 9.0);
  Var d = ad::batched_det(g, 2);
  CHECK(d.value()[0] == doctest::Approx(1.0));
  CHECK(d.value()[1] == doctest::Approx(36.0));
}

TEST_CASE("determinant_lu agrees with the closed form") {
  Tensor m = Tensor::matrix(3, 3, {2, 1, 0, 1, 3, 1, 0, 1, 4});
  Tape tape;
  const double closed = ad::det_small(tape.leaf(m)).value().item();
  CHECK(determinant_lu(m) == doctest::Approx(closed).epsilon(1e-12));
  CHECK(closed == doctest::Approx(18.0));
}

TEST_CASE("sym_eigen2 handles the diagonal and general cases") {
  auto e = sym_eigen2(3.0, 0.0, 1.0);
  CHECK(e.lambda_min == doctest::Approx(1.0));
  CHECK(e.lambda_max == doctest::Approx(3.0));
  auto f = sym_eigen2(2.0, 1.0, 2.0);
  CHECK(f.lambda_min == doctest::Approx(1.0));
  CHECK(f.lambda_max == doctest::Approx(3.0));
  CHECK(std::abs(f.v_max[0]) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("compare_gradients agrees on a composite expression") {
  std::vector<Tensor> inputs{Tensor::matrix(2, 2, {0.3, -0.2, 0.5, 0.9}),
                             Tensor::matrix(2, 2, {1.1, 0.4, -0.7, 0.2})};
  auto build = [](Tape&, std::span<const Var> v) {
    return ad::mean(ad::square(ad::elu(ad::matmul(v[0], v[1]))));
  };
  const GradComparison cmp = compare_gradients(inputs, build);
  CHECK(cmp.entries == 8);
  CHECK(cmp.max_relative_error < 1e-6);
}

TEST_CASE("full gradcheck suite passes") {
  const SuiteReport report = run_gradcheck(7);
  INFO(report.to_text());
  CHECK(report.passed());
}

TEST_CASE("leaves the loss ignores get a zero gradient") {
  Tensor unused = Tensor::vector({1.0, 2.0});
  Tape tape;
  Var a = tape.leaf(Tensor::scalar(2.0));
  Var b = tape.leaf(Tensor::vector({3.0, 4.0}));
  tape.parameter(unused);
  tape.backward(ad::square(a));
  CHECK(tape.grad(b)[0] == 0.0);
  CHECK(tape.grad(b)[1] == 0.0);
  REQUIRE(unused.has_grad());
  CHECK(unused.grad()[0] == 0.0);
}

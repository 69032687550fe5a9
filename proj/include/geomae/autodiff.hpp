#pragma once

#include <cstddef>

#include "geomae/tape.hpp"
#include "geomae/tensor.hpp"

// Differentiable ops over Tape variables. Every op checks shapes eagerly and
// throws ShapeError on mismatch; results must be finite (see Tape::record).
namespace geomae::ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var transpose(Var a);
Var reshape(Var a, std::vector<std::size_t> shape);
Var log(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
// Population variance (divides by the element count).
Var variance(Var a);

// x[b x o] + bias[o], bias broadcast over rows.
Var add_bias(Var x, Var bias);
// x - s for a single-element s, broadcast over every entry of x.
Var sub_broadcast(Var x, Var s);

// ELU with alpha = 1, and its derivative as an op of its own. At x == 0 both
// use the right limit: elu'(0) = 1 and elu''(0) = 0.
Var elu(Var x);
Var elu_prime(Var x);

// max(x, floor) elementwise; zero gradient where clamped.
Var clamp_min(Var x, double floor);

// Column layout helpers for batched Jacobians stored as [rows x batch*l]:
// repeat_cols repeats every column `times` times consecutively, tile_cols
// concatenates `times` copies of the whole matrix side by side.
Var repeat_cols(Var x, std::size_t times);
Var tile_cols(Var x, std::size_t times);

// For J[n x b*l] holding b Jacobian blocks of l columns, returns [b x l*l]
// with row i the row-major Gram matrix J_i^T J_i.
Var block_gram(Var j, std::size_t l);

// Determinants of b stacked l x l matrices given as rows of G[b x l*l]; l <= 3.
// Result shape [b].
Var batched_det(Var g, std::size_t l);

// Determinant of a single square matrix. Closed form with adjugate gradient
// for l <= 3; larger matrices go through LU and are rejected on the
// differentiable path.
Var det_small(Var g);

// Eigenvalues (ascending) of b symmetric 2x2 matrices given as rows of
// G[b x 4]. Result shape [b x 2]. Gradient uses the eigenvector outer product.
Var sym2_eigenvalues(Var g);

}  // namespace geomae::ad

namespace geomae {

// Determinant of a square tensor by LU with partial pivoting.
double determinant_lu(const Tensor& square);

// Closed-form eigen-decomposition of the symmetric 2x2 matrix [[a, b], [b, c]].
struct SymEigen2 {
  double lambda_min;
  double lambda_max;
  double v_min[2];
  double v_max[2];
};
SymEigen2 sym_eigen2(double a, double b, double c);

}  // namespace geomae

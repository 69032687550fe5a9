#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geomae/datasets.hpp"
#include "geomae/diagnostics.hpp"
#include "geomae/nn.hpp"
#include "geomae/tensor.hpp"

// Slow, direct reference implementations used by the verification suites
// and the tests. They share no code with the library routines they check.
namespace geomae::oracle {

double knn_recall(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks);
double trustworthiness(const Matrix& x, const Matrix& z, std::span<const std::size_t> ks);
double stress(const Matrix& x, const Matrix& z);
double spearman(const Matrix& x, const Matrix& z);
double kl_sigma(const Matrix& x, const Matrix& z, double sigma);

// Sum of the squared singular values beyond the first l, from the
// eigenvalues of the scatter matrix.
double pca_residual_energy(const Matrix& x, std::size_t l);

// Type-7 quantile of unsorted data.
double quantile(std::vector<double> values, double q);

// Even-odd ray casting; points on the boundary may go either way.
bool point_in_polygon(std::span<const Point2> polygon, Point2 p);

// Fraction of the sphere's area covered by cells the earth sampler keeps,
// with exact spherical band areas per cell.
double land_area_fraction(const LandRaster& raster);

// Central-difference Jacobian [n x l] of the decoder at z.
Matrix jacobian_fd(const MLPParams& decoder, std::span<const double> z, double h = 1e-6);

}  // namespace geomae::oracle

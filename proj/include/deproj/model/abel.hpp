#pragma once

#include <deproj/core/error.hpp>
#include <deproj/model/pixel_image.hpp>
#include <deproj/model/radial_grid.hpp>

#include <cmath>
#include <vector>

namespace deproj {

/// Line-of-sight path lengths through each spherical shell at projected
/// radius s, for emissivity that is constant on shells.
template <typename Scalar>
Vector<Scalar> chord_weights(Scalar s, const RadialGrid<Scalar>& grid) {
  Vector<Scalar> w = Vector<Scalar>::Zero(grid.n_r);
  const Scalar s2 = s * s;
  auto half_chord = [s2](Scalar r) {
    const Scalar d = r * r - s2;
    return d > 0 ? std::sqrt(d) : Scalar(0);
  };
  Scalar inner = half_chord(grid.edge(0));
  for (Index j = 0; j < grid.n_r; ++j) {
    const Scalar outer = half_chord(grid.edge(j + 1));
    w(j) = 2 * (outer - inner);
    inner = outer;
  }
  return w;
}

/// Pixels whose center is left of the image center read the left half-profile.
template <typename Scalar>
bool is_left_pixel(Index x, const Point2<Scalar>& center) {
  return Scalar(x) + Scalar(0.5) < center.x();
}

/// Sparse Abel projection A from a doubled profile (length 2*n_r) to an n x n
/// image (flattened row-major). The adjoint is the exact transpose.
template <typename Scalar>
class AbelOperator {
 public:
  AbelOperator() = default;
  AbelOperator(Index n, const Point2<Scalar>& center, const RadialGrid<Scalar>& grid,
               SectorMode mode)
      : n_(n), center_(center), grid_(grid), mode_(mode) {
    const Index nr = grid.n_r;
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(static_cast<std::size_t>(n * n * nr));
    for (Index y = 0; y < n; ++y) {
      for (Index x = 0; x < n; ++x) {
        const Scalar s = std::hypot(Scalar(x) + Scalar(0.5) - center.x(),
                                    Scalar(y) + Scalar(0.5) - center.y());
        DEPROJ_REQUIRE(s <= grid.r_max, DimensionError,
                       "radial grid does not cover every pixel");
        const Vector<Scalar> w = chord_weights(s, grid);
        const Index row = pixel_index(x, y, n);
        const bool left = is_left_pixel(x, center);
        for (Index j = grid.shell_of(s); j < nr; ++j) {
          if (w(j) == Scalar(0)) continue;
          if (mode == SectorMode::kSymmetric) {
            triplets.emplace_back(row, nr - 1 - j, w(j) / 2);
            triplets.emplace_back(row, nr + j, w(j) / 2);
          } else {
            triplets.emplace_back(row, left ? nr - 1 - j : nr + j, w(j));
          }
        }
      }
    }
    matrix_.resize(n * n, grid.doubled_length());
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    matrix_.makeCompressed();
  }

  Index n() const { return n_; }
  const RadialGrid<Scalar>& grid() const { return grid_; }
  SectorMode mode() const { return mode_; }
  const Point2<Scalar>& center() const { return center_; }
  const SparseRowMatrix<Scalar>& matrix() const { return matrix_; }

  Vector<Scalar> apply(const Vector<Scalar>& profile) const {
    DEPROJ_REQUIRE(profile.size() == matrix_.cols(), DimensionError,
                   "profile length does not match the radial grid");
    return matrix_ * profile;
  }

  Vector<Scalar> adjoint(const Vector<Scalar>& image) const {
    DEPROJ_REQUIRE(image.size() == matrix_.rows(), DimensionError,
                   "image size does not match the Abel operator");
    return matrix_.transpose() * image;
  }

 private:
  Index n_ = 0;
  Point2<Scalar> center_ = Point2<Scalar>::Zero();
  RadialGrid<Scalar> grid_;
  SectorMode mode_ = SectorMode::kLeftRight;
  SparseRowMatrix<Scalar> matrix_;
};

template <typename Scalar>
PixelImage<Scalar> abel_project(const DoubledProfile<Scalar>& profile, Index n,
                                const Point2<Scalar>& center, SectorMode mode) {
  const AbelOperator<Scalar> op(n, center, profile.grid, mode);
  return PixelImage<Scalar>::from_flat(op.apply(profile.values), n, center,
                                       ValueKind::kIntensity);
}

template <typename Scalar>
Vector<Scalar> abel_adjoint(const PixelImage<Scalar>& image, const RadialGrid<Scalar>& grid,
                            SectorMode mode) {
  const AbelOperator<Scalar> op(image.n(), image.center, grid, mode);
  return op.adjoint(image.flat());
}

}  // namespace deproj

#pragma once

#include <deproj/core/error.hpp>
#include <deproj/core/types.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace deproj {

/// Largest power of two not exceeding n.
inline Index dyadic_floor(Index n) {
  Index p = 1;
  while (2 * p <= n) p *= 2;
  return p;
}

/// Equispaced shell edges 0 = r_0 < r_1 < ... < r_{n_r} = r_max.
template <typename Scalar>
struct RadialGrid {
  Index n_r = 0;
  Scalar r_max = 0;

  RadialGrid() = default;
  RadialGrid(Index shells, Scalar outer_radius) : n_r(shells), r_max(outer_radius) {
    DEPROJ_REQUIRE(shells > 0 && outer_radius > 0, DimensionError, "radial grid must be non-empty");
  }

  Scalar dr() const { return r_max / Scalar(n_r); }
  Scalar edge(Index j) const { return dr() * Scalar(j); }
  Scalar mid(Index j) const { return dr() * (Scalar(j) + Scalar(0.5)); }
  Vector<Scalar> edges() const { return Vector<Scalar>::LinSpaced(n_r + 1, Scalar(0), r_max); }
  Vector<Scalar> mids() const {
    Vector<Scalar> m(n_r);
    for (Index j = 0; j < n_r; ++j) m(j) = mid(j);
    return m;
  }

  /// Length of the doubled signed-radius signal.
  Index doubled_length() const { return 2 * n_r; }

  /// Shell containing radius r, clamped into [0, n_r).
  Index shell_of(Scalar r) const {
    const auto j = static_cast<Index>(std::floor(r / dr()));
    return std::clamp<Index>(j, 0, n_r - 1);
  }

  bool operator==(const RadialGrid& other) const {
    return n_r == other.n_r && r_max == other.r_max;
  }
};

/// Grid for an n x n image: n_r = P/2 with P = 2^floor(log2 n), and r_max equal
/// to the distance from the center to the farthest image corner, so every
/// pixel (not only its center) lies inside the outermost shell.
template <typename Scalar>
RadialGrid<Scalar> build_radial_grid(Index n, const Point2<Scalar>& center) {
  DEPROJ_REQUIRE(n >= 8, DimensionError, "image side must be >= 8, got " + std::to_string(n));
  Scalar r_max = 0;
  for (Scalar cx : {Scalar(0), Scalar(n)})
    for (Scalar cy : {Scalar(0), Scalar(n)})
      r_max = std::max(r_max, std::hypot(cx - center.x(), cy - center.y()));
  return RadialGrid<Scalar>(dyadic_floor(n) / 2, r_max);
}

/// Signed-radius profile of length 2*n_r. Index k < n_r holds the left half at
/// shell n_r-1-k (outermost first); index n_r + j holds the right half at shell j.
template <typename Scalar>
struct DoubledProfile {
  RadialGrid<Scalar> grid;
  Vector<Scalar> values;

  Index n_r() const { return grid.n_r; }
  Scalar left(Index shell) const { return values(grid.n_r - 1 - shell); }
  Scalar right(Index shell) const { return values(grid.n_r + shell); }

  Vector<Scalar> left_half() const { return values.head(grid.n_r).reverse(); }
  Vector<Scalar> right_half() const { return values.tail(grid.n_r); }
  Vector<Scalar> mean_half() const { return Scalar(0.5) * (left_half() + right_half()); }

  static DoubledProfile from_halves(const RadialGrid<Scalar>& grid, const Vector<Scalar>& left,
                                    const Vector<Scalar>& right) {
    DEPROJ_REQUIRE(left.size() == grid.n_r && right.size() == grid.n_r, DimensionError,
                   "half-profile length must equal n_r");
    DoubledProfile p{grid, Vector<Scalar>(grid.doubled_length())};
    p.values.head(grid.n_r) = left.reverse();
    p.values.tail(grid.n_r) = right;
    return p;
  }

  static DoubledProfile symmetric(const RadialGrid<Scalar>& grid, const Vector<Scalar>& half) {
    return from_halves(grid, half, half);
  }

  /// Signed radius of doubled index k (shell midpoints).
  static Scalar signed_radius(const RadialGrid<Scalar>& grid, Index k) {
    return k < grid.n_r ? -grid.mid(grid.n_r - 1 - k) : grid.mid(k - grid.n_r);
  }
};

}  // namespace deproj

#pragma once

#include <deproj/core/error.hpp>
#include <deproj/core/types.hpp>

#include <cmath>
#include <string>

namespace deproj {

enum class ValueKind { kCounts, kIntensity };

/// Square image of non-negative values with a sub-pixel center. Pixel (x, y)
/// covers [x, x+1) x [y, y+1), so its center sits at (x + 0.5, y + 0.5).
template <typename Scalar>
struct PixelImage {
  Grid<Scalar> values;
  Point2<Scalar> center = Point2<Scalar>::Zero();
  ValueKind kind = ValueKind::kCounts;

  Index n() const { return values.rows(); }

  Eigen::Map<const Vector<Scalar>> flat() const {
    return Eigen::Map<const Vector<Scalar>>(values.data(), values.size());
  }
  Eigen::Map<Vector<Scalar>> flat() {
    return Eigen::Map<Vector<Scalar>>(values.data(), values.size());
  }

  static PixelImage from_flat(const Vector<Scalar>& flat, Index n, const Point2<Scalar>& center,
                              ValueKind kind = ValueKind::kIntensity) {
    DEPROJ_REQUIRE(flat.size() == n * n, DimensionError,
                   "flat image has " + std::to_string(flat.size()) + " values, expected " +
                       std::to_string(n * n));
    PixelImage img;
    img.values = Eigen::Map<const Grid<Scalar>>(flat.data(), n, n);
    img.center = center;
    img.kind = kind;
    return img;
  }

  /// Throws ValidationError unless the image satisfies the data invariants.
  void validate() const {
    DEPROJ_REQUIRE(values.rows() == values.cols(), ValidationError, "image must be square");
    DEPROJ_REQUIRE(n() >= 8, ValidationError, "image side must be at least 8 pixels");
    DEPROJ_REQUIRE(center.x() >= 0 && center.x() <= Scalar(n()) && center.y() >= 0 &&
                       center.y() <= Scalar(n()),
                   ValidationError, "image center lies outside the image");
    for (Index i = 0; i < values.size(); ++i) {
      const Scalar v = values.data()[i];
      DEPROJ_REQUIRE(std::isfinite(static_cast<double>(v)) && v >= 0, ValidationError,
                     "image values must be finite and non-negative");
    }
  }
};

/// Per-pixel detection efficiency in [0, 1]; zero marks a dead pixel.
template <typename Scalar>
struct SensitivityMap {
  Vector<Scalar> values;  // row-major, n*n
  Index n = 0;

  static SensitivityMap uniform(Index n, Scalar value = Scalar(1)) {
    return SensitivityMap{Vector<Scalar>::Constant(n * n, value), n};
  }

  void validate() const {
    DEPROJ_REQUIRE(values.size() == n * n, DimensionError, "sensitivity map size mismatch");
    DEPROJ_REQUIRE((values.array() >= 0).all() && (values.array() <= 1).all(), ValidationError,
                   "sensitivity values must lie in [0, 1]");
  }

  void mask(Index x, Index y) { values(pixel_index(x, y, n)) = Scalar(0); }
};

}  // namespace deproj

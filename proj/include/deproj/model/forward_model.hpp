#pragma once

#include <deproj/basis/dictionary.hpp>
#include <deproj/model/abel.hpp>
#include <deproj/model/blur.hpp>
#include <deproj/model/pixel_image.hpp>

#include <string>
#include <utility>

namespace deproj {

/// Adjoint of the composed linear map split by coefficient block.
template <typename Scalar>
struct BlockVectors {
  Scalar alpha0 = 0;
  Vector<Scalar> alpha;  // dictionary block
  Vector<Scalar> s;      // point-source block (n*n)
};

/// Poisson intensity model mu = e + B(E o (A(alpha0 1 + Phi alpha) + s)).
///
/// Immutable after construction; every method is const and allocation-local,
/// so one instance may serve many threads.
template <typename Scalar>
class ForwardModel {
 public:
  ForwardModel() = default;
  ForwardModel(Index n, const Point2<Scalar>& center, PsfModel<Scalar> psf,
               SensitivityMap<Scalar> sensitivity, Vector<Scalar> background, SectorMode mode,
               Dictionary<Scalar> dictionary)
      : n_(n),
        center_(center),
        mode_(mode),
        psf_(std::move(psf)),
        sensitivity_(std::move(sensitivity)),
        background_(std::move(background)),
        dict_(std::move(dictionary)) {
    DEPROJ_REQUIRE(n >= 8, DimensionError, "image side must be >= 8");
    sensitivity_.validate();
    DEPROJ_REQUIRE(sensitivity_.n == n, DimensionError, "sensitivity map size mismatch");
    DEPROJ_REQUIRE(background_.size() == n * n, DimensionError, "background size mismatch");
    DEPROJ_REQUIRE((background_.array() >= 0).all(), DomainError,
                   "background must be non-negative");
    abel_ = AbelOperator<Scalar>(n, center, dict_.grid(), mode);
    blur_ = BlurOperator<Scalar>(n, psf_);
    x0_ = linear_image(Vector<Scalar>::Ones(dict_.length()), Vector<Scalar>::Zero(n * n));
  }

  /// Convenience: default dictionary on the image's radial grid.
  static ForwardModel with_defaults(Index n, const Point2<Scalar>& center, PsfModel<Scalar> psf,
                                    SensitivityMap<Scalar> sensitivity,
                                    Vector<Scalar> background,
                                    SectorMode mode = SectorMode::kLeftRight) {
    const auto grid = build_radial_grid<Scalar>(n, center);
    return ForwardModel(n, center, std::move(psf), std::move(sensitivity), std::move(background),
                        mode, Dictionary<Scalar>::with_defaults(grid));
  }

  Index n() const { return n_; }
  Index pixels() const { return n_ * n_; }
  const Point2<Scalar>& center() const { return center_; }
  SectorMode mode() const { return mode_; }
  const RadialGrid<Scalar>& grid() const { return dict_.grid(); }
  const PsfModel<Scalar>& psf() const { return psf_; }
  const SensitivityMap<Scalar>& sensitivity() const { return sensitivity_; }
  const Vector<Scalar>& background() const { return background_; }
  const Dictionary<Scalar>& dictionary() const { return dict_; }
  const AbelOperator<Scalar>& abel() const { return abel_; }
  const BlurOperator<Scalar>& blur() const { return blur_; }

  /// x0 = B(E o A 1), the intercept column.
  const Vector<Scalar>& x0() const { return x0_; }

  /// B(E o (A profile + s)) for a doubled profile and a source image.
  Vector<Scalar> linear_image(const Vector<Scalar>& profile, const Vector<Scalar>& s) const {
    DEPROJ_REQUIRE(s.size() == pixels(), DimensionError, "source image size mismatch");
    Vector<Scalar> inner = abel_.apply(profile) + s;
    inner.array() *= sensitivity_.values.array();
    return blur_.apply(inner);
  }

  /// Linear part of mu for dictionary coefficients.
  Vector<Scalar> linear_part(Scalar alpha0, const Vector<Scalar>& alpha,
                             const Vector<Scalar>& s) const {
    return linear_image(dict_.synthesize(alpha0, alpha), s);
  }

  Vector<Scalar> mu(Scalar alpha0, const Vector<Scalar>& alpha, const Vector<Scalar>& s) const {
    return background_ + linear_part(alpha0, alpha, s);
  }

  /// E o B^T w, the source-block adjoint (X2^T w).
  Vector<Scalar> source_adjoint(const Vector<Scalar>& w) const {
    Vector<Scalar> v = blur_.adjoint(w);
    v.array() *= sensitivity_.values.array();
    return v;
  }

  /// M^T w split into (x0^T w, X1^T w, X2^T w).
  BlockVectors<Scalar> adjoint(const Vector<Scalar>& w) const {
    DEPROJ_REQUIRE(w.size() == pixels(), DimensionError, "adjoint input size mismatch");
    BlockVectors<Scalar> out;
    out.s = source_adjoint(w);
    const Vector<Scalar> g_profile = abel_.adjoint(out.s);
    out.alpha0 = g_profile.sum();
    out.alpha = dict_.analyze(g_profile);
    return out;
  }

 private:
  Index n_ = 0;
  Point2<Scalar> center_ = Point2<Scalar>::Zero();
  SectorMode mode_ = SectorMode::kLeftRight;
  PsfModel<Scalar> psf_;
  SensitivityMap<Scalar> sensitivity_;
  Vector<Scalar> background_;
  Dictionary<Scalar> dict_;
  AbelOperator<Scalar> abel_;
  BlurOperator<Scalar> blur_;
  Vector<Scalar> x0_;
};

template <typename Scalar>
PixelImage<Scalar> forward_mu(const ForwardModel<Scalar>& model, Scalar alpha0,
                              const Vector<Scalar>& alpha, const Vector<Scalar>& s) {
  return PixelImage<Scalar>::from_flat(model.mu(alpha0, alpha, s), model.n(), model.center(),
                                       ValueKind::kIntensity);
}

}  // namespace deproj

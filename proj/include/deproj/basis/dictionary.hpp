#pragma once

#include <deproj/basis/king.hpp>
#include <deproj/basis/wavelet.hpp>
#include <deproj/model/radial_grid.hpp>

namespace deproj {

/// Profile dictionary: intercept, a non-negative King block of P/2 atoms and a
/// free orthonormal wavelet block spanning the whole doubled grid.
///
/// Penalized coefficient layout: [king (n_king) | wavelet (L)]. The intercept
/// is carried separately and is not penalized.
template <typename Scalar>
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(const RadialGrid<Scalar>& grid, KingGrid king, int vanishing_moments = 4,
             Index depth = -1)
      : grid_(grid), king_(std::move(king)) {
    wavelets_.vanishing_moments = vanishing_moments;
    wavelets_.depth = depth;
    wavelets_.length = grid.doubled_length();
    validate_wavelet_spec(wavelets_);
    // P/2 atoms with P = 2 n_r
    atoms_ = build_king_atoms(grid_, king_, grid_.n_r);
  }

  static Dictionary with_defaults(const RadialGrid<Scalar>& grid) {
    return Dictionary(grid, default_king_grid(double(grid.r_max), grid.n_r));
  }

  const RadialGrid<Scalar>& grid() const { return grid_; }
  const KingGrid& king() const { return king_; }
  const WaveletBasisSpec& wavelets() const { return wavelets_; }
  const Matrix<Scalar>& king_atoms() const { return atoms_; }

  Index length() const { return grid_.doubled_length(); }
  Index n_king() const { return atoms_.cols(); }
  Index n_wavelet() const { return wavelets_.length; }
  Index n_penalized() const { return n_king() + n_wavelet(); }
  Index wavelet_offset() const { return n_king(); }
  bool non_negative(Index i) const { return i < n_king(); }

  /// alpha0 * 1 + K alpha_king + W alpha_wavelet
  Vector<Scalar> synthesize(Scalar alpha0, const Vector<Scalar>& alpha) const {
    check_layout(alpha);
    Vector<Scalar> profile = atoms_ * alpha.head(n_king());
    profile += wavelet_synthesize<Scalar>(alpha.tail(n_wavelet()), wavelets_);
    profile.array() += alpha0;
    return profile;
  }

  /// Phi^T g over the penalized block.
  Vector<Scalar> analyze(const Vector<Scalar>& profile_gradient) const {
    DEPROJ_REQUIRE(profile_gradient.size() == length(), DimensionError,
                   "profile gradient length mismatch");
    Vector<Scalar> g(n_penalized());
    g.head(n_king()) = atoms_.transpose() * profile_gradient;
    g.tail(n_wavelet()) = wavelet_analyze<Scalar>(profile_gradient, wavelets_);
    return g;
  }

  /// Column i of Phi as a doubled profile.
  Vector<Scalar> column(Index i) const {
    if (i < n_king()) return atoms_.col(i);
    return wavelet_synthesize<Scalar>(Vector<Scalar>::Unit(n_wavelet(), i - n_king()), wavelets_);
  }

  void check_layout(const Vector<Scalar>& alpha) const {
    DEPROJ_REQUIRE(alpha.size() == n_penalized(), DimensionError,
                   "coefficient vector has " + std::to_string(alpha.size()) +
                       " entries, dictionary expects " + std::to_string(n_penalized()));
  }

 private:
  RadialGrid<Scalar> grid_;
  KingGrid king_;
  WaveletBasisSpec wavelets_;
  Matrix<Scalar> atoms_;
};

template <typename Scalar>
DoubledProfile<Scalar> synthesize_profile(Scalar alpha0, const Vector<Scalar>& alpha,
                                          const Dictionary<Scalar>& dict) {
  return DoubledProfile<Scalar>{dict.grid(), dict.synthesize(alpha0, alpha)};
}

/// Reporting variant, floored at zero. Never feed this back into a fit.
template <typename Scalar>
DoubledProfile<Scalar> synthesize_profile_clamped(Scalar alpha0, const Vector<Scalar>& alpha,
                                                  const Dictionary<Scalar>& dict) {
  auto p = synthesize_profile(alpha0, alpha, dict);
  p.values = p.values.cwiseMax(Scalar(0));
  return p;
}

}  // namespace deproj

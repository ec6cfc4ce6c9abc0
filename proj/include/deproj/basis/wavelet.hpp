#pragma once

#include <deproj/core/error.hpp>
#include <deproj/core/types.hpp>

#include <array>
#include <string>
#include <vector>

namespace deproj {

/// Orthonormal compactly supported wavelet family, identified by its number
/// of vanishing moments (1 = Haar, 2..4 = Daubechies).
struct WaveletBasisSpec {
  int vanishing_moments = 4;
  Index depth = -1;   // -1: full depth log2(length)
  Index length = 0;   // power of two

  Index levels() const;
  bool operator==(const WaveletBasisSpec&) const = default;
};

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline Index log2_exact(Index n) {
  Index k = 0;
  while ((Index(1) << k) < n) ++k;
  return k;
}

inline Index WaveletBasisSpec::levels() const {
  return depth < 0 ? log2_exact(length) : depth;
}

/// Low-pass reconstruction filter (sum sqrt(2), unit norm).
inline std::vector<double> daubechies_lowpass(int vanishing_moments) {
  switch (vanishing_moments) {
    case 1:
      return {0.70710678118654752440, 0.70710678118654752440};
    case 2:
      return {0.48296291314453414337, 0.83651630373780790558, 0.22414386804201338103,
              -0.12940952255126038117};
    case 3:
      return {0.33267055295008261600, 0.80689150931109257649, 0.45987750211849157010,
              -0.13501102001025458870, -0.08544127388202666169, 0.03522629188570953660};
    case 4:
      return {0.23037781330889650086, 0.71484657055291564709, 0.63088076792985890788,
              -0.02798376941685985421, -0.18703481171909308408, 0.03084138183556076363,
              0.03288301166688519974, -0.01059740178506903211};
    default:
      throw ValidationError("unsupported wavelet: vanishing moments must be 1..4, got " +
                            std::to_string(vanishing_moments));
  }
}

inline void validate_wavelet_spec(const WaveletBasisSpec& spec) {
  DEPROJ_REQUIRE(is_power_of_two(spec.length), DimensionError,
                 "wavelet signal length must be a power of two, got " +
                     std::to_string(spec.length));
  DEPROJ_REQUIRE(spec.levels() >= 0 && spec.levels() <= log2_exact(spec.length), DimensionError,
                 "wavelet depth exceeds log2(length)");
  (void)daubechies_lowpass(spec.vanishing_moments);
}

namespace detail {

template <typename Scalar>
struct FilterPair {
  std::vector<Scalar> lo, hi;
};

template <typename Scalar>
FilterPair<Scalar> filter_pair(int vanishing_moments) {
  const auto h = daubechies_lowpass(vanishing_moments);
  const std::size_t m = h.size();
  FilterPair<Scalar> f;
  f.lo.resize(m);
  f.hi.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    f.lo[k] = Scalar(h[k]);
    f.hi[k] = Scalar((k % 2 == 0 ? 1.0 : -1.0) * h[m - 1 - k]);
  }
  return f;
}

}  // namespace detail

/// Periodized orthonormal DWT. Output layout: [approximation at the coarsest
/// level | details coarsest ... details finest].
template <typename Scalar>
Vector<Scalar> wavelet_analyze(const Vector<Scalar>& signal, const WaveletBasisSpec& spec) {
  validate_wavelet_spec(spec);
  DEPROJ_REQUIRE(signal.size() == spec.length, DimensionError, "wavelet input length mismatch");
  const auto f = detail::filter_pair<Scalar>(spec.vanishing_moments);
  const Index taps = static_cast<Index>(f.lo.size());
  Vector<Scalar> out = signal;
  Vector<Scalar> work(spec.length);
  Index n = spec.length;
  for (Index level = 0; level < spec.levels(); ++level) {
    const Index half = n / 2;
    for (Index k = 0; k < half; ++k) {
      Scalar a = 0, d = 0;
      for (Index m = 0; m < taps; ++m) {
        const Scalar x = out((2 * k + m) % n);
        a += f.lo[static_cast<std::size_t>(m)] * x;
        d += f.hi[static_cast<std::size_t>(m)] * x;
      }
      work(k) = a;
      work(half + k) = d;
    }
    out.head(n) = work.head(n);
    n = half;
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> wavelet_synthesize(const Vector<Scalar>& coeffs, const WaveletBasisSpec& spec) {
  validate_wavelet_spec(spec);
  DEPROJ_REQUIRE(coeffs.size() == spec.length, DimensionError, "wavelet input length mismatch");
  const auto f = detail::filter_pair<Scalar>(spec.vanishing_moments);
  const Index taps = static_cast<Index>(f.lo.size());
  Vector<Scalar> out = coeffs;
  Vector<Scalar> work(spec.length);
  Index n = spec.length >> spec.levels();
  for (Index level = 0; level < spec.levels(); ++level) {
    const Index half = n;
    n *= 2;
    work.head(n).setZero();
    for (Index k = 0; k < half; ++k) {
      const Scalar a = out(k), d = out(half + k);
      for (Index m = 0; m < taps; ++m)
        work((2 * k + m) % n) +=
            f.lo[static_cast<std::size_t>(m)] * a + f.hi[static_cast<std::size_t>(m)] * d;
    }
    out.head(n) = work.head(n);
  }
  return out;
}

/// Dense synthesis matrix (columns are the basis functions).
template <typename Scalar>
Matrix<Scalar> wavelet_synthesis_matrix(const WaveletBasisSpec& spec) {
  Matrix<Scalar> w(spec.length, spec.length);
  for (Index j = 0; j < spec.length; ++j)
    w.col(j) = wavelet_synthesize<Scalar>(Vector<Scalar>::Unit(spec.length, j), spec);
  return w;
}

}  // namespace deproj

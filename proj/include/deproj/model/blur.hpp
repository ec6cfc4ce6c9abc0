#pragma once

#include <deproj/core/error.hpp>
#include <deproj/model/psf.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <vector>

namespace deproj {

/// Smallest 2^a 3^b 5^c that is >= m.
inline Index next_fast_size(Index m) {
  for (Index k = std::max<Index>(m, 1);; ++k) {
    Index r = k;
    for (Index f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return k;
  }
}

/// Linear convolution of an n x n image with a centered stencil, zero padding
/// outside the field of view. Evaluated by FFT on an F x F torus with
/// F >= n + R so that no wrap-around reaches the visible window.
///
/// The FFT objects are created per call so the operator stays immutable and
/// can be shared between threads.
template <typename Scalar>
class BlurOperator {
  using Complex = std::complex<Scalar>;

 public:
  BlurOperator() = default;
  BlurOperator(Index n, const Grid<Scalar>& kernel) : n_(n) {
    DEPROJ_REQUIRE(kernel.rows() == kernel.cols() && kernel.rows() % 2 == 1, DimensionError,
                   "blur stencil must be square with odd side");
    const Index radius = kernel.rows() / 2;
    reach_ = std::min(radius, n - 1);
    if (reach_ == 0) {
      scale_ = kernel(radius, radius);
      return;
    }
    side_ = next_fast_size(n + reach_);
    std::vector<Complex> buf(static_cast<std::size_t>(side_ * side_), Complex(0));
    for (Index dy = -reach_; dy <= reach_; ++dy)
      for (Index dx = -reach_; dx <= reach_; ++dx)
        buf[at(wrap(dy), wrap(dx))] = Complex(kernel(dy + radius, dx + radius), 0);
    transform(buf, side_, false);
    kernel_hat_ = std::move(buf);
  }

  explicit BlurOperator(Index n, const PsfModel<Scalar>& psf) : BlurOperator(n, psf.kernel) {}

  Index n() const { return n_; }

  /// (B x)(p) = sum_q k(p - q) x(q)
  Vector<Scalar> apply(const Vector<Scalar>& image) const { return filter(image, false); }

  /// (B^T y)(q) = sum_p k(p - q) y(p)
  Vector<Scalar> adjoint(const Vector<Scalar>& image) const { return filter(image, true); }

 private:
  std::size_t at(Index row, Index col) const { return static_cast<std::size_t>(row * side_ + col); }
  Index wrap(Index d) const { return d < 0 ? d + side_ : d; }

  Vector<Scalar> filter(const Vector<Scalar>& image, bool conjugate) const {
    DEPROJ_REQUIRE(image.size() == n_ * n_, DimensionError, "blur input size mismatch");
    if (reach_ == 0) return scale_ * image;
    std::vector<Complex> buf(static_cast<std::size_t>(side_ * side_), Complex(0));
    for (Index y = 0; y < n_; ++y)
      for (Index x = 0; x < n_; ++x) buf[at(y, x)] = Complex(image(y * n_ + x), 0);
    transform(buf, n_, false);
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] *= conjugate ? std::conj(kernel_hat_[i]) : kernel_hat_[i];
    transform(buf, n_, true);
    Vector<Scalar> out(n_ * n_);
    for (Index y = 0; y < n_; ++y)
      for (Index x = 0; x < n_; ++x) out(y * n_ + x) = buf[at(y, x)].real();
    return out;
  }

  // 2-D transform of the side_ x side_ buffer. Only the first `live_rows`
  // rows carry data on input (forward) or are needed on output (inverse).
  void transform(std::vector<Complex>& buf, Index live_rows, bool inverse) const {
    Eigen::FFT<Scalar> fft;
    std::vector<Complex> in(static_cast<std::size_t>(side_)), out(static_cast<std::size_t>(side_));
    auto rows = [&] {
      for (Index r = 0; r < live_rows; ++r) {
        std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(at(r, 0)), side_, in.begin());
        if (inverse) fft.inv(out, in); else fft.fwd(out, in);
        std::copy(out.begin(), out.end(), buf.begin() + static_cast<std::ptrdiff_t>(at(r, 0)));
      }
    };
    auto cols = [&] {
      for (Index c = 0; c < side_; ++c) {
        for (Index r = 0; r < side_; ++r) in[static_cast<std::size_t>(r)] = buf[at(r, c)];
        if (inverse) fft.inv(out, in); else fft.fwd(out, in);
        for (Index r = 0; r < side_; ++r) buf[at(r, c)] = out[static_cast<std::size_t>(r)];
      }
    };
    if (inverse) {
      cols();
      rows();
    } else {
      rows();
      cols();
    }
  }

  Index n_ = 0;
  Index reach_ = 0;
  Index side_ = 0;
  Scalar scale_ = 1;
  std::vector<Complex> kernel_hat_;
};

template <typename Scalar>
Vector<Scalar> blur_apply(const PsfModel<Scalar>& psf, const Vector<Scalar>& image, Index n) {
  return BlurOperator<Scalar>(n, psf).apply(image);
}

template <typename Scalar>
Vector<Scalar> blur_adjoint(const PsfModel<Scalar>& psf, const Vector<Scalar>& image, Index n) {
  return BlurOperator<Scalar>(n, psf).adjoint(image);
}

}  // namespace deproj

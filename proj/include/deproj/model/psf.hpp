#pragma once

#include <deproj/core/error.hpp>
#include <deproj/core/types.hpp>

#include <cmath>

namespace deproj {

/// King-type point spread function (1 + (r/r0)^2)^(-alpha), sampled on integer
/// pixel offsets inside the circle where psf(r)/psf(0) >= tol.
template <typename Scalar>
struct PsfModel {
  Scalar r0 = Scalar(2.2364);
  Scalar alpha = Scalar(1.449);
  Scalar cutoff = 0;   // truncation radius in pixels
  Index radius = 0;    // half-width of the stencil
  Grid<Scalar> kernel; // (2*radius+1)^2, centered, unit sum

  Scalar at(Index dx, Index dy) const { return kernel(dy + radius, dx + radius); }
};

template <typename Scalar>
Scalar psf_profile(Scalar r, Scalar r0, Scalar alpha) {
  const Scalar u = r / r0;
  return std::pow(Scalar(1) + u * u, -alpha);
}

template <typename Scalar>
PsfModel<Scalar> build_psf_kernel(Scalar r0, Scalar alpha, Scalar tol = Scalar(1e-4)) {
  DEPROJ_REQUIRE(r0 > 0, DomainError, "psf core radius must be positive");
  DEPROJ_REQUIRE(alpha > 1, DomainError, "psf slope alpha must exceed 1 to be normalizable");
  DEPROJ_REQUIRE(tol > 0 && tol < 1, DomainError, "psf truncation tolerance must lie in (0, 1)");

  PsfModel<Scalar> psf;
  psf.r0 = r0;
  psf.alpha = alpha;
  // psf(r)/psf(0) = tol  <=>  r = r0 * sqrt(tol^(-1/alpha) - 1)
  psf.cutoff = r0 * std::sqrt(std::pow(tol, -Scalar(1) / alpha) - Scalar(1));
  psf.radius = static_cast<Index>(std::floor(psf.cutoff));
  const Index side = 2 * psf.radius + 1;
  psf.kernel = Grid<Scalar>::Zero(side, side);
  for (Index dy = -psf.radius; dy <= psf.radius; ++dy) {
    for (Index dx = -psf.radius; dx <= psf.radius; ++dx) {
      const Scalar r = std::sqrt(Scalar(dx * dx + dy * dy));
      if (r > psf.cutoff) continue;
      psf.kernel(dy + psf.radius, dx + psf.radius) = psf_profile(r, r0, alpha);
    }
  }
  psf.kernel /= psf.kernel.sum();
  return psf;
}

/// Unit impulse; useful for switching blur off.
template <typename Scalar>
PsfModel<Scalar> identity_psf() {
  PsfModel<Scalar> psf;
  psf.r0 = 0;
  psf.cutoff = 0;
  psf.radius = 0;
  psf.kernel = Grid<Scalar>::Ones(1, 1);
  return psf;
}

}  // namespace deproj

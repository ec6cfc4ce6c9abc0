#include <deproj/onion/onion.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace deproj {

namespace {

double cap32(double r, double s) {
  const double d = r * r - s * s;
  return d > 0 ? d * std::sqrt(d) : 0.0;
}

}  // namespace

double sphere_cylinder_volume(double r, double s) {
  // ball minus the two caps outside the cylinder
  return 4.0 * std::numbers::pi / 3.0 * (r * r * r - cap32(r, s));
}

ShellVolumeMatrix shell_volume_matrix(const RadialGrid<double>& grid) {
  const Index n = grid.n_r;
  ShellVolumeMatrix out{grid, Matrix<double>::Zero(n, n)};
  const double k = 4.0 * std::numbers::pi / 3.0;
  for (Index i = 0; i < n; ++i) {
    const double s_in = grid.edge(i), s_out = grid.edge(i + 1);
    const double area = std::numbers::pi * (s_out * s_out - s_in * s_in);
    for (Index j = i; j < n; ++j) {
      const double r_in = grid.edge(j), r_out = grid.edge(j + 1);
      const double vol = k * (cap32(r_out, s_in) - cap32(r_out, s_out) - cap32(r_in, s_in) +
                              cap32(r_in, s_out));
      out.V(i, j) = vol / area;
    }
  }
  return out;
}

bool AnnulusProfile::any_interpolated() const {
  for (bool b : interpolated)
    if (b) return true;
  return false;
}

AnnulusProfile annulus_profile(const PixelImage<double>& y, const SensitivityMap<double>& e_map,
                               const Vector<double>& background, const std::vector<Index>& mask,
                               const RadialGrid<double>& grid) {
  const Index n = y.n();
  DEPROJ_REQUIRE(e_map.n == n && background.size() == n * n, DimensionError,
                 "annulus inputs differ in size");
  std::vector<bool> dropped(static_cast<std::size_t>(n * n), false);
  for (Index p : mask) {
    DEPROJ_REQUIRE(p >= 0 && p < n * n, DomainError, "mask pixel outside the image");
    dropped[std::size_t(p)] = true;
  }

  const Index nr = grid.n_r;
  AnnulusProfile out;
  out.grid = grid;
  out.intensity = Vector<double>::Zero(nr);
  out.pixels.assign(std::size_t(nr), 0);
  out.masked.assign(std::size_t(nr), 0);
  out.interpolated.assign(std::size_t(nr), false);
  std::vector<Index> used(std::size_t(nr), 0);

  for (Index py = 0; py < n; ++py) {
    for (Index px = 0; px < n; ++px) {
      const double r = std::hypot(px + 0.5 - y.center.x(), py + 0.5 - y.center.y());
      if (r >= grid.r_max) continue;
      const std::size_t a = std::size_t(grid.shell_of(r));
      const Index p = pixel_index(px, py, n);
      ++out.pixels[a];
      const double e = e_map.values(p);
      if (dropped[std::size_t(p)] || !(e > 0)) {
        ++out.masked[a];
        continue;
      }
      out.intensity(Index(a)) += (y.values(py, px) - background(p)) / e;
      ++used[a];
    }
  }

  bool any = false;
  for (Index a = 0; a < nr; ++a) {
    if (used[std::size_t(a)] > 0) {
      out.intensity(a) /= double(used[std::size_t(a)]);
      any = true;
    } else {
      out.interpolated[std::size_t(a)] = true;
    }
  }
  DEPROJ_REQUIRE(any, DomainError, "every annulus is empty or masked");

  // linear interpolation between the nearest usable annuli, constant at the ends
  for (Index a = 0; a < nr; ++a) {
    if (!out.interpolated[std::size_t(a)]) continue;
    Index lo = a - 1, hi = a + 1;
    while (lo >= 0 && out.interpolated[std::size_t(lo)]) --lo;
    while (hi < nr && out.interpolated[std::size_t(hi)]) ++hi;
    if (lo < 0) {
      out.intensity(a) = out.intensity(hi);
    } else if (hi >= nr) {
      out.intensity(a) = out.intensity(lo);
    } else {
      const double t = double(a - lo) / double(hi - lo);
      out.intensity(a) = (1 - t) * out.intensity(lo) + t * out.intensity(hi);
    }
  }
  return out;
}

OnionEstimate onion_deproject(const AnnulusProfile& profile, const ShellVolumeMatrix& volumes) {
  const Index nr = volumes.grid.n_r;
  DEPROJ_REQUIRE(profile.intensity.size() == nr && volumes.V.rows() == nr, DimensionError,
                 "annulus profile and shell volumes differ in size");
  OnionEstimate out;
  out.emissivity = Vector<double>::Zero(nr);
  for (Index i = nr - 1; i >= 0; --i) {
    const double diag = volumes.V(i, i);
    if (!(diag > 0)) throw NumericalError("singular shell-volume system at annulus " + std::to_string(i));
    double rhs = profile.intensity(i);
    for (Index j = i + 1; j < nr; ++j) rhs -= volumes.V(i, j) * out.emissivity(j);
    out.emissivity(i) = rhs / diag;
  }
  out.clamped = out.emissivity.cwiseMax(0.0);
  return out;
}

}  // namespace deproj

#pragma once

#include <deproj/model/pixel_image.hpp>
#include <deproj/model/radial_grid.hpp>

#include <vector>

namespace deproj {

/// Row i: projected annulus i, column j: spherical shell j. Entry is the volume
/// of the shell inside the cylinder over the annulus, per unit annulus area.
struct ShellVolumeMatrix {
  RadialGrid<double> grid;
  Matrix<double> V;  // upper triangular
};

/// Volume of the solid sphere of radius r inside the cylinder of radius s.
double sphere_cylinder_volume(double r, double s);

ShellVolumeMatrix shell_volume_matrix(const RadialGrid<double>& grid);

struct AnnulusProfile {
  RadialGrid<double> grid;
  Vector<double> intensity;         // mean of (y - e)/E over usable pixels
  std::vector<Index> pixels;        // pixels whose center falls in the annulus
  std::vector<Index> masked;        // of those, excluded (masked or E = 0)
  std::vector<bool> interpolated;   // no usable pixel; value taken from neighbors
  bool any_interpolated() const;
};

/// Azimuthal averages by projected radius of the pixel center. `mask` lists
/// flat pixel indices to drop; pixels with E = 0 are dropped as well.
AnnulusProfile annulus_profile(const PixelImage<double>& y, const SensitivityMap<double>& e_map,
                               const Vector<double>& background, const std::vector<Index>& mask,
                               const RadialGrid<double>& grid);

struct OnionEstimate {
  Vector<double> emissivity;  // raw; may be negative
  Vector<double> clamped;     // floored at zero
};

/// Back-substitution from the outermost shell inwards.
OnionEstimate onion_deproject(const AnnulusProfile& profile, const ShellVolumeMatrix& volumes);

}  // namespace deproj

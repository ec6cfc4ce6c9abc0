#pragma once

#include <deproj/core/error.hpp>
#include <deproj/model/radial_grid.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace deproj {

/// Core radii and slopes of the King-type atoms (1 + (r/rho)^2)^(-beta).
/// Atoms are ordered rho-major: atom i*J + j has rho_i and beta_j.
struct KingGrid {
  std::vector<double> rho_values;
  std::vector<double> beta_values;

  Index size() const { return static_cast<Index>(rho_values.size() * beta_values.size()); }
  bool operator==(const KingGrid&) const = default;
};

template <typename Scalar>
Scalar king_value(Scalar r, Scalar rho, Scalar beta) {
  const Scalar u = r / rho;
  return std::pow(Scalar(1) + u * u, -beta);
}

/// Factor pair (I, J) of `atoms` with J the largest divisor <= sqrt(atoms).
inline std::pair<Index, Index> king_factor_pair(Index atoms) {
  Index j = 1;
  for (Index d = 1; d * d <= atoms; ++d)
    if (atoms % d == 0) j = d;
  return {atoms / j, j};
}

/// Default grid: rho log-spaced over [1, r_max/2], beta linear over [0.6, 3.0].
inline KingGrid default_king_grid(double r_max, Index atoms, double rho_min = 1.0,
                                  double beta_min = 0.6, double beta_max = 3.0) {
  DEPROJ_REQUIRE(atoms > 0, ValidationError, "king grid must have at least one atom");
  const auto [n_rho, n_beta] = king_factor_pair(atoms);
  const double rho_max = std::max(rho_min, r_max / 2);
  KingGrid g;
  for (Index i = 0; i < n_rho; ++i) {
    const double t = n_rho == 1 ? 0.0 : double(i) / double(n_rho - 1);
    g.rho_values.push_back(rho_min * std::pow(rho_max / rho_min, t));
  }
  for (Index j = 0; j < n_beta; ++j) {
    const double t = n_beta == 1 ? 0.0 : double(j) / double(n_beta - 1);
    g.beta_values.push_back(beta_min + t * (beta_max - beta_min));
  }
  return g;
}

/// L x (I*J) matrix: column p is atom p evaluated at |signed radius| of each
/// doubled-grid cell.
template <typename Scalar>
Matrix<Scalar> build_king_atoms(const RadialGrid<Scalar>& grid, const KingGrid& king,
                                Index expected_atoms) {
  DEPROJ_REQUIRE(king.size() == expected_atoms, ValidationError,
                 "king grid has " + std::to_string(king.size()) + " atoms, layout expects " +
                     std::to_string(expected_atoms));
  for (double rho : king.rho_values)
    DEPROJ_REQUIRE(rho > 0, ValidationError, "king core radii must be positive");
  for (double beta : king.beta_values)
    DEPROJ_REQUIRE(beta > 0, ValidationError, "king slopes must be positive");
  const Index length = grid.doubled_length();
  Matrix<Scalar> atoms(length, king.size());
  Index col = 0;
  for (double rho : king.rho_values) {
    for (double beta : king.beta_values) {
      for (Index k = 0; k < length; ++k) {
        const Scalar r = std::abs(DoubledProfile<Scalar>::signed_radius(grid, k));
        atoms(k, col) = king_value(r, Scalar(rho), Scalar(beta));
      }
      ++col;
    }
  }
  return atoms;
}

}  // namespace deproj

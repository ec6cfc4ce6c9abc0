#pragma once

#include <deproj/core/random.hpp>
#include <deproj/experiments/experiments.hpp>

#include <cmath>
#include <random>

namespace deproj::test {

inline double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline VectorXd random_vector(Index size, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(size);
  for (Index i = 0; i < size; ++i) v(i) = u(rng);
  return v;
}

/// Random but valid model: perturbed center, partly dead sensitivity map,
/// random PSF, either sector mode.
inline Model random_model(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  const Point2<double> center(n / 2.0 + u(rng) - 0.5, n / 2.0 + u(rng) - 0.5);
  SensitivityMap<double> sens = SensitivityMap<double>::uniform(n);
  for (Index i = 0; i < n * n; ++i) sens.values(i) = u(rng) < 0.05 ? 0.0 : 0.5 + 0.5 * u(rng);
  const auto psf = build_psf_kernel(1.0 + 2.0 * u(rng), 1.2 + u(rng), 1e-3);
  const VectorXd background = VectorXd::Constant(n * n, 1e-3 + 1e-2 * u(rng));
  const SectorMode mode = u(rng) < 0.5 ? SectorMode::kLeftRight : SectorMode::kSymmetric;
  return Model::with_defaults(n, center, psf, sens, background, mode);
}

/// Small default model with a centered grid.
inline Model small_model(Index n, double background = 1e-2) {
  ScenarioConfig sc;
  sc.n = n;
  sc.background = background;
  return scenario_model(sc);
}

/// Explicit design matrix [x0 | X1 | X2] built column by column from the
/// forward operator.
inline Matrix<double> explicit_design(const Model& model) {
  const Index np = model.pixels();
  const Index k = model.dictionary().n_penalized();
  Matrix<double> X(np, 1 + k + np);
  const VectorXd no_sources = VectorXd::Zero(np);
  X.col(0) = model.linear_image(VectorXd::Ones(model.dictionary().length()), no_sources);
  for (Index j = 0; j < k; ++j)
    X.col(1 + j) = model.linear_image(model.dictionary().column(j), no_sources);
  for (Index p = 0; p < np; ++p)
    X.col(1 + k + p) =
        model.linear_image(VectorXd::Zero(model.dictionary().length()), VectorXd::Unit(np, p));
  return X;
}

/// Poisson image from a smooth positive profile, always inside the domain.
inline VectorXd poisson_scene(const Model& model, double peak, std::mt19937_64& rng) {
  const auto profile = make_test_profile("cosmo1", model.grid(), peak);
  const VectorXd mu = model.background() +
                      model.linear_image(profile.values, VectorXd::Zero(model.pixels()));
  VectorXd y(mu.size());
  for (Index i = 0; i < mu.size(); ++i) y(i) = double(poisson_draw(mu(i), rng));
  return y;
}

/// Bisection root of g(a) = x0.1 - x0.(y/(e + x0 a)) with no Newton steps.
inline double bisect_alpha0(const VectorXd& y, const VectorXd& e, const VectorXd& x0) {
  auto g = [&](double a) {
    double v = 0;
    for (Index i = 0; i < y.size(); ++i) {
      const double mu = e(i) + x0(i) * a;
      v += x0(i) - (y(i) > 0 ? x0(i) * y(i) / mu : 0.0);
    }
    return v;
  };
  double lo = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < y.size(); ++i)
    if (x0(i) > 0 && y(i) > 0) lo = std::max(lo, -e(i) / x0(i));
  double step = 1;
  lo += 1e-300;
  double hi = std::max(lo, 0.0) + step;
  while (g(hi) < 0) hi += (step *= 2);
  lo = std::nextafter(lo, hi);
  for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace deproj::test

#include "../support.hpp"

#include <doctest.h>

using namespace deproj;
using deproj::test::rel_gap;

namespace {

// Direct zero-padded convolution.
VectorXd convolve_direct(const PsfModel<double>& psf, const VectorXd& img, Index n) {
  VectorXd out = VectorXd::Zero(n * n);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x)
      for (Index dy = -psf.radius; dy <= psf.radius; ++dy)
        for (Index dx = -psf.radius; dx <= psf.radius; ++dx) {
          const Index sx = x - dx, sy = y - dy;
          if (sx < 0 || sy < 0 || sx >= n || sy >= n) continue;
          out(y * n + x) += psf.at(dx, dy) * img(sy * n + sx);
        }
  return out;
}

// Line-of-sight integral of a shell-constant profile by the midpoint rule.
double chord_quadrature(const VectorXd& half, const RadialGrid<double>& grid, double s) {
  const int steps = 200000;
  const double lmax = std::sqrt(std::max(0.0, grid.r_max * grid.r_max - s * s));
  const double h = 2 * lmax / steps;
  double acc = 0;
  for (int i = 0; i < steps; ++i) {
    const double l = -lmax + (i + 0.5) * h;
    const double r = std::hypot(s, l);
    if (r >= grid.r_max) continue;
    acc += half(grid.shell_of(r)) * h;
  }
  return acc;
}

}  // namespace

TEST_CASE("radial grid covers the image") {
  const auto g = build_radial_grid<double>(128, Point2<double>(64, 64));
  CHECK(g.n_r == 64);
  CHECK(g.r_max == doctest::Approx(64 * std::sqrt(2.0)));
  const auto g2 = build_radial_grid<double>(100, Point2<double>(40, 50));
  CHECK(g2.n_r == 32);
  CHECK(g2.r_max == doctest::Approx(std::hypot(60.0, 50.0)));
}

TEST_CASE("doubled profile halves") {
  const RadialGrid<double> g(4, 8.0);
  VectorXd left(4), right(4);
  left << 1, 2, 3, 4;
  right << 5, 6, 7, 8;
  const auto p = DoubledProfile<double>::from_halves(g, left, right);
  CHECK(p.values(0) == 4);
  CHECK(p.values(3) == 1);
  CHECK(p.values(4) == 5);
  CHECK(p.left(2) == 3);
  CHECK(p.right(2) == 7);
  CHECK(p.mean_half()(1) == 4);
  CHECK(DoubledProfile<double>::signed_radius(g, 3) == -1);
  CHECK(DoubledProfile<double>::signed_radius(g, 4) == 1);
}

TEST_CASE("psf kernel is normalized and truncated at the tolerance") {
  const auto psf = build_psf_kernel(2.2364, 1.449, 1e-4);
  CHECK(psf.kernel.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(psf_profile(psf.cutoff, psf.r0, psf.alpha) == doctest::Approx(1e-4).epsilon(1e-10));
  CHECK(psf.radius == Index(std::floor(psf.cutoff)));
  CHECK(psf.at(3, 1) == psf.at(-1, 3));
  CHECK_THROWS_AS(build_psf_kernel(2.0, 1.0), DomainError);
  CHECK_THROWS_AS(build_psf_kernel(-1.0, 1.5), DomainError);
}

TEST_CASE("fft blur matches direct convolution") {
  std::mt19937_64 rng(3);
  for (Index n : {8, 13, 32}) {
    const auto psf = build_psf_kernel(2.2364, 1.449, 1e-4);
    const VectorXd img = test::random_vector(n * n, rng, 0, 1);
    const VectorXd fast = blur_apply(psf, img, n);
    const VectorXd slow = convolve_direct(psf, img, n);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-12 * slow.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("identity psf leaves images unchanged") {
  std::mt19937_64 rng(4);
  const VectorXd img = test::random_vector(64, rng);
  CHECK((blur_apply(identity_psf<double>(), img, 8) - img).norm() == 0);
}

TEST_CASE("chord weights integrate a shell-constant profile") {
  const RadialGrid<double> g(16, 20.0);
  std::mt19937_64 rng(5);
  const VectorXd half = test::random_vector(16, rng, 0, 1);
  for (double s : {0.3, 4.1, 11.7, 19.2}) {
    const double exact = chord_weights(s, g).dot(half);
    CHECK(exact == doctest::Approx(chord_quadrature(half, g, s)).epsilon(1e-4));
  }
  CHECK(chord_weights(0.0, g).sum() == doctest::Approx(40.0));
}

TEST_CASE("abel operator routes left and right pixels") {
  const Index n = 8;
  const Point2<double> c(4, 4);
  const auto grid = build_radial_grid<double>(n, c);
  VectorXd left = VectorXd::Zero(grid.n_r), right = VectorXd::Ones(grid.n_r);
  const auto p = DoubledProfile<double>::from_halves(grid, left, right);
  const VectorXd img = AbelOperator<double>(n, c, grid, SectorMode::kLeftRight).apply(p.values);
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) {
      const double s = std::hypot(x + 0.5 - 4, y + 0.5 - 4);
      const double expected = x < 4 ? 0.0 : chord_weights(s, grid).sum();
      CHECK(img(y * n + x) == doctest::Approx(expected).epsilon(1e-14));
    }
  const VectorXd sym = AbelOperator<double>(n, c, grid, SectorMode::kSymmetric).apply(p.values);
  CHECK(sym(0) == doctest::Approx(0.5 * chord_weights(std::hypot(3.5, 3.5), grid).sum()));
}

TEST_CASE("king beta=1 projection converges to the closed form") {
  // finite support: exact projection of (1 + r^2/rho^2)^-1 cut at r_max
  const double rho = 0.05, R = 1.0;
  auto exact = [&](double s) {
    const double q = std::sqrt(rho * rho + s * s);
    return 2 * rho * rho / q * std::atan(std::sqrt(R * R - s * s) / q);
  };
  double prev = 0;
  for (Index nr : {256, 512}) {
    const RadialGrid<double> g(nr, R);
    VectorXd half(nr);
    for (Index j = 0; j < nr; ++j) half(j) = king_value(g.mid(j), rho, 1.0);
    double worst = 0;
    for (int i = 0; i <= 100; ++i) {
      const double s = rho * (0.5 + 4.5 * i / 100.0);
      worst = std::max(worst, rel_gap(chord_weights(s, g).dot(half), exact(s)));
    }
    CHECK(worst <= 0.01);
    if (prev > 0) CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("forward model composes background, blur, sensitivity and abel") {
  std::mt19937_64 rng(6);
  const Model m = test::random_model(16, rng);
  const VectorXd alpha = test::random_vector(m.dictionary().n_penalized(), rng);
  const VectorXd s = test::random_vector(m.pixels(), rng, 0, 1);
  const VectorXd profile = m.dictionary().synthesize(0.3, alpha);
  VectorXd inner = m.abel().apply(profile) + s;
  inner.array() *= m.sensitivity().values.array();
  const VectorXd expected = m.background() + convolve_direct(m.psf(), inner, 16);
  CHECK((m.mu(0.3, alpha, s) - expected).cwiseAbs().maxCoeff() <= 1e-12 * expected.norm());
}

TEST_CASE("a source on a dead pixel is invisible") {
  SensitivityMap<double> sens = SensitivityMap<double>::uniform(8);
  sens.mask(3, 5);
  const Model m = Model::with_defaults(8, Point2<double>(4, 4), build_psf_kernel(2.2364, 1.449),
                                       sens, VectorXd::Constant(64, 0.1));
  VectorXd s = VectorXd::Zero(64);
  s(pixel_index(3, 5, 8)) = 10;
  const VectorXd mu = m.mu(0, VectorXd::Zero(m.dictionary().n_penalized()), s);
  CHECK((mu - m.background()).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("operator adjoints") {
  std::mt19937_64 rng(7);
  for (Index n : {8, 16, 32}) {
    for (int rep = 0; rep < 5; ++rep) {
      const Model m = test::random_model(n, rng);
      const VectorXd w = test::random_vector(m.pixels(), rng);
      const VectorXd prof = test::random_vector(m.dictionary().length(), rng);
      const VectorXd img = test::random_vector(m.pixels(), rng);
      CHECK(rel_gap(w.dot(m.abel().apply(prof)), m.abel().adjoint(w).dot(prof)) <= 1e-10);
      CHECK(rel_gap(w.dot(m.blur().apply(img)), m.blur().adjoint(w).dot(img)) <= 1e-10);
      const VectorXd alpha = test::random_vector(m.dictionary().n_penalized(), rng);
      const VectorXd s = test::random_vector(m.pixels(), rng);
      const auto adj = m.adjoint(w);
      const double lhs = w.dot(m.linear_part(0.7, alpha, s));
      const double rhs = 0.7 * adj.alpha0 + adj.alpha.dot(alpha) + adj.s.dot(s);
      CHECK(rel_gap(lhs, rhs) <= 1e-10);
    }
  }
}

TEST_CASE("adjoint matches the explicit design matrix") {
  std::mt19937_64 rng(8);
  const Model m = test::random_model(8, rng);
  const Matrix<double> X = test::explicit_design(m);
  const VectorXd w = test::random_vector(m.pixels(), rng);
  const VectorXd g = X.transpose() * w;
  const auto adj = m.adjoint(w);
  const Index k = m.dictionary().n_penalized();
  CHECK(adj.alpha0 == doctest::Approx(g(0)).epsilon(1e-12));
  CHECK((adj.alpha - g.segment(1, k)).cwiseAbs().maxCoeff() <= 1e-12 * g.cwiseAbs().maxCoeff());
  CHECK((adj.s - g.tail(m.pixels())).cwiseAbs().maxCoeff() <= 1e-12 * g.cwiseAbs().maxCoeff());
  CHECK((X.col(0) - m.x0()).cwiseAbs().maxCoeff() <= 1e-12 * m.x0().maxCoeff());
}

TEST_CASE("dimension errors") {
  const Model m = test::small_model(8);
  CHECK_THROWS_AS(m.mu(0, VectorXd::Zero(3), VectorXd::Zero(64)), DimensionError);
  CHECK_THROWS_AS(m.adjoint(VectorXd::Zero(10)), DimensionError);
  CHECK_THROWS_AS(build_radial_grid<double>(4, Point2<double>(2, 2)), DimensionError);
  PixelImage<double> img;
  img.values = Grid<double>::Constant(8, 8, -1.0);
  img.center = Point2<double>(4, 4);
  CHECK_THROWS_AS(img.validate(), ValidationError);
}

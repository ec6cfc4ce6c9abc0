#include "../support.hpp"

#include <doctest.h>

#include <numeric>

using namespace deproj;

TEST_CASE("daubechies filters are orthonormal") {
  for (int vm = 1; vm <= 4; ++vm) {
    const auto h = daubechies_lowpass(vm);
    CHECK(h.size() == std::size_t(2 * vm));
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(std::sqrt(2.0)));
    for (std::size_t shift = 0; shift < h.size(); shift += 2) {
      double c = 0;
      for (std::size_t i = 0; i + shift < h.size(); ++i) c += h[i] * h[i + shift];
      CHECK(c == doctest::Approx(shift == 0 ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(daubechies_lowpass(7), ValidationError);
}

TEST_CASE("wavelet transform is orthonormal") {
  std::mt19937_64 rng(11);
  for (int vm = 1; vm <= 4; ++vm) {
    for (Index len : {8, 32, 128}) {
      WaveletBasisSpec spec{vm, -1, len};
      const VectorXd x = test::random_vector(len, rng);
      const VectorXd c = wavelet_analyze<double>(x, spec);
      CHECK(c.norm() == doctest::Approx(x.norm()).epsilon(1e-12));
      CHECK((wavelet_synthesize<double>(c, spec) - x).norm() <= 1e-12 * x.norm());
      const Matrix<double> W = wavelet_synthesis_matrix<double>(spec);
      CHECK((W.transpose() * W - Matrix<double>::Identity(len, len)).cwiseAbs().maxCoeff() <=
            1e-12);
    }
  }
}

TEST_CASE("haar coarse coefficient is the scaled mean") {
  WaveletBasisSpec spec{1, -1, 8};
  VectorXd x(8);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  const VectorXd c = wavelet_analyze<double>(x, spec);
  CHECK(c(0) == doctest::Approx(36 / std::sqrt(8.0)));
}

TEST_CASE("wavelet spec validation") {
  CHECK_THROWS_AS(validate_wavelet_spec({4, -1, 12}), DimensionError);
  CHECK_THROWS_AS(validate_wavelet_spec({4, 5, 16}), DimensionError);
  CHECK_NOTHROW(validate_wavelet_spec({2, 2, 16}));
}

TEST_CASE("king grid factorization") {
  CHECK(king_factor_pair(64) == std::pair<Index, Index>{8, 8});
  CHECK(king_factor_pair(32) == std::pair<Index, Index>{8, 4});
  CHECK(king_factor_pair(7) == std::pair<Index, Index>{7, 1});
  const auto g = default_king_grid(90.0, 16);
  CHECK(g.size() == 16);
  CHECK(g.rho_values.front() == doctest::Approx(1.0));
  CHECK(g.rho_values.back() == doctest::Approx(45.0));
  CHECK(g.beta_values.front() == doctest::Approx(0.6));
  CHECK(g.beta_values.back() == doctest::Approx(3.0));
  CHECK(king_value(2.0, 2.0, 1.5) == doctest::Approx(std::pow(2.0, -1.5)));
}

TEST_CASE("dictionary layout and adjoint") {
  const auto grid = build_radial_grid<double>(32, Point2<double>(16, 16));
  const auto dict = Dictionary<double>::with_defaults(grid);
  CHECK(dict.n_king() == grid.n_r);
  CHECK(dict.n_wavelet() == 2 * grid.n_r);
  CHECK(dict.n_penalized() == 3 * grid.n_r);
  CHECK((dict.king_atoms().array() >= 0).all());
  // king atoms are symmetric on the doubled grid
  const VectorXd a0 = dict.column(0);
  CHECK((a0 - a0.reverse()).norm() == 0);

  std::mt19937_64 rng(12);
  const VectorXd alpha = test::random_vector(dict.n_penalized(), rng);
  VectorXd by_columns = VectorXd::Constant(dict.length(), 0.25);
  for (Index j = 0; j < dict.n_penalized(); ++j) by_columns += alpha(j) * dict.column(j);
  CHECK((dict.synthesize(0.25, alpha) - by_columns).norm() <= 1e-12 * by_columns.norm());

  const VectorXd g = test::random_vector(dict.length(), rng);
  const VectorXd ga = dict.analyze(g);
  CHECK(test::rel_gap(ga.dot(alpha), g.dot(dict.synthesize(0, alpha))) <= 1e-12);
  CHECK_THROWS_AS(dict.synthesize(0, VectorXd::Zero(5)), DimensionError);
}

TEST_CASE("clamped profile never goes negative") {
  const auto grid = build_radial_grid<double>(16, Point2<double>(8, 8));
  const auto dict = Dictionary<double>::with_defaults(grid);
  VectorXd alpha = VectorXd::Zero(dict.n_penalized());
  alpha(dict.wavelet_offset() + 3) = -5;
  const auto p = synthesize_profile_clamped(0.0, alpha, dict);
  CHECK((p.values.array() >= 0).all());
  CHECK((synthesize_profile(0.0, alpha, dict).values.array() < 0).any());
}

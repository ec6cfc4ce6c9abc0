#include <deproj/experiments/experiments.hpp>

#include <deproj/core/parallel.hpp>
#include <deproj/core/random.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace deproj {

void ScenarioConfig::validate() const {
  DEPROJ_REQUIRE(n >= 8, ValidationError, "scenario image side must be >= 8");
  DEPROJ_REQUIRE(profile == "cosmoBlocks" || profile == "cosmo1" || profile == "cosmo2" ||
                     profile == "custom",
                 ValidationError, "unknown profile '" + profile + "'");
  DEPROJ_REQUIRE(amplitude_min >= 0 && amplitude_max >= amplitude_min, ValidationError,
                 "source amplitudes must satisfy 0 <= min <= max");
  DEPROJ_REQUIRE(effective_source_count() <= n * n, ValidationError,
                 "more sources than pixels");
  DEPROJ_REQUIRE(background >= 0 && std::isfinite(background), ValidationError,
                 "background must be finite and non-negative");
  DEPROJ_REQUIRE(exposure >= 0 && std::isfinite(exposure), ValidationError,
                 "exposure must be finite and non-negative");
  DEPROJ_REQUIRE(sensitivity > 0 && sensitivity <= 1, ValidationError,
                 "sensitivity must lie in (0, 1]");
  DEPROJ_REQUIRE(replicates >= 1, ValidationError, "need at least one replicate");
  DEPROJ_REQUIRE(psf_r0 > 0 && psf_alpha > 1 && psf_tol > 0 && psf_tol < 1, ValidationError,
                 "psf needs r0 > 0, alpha > 1 and 0 < tol < 1");
  dictionary.validate();
}

void DictionaryConfig::validate() const {
  DEPROJ_REQUIRE(vanishing_moments >= 1 && vanishing_moments <= 4, ValidationError,
                 "wavelet vanishing moments must lie in 1..4");
  DEPROJ_REQUIRE(depth >= -1, ValidationError, "wavelet depth must be -1 (full) or >= 0");
  DEPROJ_REQUIRE(rho_min > 0, ValidationError, "King rho_min must be positive");
  DEPROJ_REQUIRE(beta_min > 0 && beta_max >= beta_min, ValidationError,
                 "King slopes must satisfy 0 < beta_min <= beta_max");
}

namespace {

// Jump locations and heights of the blocks test signal on [0, 1].
constexpr std::array<double, 11> kBlockJumps = {0.10, 0.13, 0.15, 0.23, 0.25, 0.40,
                                                0.44, 0.65, 0.76, 0.78, 0.81};
constexpr std::array<double, 11> kBlockHeights = {4.0, -5.0, 3.0, -4.0, 5.0, -4.2,
                                                  2.1, 4.3, -3.1, 2.1, -4.2};
constexpr double kBlocksDecay = 4.0;    // envelope exp(-decay * t)
constexpr double kBlocksContrast = 0.15;

double blocks_shape(double t) {
  double level = 0, start = 0;
  for (std::size_t j = 0; j < kBlockJumps.size(); ++j) {
    if (t < kBlockJumps[j]) break;
    level += kBlockHeights[j];
    start = kBlockJumps[j];
  }
  // piecewise constant: envelope frozen at the start of each block
  return std::exp(-kBlocksDecay * start) * (1.0 + kBlocksContrast * level);
}

double shape_max(const std::string& name) {
  if (name == "cosmoBlocks") {
    double m = blocks_shape(0);
    for (double t : kBlockJumps) m = std::max(m, blocks_shape(t));
    return m;
  }
  if (name == "cosmo2") return 1.1;
  return 1.0;
}

}  // namespace

double test_profile_shape(const std::string& name, double r, double r_max) {
  const double t = r / r_max;
  if (name == "cosmoBlocks") return blocks_shape(t) / shape_max(name);
  if (name == "cosmo1") return king_value(r, 0.1 * r_max, 1.2);
  if (name == "cosmo2")
    return (king_value(r, 0.05 * r_max, 1.5) + 0.1 * king_value(r, 0.4 * r_max, 2.0)) /
           shape_max(name);
  throw ValidationError("unknown profile '" + name + "'");
}

double default_peak(const std::string& name, const RadialGrid<double>& grid) {
  // the central chord crosses every shell twice
  double projection = 0;
  for (Index j = 0; j < grid.n_r; ++j)
    projection += 2.0 * grid.dr() * test_profile_shape(name, grid.mid(j), grid.r_max);
  return 1.0 / projection;
}

DoubledProfile<double> make_test_profile(const std::string& name, const RadialGrid<double>& grid,
                                         double peak, const std::vector<double>& custom) {
  VectorXd half(grid.n_r);
  if (name == "custom") {
    DEPROJ_REQUIRE(Index(custom.size()) == grid.n_r, ValidationError,
                   "custom profile has " + std::to_string(custom.size()) + " values, grid has " +
                       std::to_string(grid.n_r) + " shells");
    for (Index j = 0; j < grid.n_r; ++j) {
      DEPROJ_REQUIRE(custom[std::size_t(j)] >= 0 && std::isfinite(custom[std::size_t(j)]),
                     ValidationError, "custom profile values must be finite and non-negative");
      half(j) = custom[std::size_t(j)];
    }
    return DoubledProfile<double>::symmetric(grid, half);
  }
  const double scale = peak > 0 ? peak : default_peak(name, grid);
  for (Index j = 0; j < grid.n_r; ++j)
    half(j) = scale * test_profile_shape(name, grid.mid(j), grid.r_max);
  return DoubledProfile<double>::symmetric(grid, half);
}

PointSourceSet sample_point_sources(Index n, int count, double amp_min, double amp_max,
                                    std::mt19937_64& rng) {
  DEPROJ_REQUIRE(count >= 0 && Index(count) <= n * n, ValidationError,
                 "source count must lie in [0, n^2]");
  DEPROJ_REQUIRE(amp_min >= 0 && amp_max >= amp_min, ValidationError,
                 "source amplitudes must satisfy 0 <= min <= max");
  // partial Fisher-Yates over pixel indices
  std::vector<Index> pixels(std::size_t(n * n));
  std::iota(pixels.begin(), pixels.end(), Index(0));
  PointSourceSet out;
  std::uniform_real_distribution<double> amp(amp_min, amp_max);
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(std::size_t(k), pixels.size() - 1);
    std::swap(pixels[std::size_t(k)], pixels[pick(rng)]);
    const Index p = pixels[std::size_t(k)];
    out.push_back({p % n, p / n, amp_min == amp_max ? amp_min : amp(rng)});
  }
  return out;
}

VectorXd source_image(const PointSourceSet& sources, Index n) {
  VectorXd s = VectorXd::Zero(n * n);
  for (const auto& src : sources) {
    DEPROJ_REQUIRE(src.x >= 0 && src.x < n && src.y >= 0 && src.y < n, DomainError,
                   "point source outside the image");
    s(pixel_index(src.x, src.y, n)) += src.amplitude;
  }
  return s;
}

PixelImage<double> simulate_image(const Model& model, const DoubledProfile<double>& profile,
                                  const PointSourceSet& sources, double exposure,
                                  std::mt19937_64& rng) {
  DEPROJ_REQUIRE(profile.grid == model.grid(), DimensionError,
                 "profile grid does not match the model grid");
  DEPROJ_REQUIRE(exposure >= 0, DomainError, "exposure must be non-negative");
  const VectorXd mu =
      exposure * (model.background() +
                  model.linear_image(profile.values, source_image(sources, model.n())));
  VectorXd y(mu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    if (!std::isfinite(mu(i))) throw NumericalError("non-finite simulated intensity");
    y(i) = double(poisson_draw(mu(i), rng));
  }
  return PixelImage<double>::from_flat(y, model.n(), model.center(), ValueKind::kCounts);
}

double log_mse(const VectorXd& estimate, const VectorXd& truth, double floor) {
  DEPROJ_REQUIRE(estimate.size() == truth.size(), DimensionError,
                 "estimate and truth lie on different grids");
  DEPROJ_REQUIRE(floor > 0, DomainError, "log floor must be positive");
  double acc = 0;
  Index bins = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (!(truth(i) > floor)) continue;
    const double d = std::log(std::max(estimate(i), floor)) - std::log(truth(i));
    acc += d * d;
    ++bins;
  }
  DEPROJ_REQUIRE(bins > 0, DomainError, "every truth bin lies below the log floor");
  return 100.0 * acc / double(bins);
}

Model scenario_model(const ScenarioConfig& sc, bool exposure_scaled,
                     const std::vector<Index>& dead_pixels,
                     const std::optional<Point2<double>>& image_center) {
  const Point2<double> center = image_center.value_or(Point2<double>(double(sc.n) / 2, double(sc.n) / 2));
  auto sens = SensitivityMap<double>::uniform(sc.n, sc.sensitivity);
  for (Index p : dead_pixels) sens.values(p) = 0;
  const double level = exposure_scaled ? sc.exposure * sc.background : sc.background;
  const auto grid = build_radial_grid<double>(sc.n, center);
  const auto& dc = sc.dictionary;
  Dictionary<double> dict(grid,
                          default_king_grid(grid.r_max, grid.n_r, dc.rho_min, dc.beta_min,
                                            dc.beta_max),
                          dc.vanishing_moments, dc.depth);
  return Model(sc.n, center, build_psf_kernel(sc.psf_r0, sc.psf_alpha, sc.psf_tol), sens,
               VectorXd::Constant(sc.n * sc.n, level), sc.mode, std::move(dict));
}

QutLassoFit fit_qut_lasso(const VectorXd& y, const Model& model, const FitRequest& req) {
  DEPROJ_REQUIRE(req.exposure > 0, DomainError, "exposure must be positive to rescale a fit");
  QutLassoFit out;
  out.zero = zero_threshold(y, model);
  if (!out.zero.in_domain) throw NotInDomainError("image lies outside the domain of the null model");

  out.user_lambda = req.lambda1.has_value() && req.lambda2.has_value();
  double l1, l2;
  if (out.user_lambda) {
    l1 = *req.lambda1;
    l2 = *req.lambda2;
  } else {
    out.qut = qut_thresholds(model, out.zero.alpha0_hat, req.qut);
    l1 = req.lambda1.value_or(out.qut.lambda1);
    l2 = req.lambda2.value_or(out.qut.lambda2);
  }
  out.fit = fit_fista(y, model, l1, l2, req.solver, Coefficients::zeros(model, out.zero.alpha0_hat));
  out.profile = synthesize_profile(out.fit.coefficients.alpha0, out.fit.coefficients.alpha,
                                   model.dictionary());
  out.profile.values /= req.exposure;
  return out;
}

double MethodSummary::mean() const {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
}

double MethodSummary::standard_error() const {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean();
  double ss = 0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / double(values.size() - 1) / double(values.size()));
}

Replicate simulate_replicate(const ScenarioConfig& sc, const Model& sim_model,
                             const DoubledProfile<double>& truth, std::uint64_t index) {
  Replicate rep;
  if (sc.with_sources) {
    auto src_rng = stream_rng(sc.seed, index, streams::kSources);
    rep.sources = sample_point_sources(sc.n, sc.effective_source_count(), sc.amplitude_min,
                                       sc.amplitude_max, src_rng);
  }
  auto rng = stream_rng(sc.seed, index, streams::kSimulation);
  rep.image = simulate_image(sim_model, truth, rep.sources, sc.exposure, rng);
  return rep;
}

ComparisonTable run_comparison(const ScenarioConfig& sc, const QutConfig& qut,
                               const FitOptions& solver) {
  sc.validate();
  DEPROJ_REQUIRE(sc.exposure > 0, ValidationError, "comparison needs a positive exposure");
  const Model sim_model = scenario_model(sc, false);
  const Model fit_model = scenario_model(sc, true);
  const auto truth = make_test_profile(sc.profile, sim_model.grid(), sc.peak, sc.custom_profile);
  const VectorXd truth_half = truth.mean_half();
  const auto volumes = shell_volume_matrix(sim_model.grid());

  const std::size_t m = std::size_t(sc.replicates);
  std::vector<double> lasso(m), onion(m);
  std::vector<bool> lasso_ok(m, false), onion_ok(m, false);

  parallel_for(m, resolve_threads(sc.threads), [&](std::size_t r) {
    const Replicate rep = simulate_replicate(sc, sim_model, truth, r);
    const VectorXd y = rep.image.flat();
    try {
      FitRequest req;
      req.qut = qut;
      req.qut.threads = 1;
      req.qut.seed = splitmix64(sc.seed ^ splitmix64(r + 0x51ED27ULL));
      req.solver = solver;
      req.exposure = sc.exposure;
      const auto fit = fit_qut_lasso(y, fit_model, req);
      lasso[r] = log_mse(fit.profile.mean_half(), truth_half);
      lasso_ok[r] = true;
    } catch (const Error&) {
    }
    try {
      // oracle masks: the true source pixels are dropped
      std::vector<Index> mask;
      for (const auto& s : rep.sources) mask.push_back(pixel_index(s.x, s.y, sc.n));
      const auto annuli = annulus_profile(rep.image, fit_model.sensitivity(),
                                          fit_model.background(), mask, fit_model.grid());
      VectorXd est = onion_deproject(annuli, volumes).clamped / sc.exposure;
      onion[r] = log_mse(est, truth_half);
      onion_ok[r] = true;
    } catch (const Error&) {
    }
  });

  ComparisonTable table;
  table.scenario = sc;
  MethodSummary a{"qut_lasso", {}, 0}, b{"onion", {}, 0};
  for (std::size_t r = 0; r < m; ++r) {
    if (lasso_ok[r]) a.values.push_back(lasso[r]); else ++a.failures;
    if (onion_ok[r]) b.values.push_back(onion[r]); else ++b.failures;
  }
  for (const auto* s : {&a, &b})
    DEPROJ_REQUIRE(s->failures * 4 <= sc.replicates, NumericalError,
                   s->method + " failed on " + std::to_string(s->failures) + " of " +
                       std::to_string(sc.replicates) + " replicates");
  table.methods = {a, b};
  return table;
}

VectorXd block_resample(const VectorXd& y, Index n, std::mt19937_64& rng) {
  DEPROJ_REQUIRE(n % 2 == 0, DimensionError, "block bootstrap needs an even image side");
  DEPROJ_REQUIRE(y.size() == n * n, DimensionError, "image size mismatch");
  std::uniform_int_distribution<int> pick(0, 3);
  VectorXd out(y.size());
  for (Index by = 0; by < n; by += 2) {
    for (Index bx = 0; bx < n; bx += 2) {
      const std::array<Index, 4> idx = {pixel_index(bx, by, n), pixel_index(bx + 1, by, n),
                                        pixel_index(bx, by + 1, n),
                                        pixel_index(bx + 1, by + 1, n)};
      for (Index p : idx) out(p) = y(idx[std::size_t(pick(rng))]);
    }
  }
  return out;
}

namespace {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (double(v.size()) - 1) * q;
  const auto lo = std::size_t(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

VectorXd log_profile(const Coefficients& c, const Model& model, double exposure, double floor) {
  const auto p = synthesize_profile(c.alpha0, c.alpha, model.dictionary());
  VectorXd half = p.mean_half() / exposure;
  for (Index i = 0; i < half.size(); ++i) half(i) = std::log(std::max(half(i), floor));
  return half;
}

}  // namespace

BootstrapBands block_bootstrap_ci(const VectorXd& y, const Model& model, double lambda1,
                                  double lambda2, const FitOptions& solver,
                                  const Coefficients& point_estimate, double exposure,
                                  const BootstrapOptions& opts) {
  DEPROJ_REQUIRE(opts.draws >= 50, ValidationError, "bootstrap needs at least 50 draws");
  DEPROJ_REQUIRE(opts.lower_level > 0 && opts.lower_level < opts.upper_level &&
                     opts.upper_level < 1,
                 ValidationError, "bootstrap levels must satisfy 0 < lower < upper < 1");
  DEPROJ_REQUIRE(model.n() % 2 == 0, DimensionError,
                 "block bootstrap needs an even image side (pad the image first)");
  DEPROJ_REQUIRE(exposure > 0, DomainError, "exposure must be positive");

  const Index nr = model.grid().n_r;
  const std::size_t draws = std::size_t(opts.draws);
  std::vector<VectorXd> curves(draws);
  std::vector<bool> ok(draws, false);

  parallel_for(draws, resolve_threads(opts.threads), [&](std::size_t b) {
    auto rng = stream_rng(opts.seed, b, streams::kBootstrap);
    const VectorXd yb = block_resample(y, model.n(), rng);
    try {
      Coefficients init = point_estimate;
      const VectorXd mu0 = model.mu(init.alpha0, init.alpha, init.s);
      bool usable = true;
      for (Index i = 0; i < yb.size(); ++i)
        if (yb(i) > 0 && !(mu0(i) > solver.mu_floor)) usable = false;
      if (!usable) {
        const auto zt = zero_threshold(yb, model);
        if (!zt.in_domain) return;
        init = Coefficients::zeros(model, zt.alpha0_hat);
      }
      const auto fit = fit_fista(yb, model, lambda1, lambda2, solver, init);
      curves[b] = log_profile(fit.coefficients, model, exposure, opts.floor);
      ok[b] = true;
    } catch (const Error&) {
    }
  });

  BootstrapBands bands;
  bands.radius = model.grid().mids();
  bands.estimate = log_profile(point_estimate, model, exposure, opts.floor);
  bands.lower.resize(nr);
  bands.upper.resize(nr);
  std::vector<std::size_t> kept;
  for (std::size_t b = 0; b < draws; ++b)
    if (ok[b]) kept.push_back(b);
  bands.failures = int(draws - kept.size());
  DEPROJ_REQUIRE(!kept.empty(), NumericalError, "every bootstrap refit failed");
  std::vector<double> column(kept.size());
  for (Index i = 0; i < nr; ++i) {
    for (std::size_t k = 0; k < kept.size(); ++k) column[k] = curves[kept[k]](i);
    bands.lower(i) = quantile(column, opts.lower_level);
    bands.upper(i) = quantile(column, opts.upper_level);
  }
  return bands;
}

}  // namespace deproj

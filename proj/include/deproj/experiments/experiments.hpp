#pragma once

#include <deproj/onion/onion.hpp>
#include <deproj/qut/qut.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace deproj {

struct PointSource {
  Index x = 0;
  Index y = 0;
  double amplitude = 0;
};
using PointSourceSet = std::vector<PointSource>;

/// Dictionary settings used when a scenario builds its model.
struct DictionaryConfig {
  int vanishing_moments = 4;
  Index depth = -1;        // -1: full depth
  double rho_min = 1.0;    // King core radii log-spaced over [rho_min, r_max/2]
  double beta_min = 0.6;   // King slopes linear over [beta_min, beta_max]
  double beta_max = 3.0;

  void validate() const;
  bool operator==(const DictionaryConfig&) const = default;
};

struct ScenarioConfig {
  Index n = 128;
  std::string profile = "cosmoBlocks";  // cosmoBlocks | cosmo1 | cosmo2 | custom
  std::vector<double> custom_profile;   // half profile on the shell midpoints, for "custom"
  double peak = 0;                      // <= 0: per-profile default
  bool with_sources = false;
  int source_count = -1;                // < 0: n/4
  double amplitude_min = 0.0;
  double amplitude_max = 0.002;
  double background = 1e-4;
  double exposure = 1.0;
  double psf_r0 = 2.2364;
  double psf_alpha = 1.449;
  double psf_tol = 1e-4;
  double sensitivity = 1.0;             // uniform detector efficiency
  SectorMode mode = SectorMode::kLeftRight;
  int replicates = 24;
  std::uint64_t seed = 1;
  int threads = 0;                      // 0: all cores
  DictionaryConfig dictionary;

  int effective_source_count() const { return source_count < 0 ? int(n / 4) : source_count; }
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Unit-peak shape of a named profile at radius r.
double test_profile_shape(const std::string& name, double r, double r_max);

/// Peak that makes the unblurred projection through the center equal one.
double default_peak(const std::string& name, const RadialGrid<double>& grid);

/// Symmetric doubled test profile on `grid` with maximum value `peak`
/// (peak <= 0 selects default_peak). "custom" takes its shell values from
/// `custom` and ignores the peak.
DoubledProfile<double> make_test_profile(const std::string& name, const RadialGrid<double>& grid,
                                         double peak = 0,
                                         const std::vector<double>& custom = {});

PointSourceSet sample_point_sources(Index n, int count, double amp_min, double amp_max,
                                    std::mt19937_64& rng);

/// Pre-blur source image s (row-major n*n).
VectorXd source_image(const PointSourceSet& sources, Index n);

/// Y ~ Poisson(exposure * (e + B(E o (A profile + s)))).
PixelImage<double> simulate_image(const Model& model, const DoubledProfile<double>& profile,
                                  const PointSourceSet& sources, double exposure,
                                  std::mt19937_64& rng);

/// 100 * mean over bins with truth > floor of (log max(est, floor) - log truth)^2.
double log_mse(const VectorXd& estimate, const VectorXd& truth, double floor = 1e-8);

/// Model for a scenario. `exposure_scaled` multiplies the background by the
/// exposure, which is how fits see the data; estimates are divided back.
Model scenario_model(const ScenarioConfig& sc, bool exposure_scaled = true,
                     const std::vector<Index>& dead_pixels = {},
                     const std::optional<Point2<double>>& center = std::nullopt);

struct QutLassoFit {
  ZeroThreshold zero;
  QutResult qut;
  FitResult fit;
  DoubledProfile<double> profile;  // divided by exposure
  bool user_lambda = false;
};

struct FitRequest {
  QutConfig qut;
  FitOptions solver;
  std::optional<double> lambda1;  // user override
  std::optional<double> lambda2;
  double exposure = 1.0;
};

/// Null intercept, QUT thresholds (unless both lambdas are supplied), then FISTA.
QutLassoFit fit_qut_lasso(const VectorXd& y, const Model& model, const FitRequest& req);

struct MethodSummary {
  std::string method;
  std::vector<double> values;  // per successful replicate
  int failures = 0;
  double mean() const;
  double standard_error() const;
};

struct ComparisonTable {
  ScenarioConfig scenario;
  std::vector<MethodSummary> methods;  // qut_lasso, onion
};

/// Monte-Carlo comparison of QUT-lasso against onion peeling.
ComparisonTable run_comparison(const ScenarioConfig& sc, const QutConfig& qut,
                               const FitOptions& solver);

/// Simulated image of replicate `index` with its sources, reproducible from the seed.
struct Replicate {
  PixelImage<double> image;
  PointSourceSet sources;
};
Replicate simulate_replicate(const ScenarioConfig& sc, const Model& sim_model,
                             const DoubledProfile<double>& truth, std::uint64_t index);

struct BootstrapBands {
  VectorXd radius;    // shell midpoints
  VectorXd lower;     // quantile of the log-profile
  VectorXd upper;
  VectorXd estimate;  // log of the original point estimate
  int failures = 0;
  double width_at(Index i) const { return upper(i) - lower(i); }
};

struct BootstrapOptions {
  int draws = 100;
  double lower_level = 0.025;
  double upper_level = 0.975;
  double floor = 1e-8;
  std::uint64_t seed = 1;
  int threads = 0;
  bool operator==(const BootstrapOptions&) const = default;
};

/// Resamples each 2x2 pixel block in place with replacement and refits with the
/// given thresholds; returns pointwise quantiles of the left/right mean log-profile.
BootstrapBands block_bootstrap_ci(const VectorXd& y, const Model& model, double lambda1,
                                  double lambda2, const FitOptions& solver,
                                  const Coefficients& point_estimate, double exposure,
                                  const BootstrapOptions& opts);

/// One bootstrap image: every 2x2 block redrawn from its own four values.
VectorXd block_resample(const VectorXd& y, Index n, std::mt19937_64& rng);

}  // namespace deproj

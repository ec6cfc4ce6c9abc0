#pragma once

#include <deproj/solver/fista.hpp>

#include <cstdint>
#include <limits>
#include <vector>

namespace deproj {

enum class TailFit { kEmpirical, kGumbel, kAuto };

struct QutConfig {
  double alpha1 = 0.05;   // dictionary level
  double alpha2 = 0.05;   // source level
  int m0 = 100;           // Monte Carlo draws
  std::uint64_t seed = 0;
  TailFit tail_fit = TailFit::kAuto;  // Gumbel only where the order statistic runs out
  int threads = 1;

  /// alpha1 = 1/sqrt(pi log P), alpha2 = 1/N^2.
  static QutConfig defaults_for(Index n);
  void validate() const;
  bool operator==(const QutConfig&) const = default;
};

/// Smallest (lambda1, lambda2) that zero the penalized blocks for this image.
struct ZeroThreshold {
  double lambda1 = std::numeric_limits<double>::infinity();
  double lambda2 = std::numeric_limits<double>::infinity();
  double alpha0_hat = 0;
  bool in_domain = false;
};

struct QutResult {
  double lambda1 = 0;
  double lambda2 = 0;
  double alpha0_hat = 0;
  std::vector<double> samples1;  // Lambda_1 per retained draw, sorted ascending
  std::vector<double> samples2;  // Lambda_2 per retained draw, sorted ascending
  int dropped = 0;               // draws outside the domain
  bool gumbel1 = false;
  bool gumbel2 = false;
};

/// Root of g(a) = x0^T 1 - x0^T (y / (e + x0 a)) on the feasible half-line.
/// Throws NotInDomainError if g has no sign change there.
double solve_alpha0_null(const VectorXd& y, const VectorXd& e, const VectorXd& x0);

/// Zero-thresholding function. Sign-constrained coordinates (King atoms and
/// sources) count only the direction in which they are allowed to move.
ZeroThreshold zero_threshold(const VectorXd& y, const Model& model);

/// Same, with the null intercept already known.
ZeroThreshold zero_threshold_at(const VectorXd& y, const Model& model, double alpha0_hat);

/// Gumbel location/scale by maximum likelihood.
struct GumbelFit {
  double location = 0;
  double scale = 0;
  double upper_quantile(double alpha) const;
};
GumbelFit fit_gumbel(const std::vector<double>& samples);

/// Upper alpha-quantile estimate from sorted samples: order statistic
/// ceil((1 - alpha) m) when it exists below the maximum, else a Gumbel tail.
double upper_quantile(const std::vector<double>& sorted, double alpha, TailFit mode,
                      bool* used_gumbel = nullptr);

/// Draw a null image Y0 ~ Poisson(e + x0 alpha0) for stream (seed, index).
VectorXd draw_null_image(const Model& model, double alpha0, std::uint64_t seed,
                         std::uint64_t index);

QutResult qut_thresholds(const Model& model, double alpha0_hat, const QutConfig& cfg);

struct ZeroSceneOptions {
  int trials = 200;
  double lambda_scale = 1.0;  // multiplies the QUT thresholds
  bool fixed_lambda = false;  // use (lambda1, lambda2) below instead of QUT
  double lambda1 = 0;
  double lambda2 = 0;
  FitOptions fit;
};

struct ZeroSceneReport {
  int trials = 0;
  int zero_scenes = 0;
  int skipped = 0;  // images outside the domain
  double fraction() const { return trials > skipped ? double(zero_scenes) / double(trials - skipped) : 0.0; }
  std::vector<Index> false_sources;  // per retained trial
};

/// Simulates zero-scene images at intercept alpha0 and fits each with its own
/// QUT thresholds; reports how often the fit returns the zero scene.
ZeroSceneReport zero_scene_rate(const Model& model, double alpha0, const QutConfig& cfg,
                                const ZeroSceneOptions& opts);

}  // namespace deproj

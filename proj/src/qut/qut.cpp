#include <deproj/qut/qut.hpp>

#include <deproj/core/parallel.hpp>
#include <deproj/core/random.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace deproj {

QutConfig QutConfig::defaults_for(Index n) {
  QutConfig cfg;
  const double p = double(dyadic_floor(n));
  cfg.alpha1 = 1.0 / std::sqrt(std::numbers::pi * std::log(p));
  cfg.alpha2 = 1.0 / (double(n) * double(n));
  return cfg;
}

void QutConfig::validate() const {
  DEPROJ_REQUIRE(alpha1 > 0 && alpha1 < 1 && alpha2 > 0 && alpha2 < 1, ValidationError,
                 "QUT levels must lie in (0, 1)");
  DEPROJ_REQUIRE(m0 >= 20, ValidationError, "QUT needs at least 20 Monte Carlo draws");
}

namespace {

struct NullEquation {
  const VectorXd& y;
  const VectorXd& e;
  const VectorXd& x0;

  // g(a) and g'(a) over pixels with x0 > 0
  std::pair<double, double> eval(double a) const {
    double g = 0, dg = 0;
    for (Index i = 0; i < x0.size(); ++i) {
      if (x0(i) <= 0) continue;
      g += x0(i);
      if (y(i) > 0) {
        const double mu = e(i) + x0(i) * a;
        if (!(mu > 0)) return {-std::numeric_limits<double>::infinity(), 0.0};
        g -= x0(i) * y(i) / mu;
        dg += x0(i) * x0(i) * y(i) / (mu * mu);
      }
    }
    return {g, dg};
  }
};

}  // namespace

double solve_alpha0_null(const VectorXd& y, const VectorXd& e, const VectorXd& x0) {
  DEPROJ_REQUIRE(y.size() == e.size() && y.size() == x0.size(), DimensionError,
                 "null equation inputs differ in size");
  DEPROJ_REQUIRE((x0.array() >= 0).all() && (x0.array() > 0).any(), DomainError,
                 "intercept column must be non-negative with a positive entry");
  DEPROJ_REQUIRE((e.array() >= 0).all(), DomainError, "background must be non-negative");

  double a_min = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < x0.size(); ++i) {
    if (x0(i) > 0) {
      a_min = std::max(a_min, -e(i) / x0(i));
    } else if (y(i) > 0 && !(e(i) > 0)) {
      throw NotInDomainError("counts observed where the null intensity is identically zero");
    }
  }

  const NullEquation eq{y, e, x0};
  // g is increasing and concave on (a_min, inf), -inf or finite at a_min
  const double g_min = eq.eval(a_min).first;
  if (g_min >= 0) throw NotInDomainError("image is outside the null-model domain");

  const double scale = std::max(std::abs(a_min), (y.sum() + 1.0) / x0.sum());
  double lo = a_min;
  double hi = std::max(a_min, 0.0) + scale;
  for (int k = 0; eq.eval(hi).first < 0; ++k) {
    if (k > 2000) throw NotInDomainError("no root of the null score equation");
    lo = hi;
    hi = a_min + 2 * (hi - a_min);
  }

  // Newton with bisection fallback whenever the step leaves the bracket or
  // shrinks it more slowly than bisection would
  double a = 0.5 * (lo + hi);
  double dx = hi - lo, dx_old = dx;
  for (int iter = 0; iter < 1000; ++iter) {
    const auto [g, dg] = eq.eval(a);
    if (g == 0) return a;
    if (g < 0) lo = a; else hi = a;
    const double newton = dg > 0 ? a - g / dg : lo;
    dx_old = dx;
    if (!(newton > lo && newton < hi) || std::abs(2 * g) > std::abs(dx_old * dg)) {
      dx = 0.5 * (hi - lo);
      a = lo + dx;
    } else {
      dx = g / dg;
      a = newton;
    }
    if (std::abs(dx) <= 1e-14 * std::max(std::abs(a), a - a_min)) return a;
  }
  return a;
}

ZeroThreshold zero_threshold_at(const VectorXd& y, const Model& model, double alpha0_hat) {
  const VectorXd mu = model.background() + model.x0() * alpha0_hat;
  VectorXd r(y.size());
  for (Index i = 0; i < y.size(); ++i) r(i) = (y(i) > 0 ? y(i) / mu(i) : 0.0) - 1.0;
  const auto g = model.adjoint(r);  // -gradient at the null fit
  const Index n_king = model.dictionary().n_king();

  ZeroThreshold zt;
  zt.in_domain = true;
  zt.alpha0_hat = alpha0_hat;
  zt.lambda1 = 0;
  for (Index i = 0; i < g.alpha.size(); ++i)
    zt.lambda1 = std::max(zt.lambda1, i < n_king ? g.alpha(i) : std::abs(g.alpha(i)));
  zt.lambda2 = std::max(0.0, g.s.maxCoeff());
  return zt;
}

ZeroThreshold zero_threshold(const VectorXd& y, const Model& model) {
  double a0 = 0;
  try {
    a0 = solve_alpha0_null(y, model.background(), model.x0());
  } catch (const NotInDomainError&) {
    return ZeroThreshold{};
  }
  return zero_threshold_at(y, model, a0);
}

double GumbelFit::upper_quantile(double alpha) const {
  return location - scale * std::log(-std::log1p(-alpha));
}

GumbelFit fit_gumbel(const std::vector<double>& samples) {
  DEPROJ_REQUIRE(samples.size() >= 2, DomainError, "Gumbel fit needs at least two samples");
  const double n = double(samples.size());
  const double x_min = *std::min_element(samples.begin(), samples.end());
  const double x_max = *std::max_element(samples.begin(), samples.end());
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= n;
  if (x_max - x_min <= 1e-14 * std::max(1.0, std::abs(x_max))) return {mean, 0.0};

  // profile equation h(b) = mean - sum x w / sum w - b, decreasing in b
  auto h = [&](double b) {
    double sw = 0, sxw = 0;
    for (double x : samples) {
      const double w = std::exp(-(x - x_min) / b);
      sw += w;
      sxw += x * w;
    }
    return mean - sxw / sw - b;
  };
  double lo = 1e-12 * (x_max - x_min), hi = x_max - x_min;
  while (h(hi) > 0) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0 ? lo : hi) = mid;
  }
  const double beta = 0.5 * (lo + hi);
  double sw = 0;
  for (double x : samples) sw += std::exp(-(x - x_min) / beta);
  return {x_min - beta * std::log(sw / n), beta};
}

double upper_quantile(const std::vector<double>& sorted, double alpha, TailFit mode,
                      bool* used_gumbel) {
  DEPROJ_REQUIRE(!sorted.empty(), DomainError, "no samples for quantile estimation");
  const std::size_t m = sorted.size();
  const auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * double(m) - 1e-9));
  const bool gumbel = mode == TailFit::kGumbel || (mode == TailFit::kAuto && k > m - 1);
  if (used_gumbel) *used_gumbel = gumbel;
  if (gumbel) return std::max(0.0, fit_gumbel(sorted).upper_quantile(alpha));
  return sorted[std::clamp<std::size_t>(k, 1, m) - 1];
}

VectorXd draw_null_image(const Model& model, double alpha0, std::uint64_t seed,
                         std::uint64_t index) {
  auto rng = stream_rng(seed, index, streams::kQutNull);
  const VectorXd mean = model.background() + model.x0() * alpha0;
  VectorXd y(mean.size());
  for (Index i = 0; i < mean.size(); ++i) y(i) = double(poisson_draw(mean(i), rng));
  return y;
}

QutResult qut_thresholds(const Model& model, double alpha0_hat, const QutConfig& cfg) {
  cfg.validate();
  const VectorXd mean = model.background() + model.x0() * alpha0_hat;
  DEPROJ_REQUIRE((mean.array() >= 0).all(), DomainError,
                 "null intercept gives a negative Poisson mean");

  std::vector<ZeroThreshold> draws(static_cast<std::size_t>(cfg.m0));
  parallel_for(draws.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    draws[i] = zero_threshold(draw_null_image(model, alpha0_hat, cfg.seed, i), model);
  });

  QutResult out;
  out.alpha0_hat = alpha0_hat;
  for (const auto& d : draws) {
    if (!d.in_domain) {
      ++out.dropped;
      continue;
    }
    out.samples1.push_back(d.lambda1);
    out.samples2.push_back(d.lambda2);
  }
  DEPROJ_REQUIRE(out.dropped * 5 <= cfg.m0, DomainError,
                 "degenerate null: " + std::to_string(out.dropped) + " of " +
                     std::to_string(cfg.m0) + " draws fell outside the domain");
  std::sort(out.samples1.begin(), out.samples1.end());
  std::sort(out.samples2.begin(), out.samples2.end());
  out.lambda1 = upper_quantile(out.samples1, cfg.alpha1, cfg.tail_fit, &out.gumbel1);
  out.lambda2 = upper_quantile(out.samples2, cfg.alpha2, cfg.tail_fit, &out.gumbel2);
  return out;
}

ZeroSceneReport zero_scene_rate(const Model& model, double alpha0, const QutConfig& cfg,
                                const ZeroSceneOptions& opts) {
  cfg.validate();
  DEPROJ_REQUIRE(opts.trials >= 1, ValidationError, "need at least one trial");
  const VectorXd mean = model.background() + model.x0() * alpha0;

  struct Outcome {
    bool skipped = false;
    bool zero = false;
    Index sources = 0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(opts.trials));
  QutConfig inner = cfg;
  inner.threads = 1;

  parallel_for(outcomes.size(), resolve_threads(cfg.threads), [&](std::size_t t) {
    auto rng = stream_rng(cfg.seed, t, streams::kZeroScene);
    VectorXd y(mean.size());
    for (Index i = 0; i < mean.size(); ++i) y(i) = double(poisson_draw(mean(i), rng));

    const ZeroThreshold zt = zero_threshold(y, model);
    if (!zt.in_domain) {
      outcomes[t].skipped = true;
      return;
    }
    double l1 = opts.lambda1, l2 = opts.lambda2;
    if (!opts.fixed_lambda) {
      QutConfig trial_cfg = inner;
      trial_cfg.seed = splitmix64(cfg.seed ^ splitmix64(t + streams::kQutPerTrial));
      const QutResult q = qut_thresholds(model, zt.alpha0_hat, trial_cfg);
      l1 = q.lambda1;
      l2 = q.lambda2;
    }
    l1 *= opts.lambda_scale;
    l2 *= opts.lambda_scale;
    const FitResult fit = fit_fista(y, model, l1, l2, opts.fit, Coefficients::zeros(model, zt.alpha0_hat));
    outcomes[t].zero = fit.coefficients.zero_scene();
    outcomes[t].sources = static_cast<Index>(fit.coefficients.active_sources().size());
  });

  ZeroSceneReport report;
  report.trials = opts.trials;
  for (const auto& o : outcomes) {
    if (o.skipped) {
      ++report.skipped;
      continue;
    }
    if (o.zero) ++report.zero_scenes;
    report.false_sources.push_back(o.sources);
  }
  return report;
}

}  // namespace deproj

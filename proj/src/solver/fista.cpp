#include <deproj/solver/fista.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace deproj {

Coefficients Coefficients::zeros(const Model& model, double alpha0) {
  Coefficients c;
  c.alpha0 = alpha0;
  c.alpha = VectorXd::Zero(model.dictionary().n_penalized());
  c.s = VectorXd::Zero(model.pixels());
  return c;
}

std::vector<std::pair<Index, double>> Coefficients::active_sources() const {
  std::vector<std::pair<Index, double>> out;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) != 0) out.emplace_back(i, s(i));
  return out;
}

Index Coefficients::active_dictionary() const {
  return static_cast<Index>((alpha.array() != 0).count());
}

void FitOptions::validate() const {
  DEPROJ_REQUIRE(max_iters > 0, ValidationError, "max_iters must be positive");
  DEPROJ_REQUIRE(objective_rel_tol > 0 && kkt_rel_tol > 0 && kkt_abs_tol > 0, ValidationError,
                 "solver tolerances must be positive");
  DEPROJ_REQUIRE(shrink > 0 && shrink < 1, ValidationError, "shrink factor must lie in (0, 1)");
  DEPROJ_REQUIRE(mu_floor > 0, ValidationError, "mu floor must be positive");
}

double neg_log_likelihood(const VectorXd& y, const VectorXd& mu) {
  DEPROJ_REQUIRE(y.size() == mu.size(), DimensionError, "count and intensity sizes differ");
  double total = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) > 0) {
      DEPROJ_REQUIRE(mu(i) > 0, DomainError,
                     "intensity must be positive where counts are observed (pixel " +
                         std::to_string(i) + ")");
      total += mu(i) - y(i) * std::log(mu(i));
    } else {
      total += mu(i);
    }
  }
  return total;
}

namespace {

VectorXd residual_weights(const VectorXd& y, const VectorXd& mu, double mu_floor) {
  VectorXd w(y.size());
  for (Index i = 0; i < y.size(); ++i) w(i) = 1.0 - y(i) / std::max(mu(i), mu_floor);
  return w;
}

bool feasible(const VectorXd& y, const VectorXd& mu, double mu_floor) {
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) > 0 && !(mu(i) > mu_floor)) return false;
  return true;
}

// f(to) - f(from) evaluated term by term so that tiny decreases survive
// against an O(N^2) objective.
double nll_change(const VectorXd& y, const VectorXd& mu_from, const VectorXd& mu_to) {
  double delta = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double d = mu_to(i) - mu_from(i);
    delta += d;
    if (y(i) > 0) delta -= y(i) * std::log1p(d / mu_from(i));
  }
  return delta;
}

double penalty(const Coefficients& c, double lambda1, double lambda2) {
  return lambda1 * c.alpha.lpNorm<1>() + lambda2 * c.s.lpNorm<1>();
}

double soft_threshold(double z, double tau) {
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}

double positive_threshold(double z, double tau) { return z > tau ? z - tau : 0.0; }

// Coordinate-wise step sizes t * d_i; d_i = 0 freezes a coordinate.
struct Metric {
  double alpha0 = 0;
  VectorXd alpha;
  VectorXd s;
};

Coefficients scaled_prox(const Coefficients& y, const BlockVectors<double>& g, const Metric& d,
                         double t, Index n_king, double lambda1, double lambda2) {
  Coefficients z;
  z.alpha0 = y.alpha0 - t * d.alpha0 * g.alpha0;
  z.alpha.resize(y.alpha.size());
  for (Index i = 0; i < y.alpha.size(); ++i) {
    const double step = t * d.alpha(i);
    if (step == 0) {
      z.alpha(i) = y.alpha(i);
      continue;
    }
    const double v = y.alpha(i) - step * g.alpha(i);
    z.alpha(i) = i < n_king ? positive_threshold(v, step * lambda1) : soft_threshold(v, step * lambda1);
  }
  z.s.resize(y.s.size());
  for (Index i = 0; i < y.s.size(); ++i) {
    const double step = t * d.s(i);
    z.s(i) = step == 0 ? y.s(i) : positive_threshold(y.s(i) - step * g.s(i), step * lambda2);
  }
  return z;
}

double metric_norm2(const Coefficients& a, const Coefficients& b, const Metric& d) {
  double acc = 0;
  if (d.alpha0 > 0) acc += (a.alpha0 - b.alpha0) * (a.alpha0 - b.alpha0) / d.alpha0;
  for (Index i = 0; i < a.alpha.size(); ++i)
    if (d.alpha(i) > 0) acc += (a.alpha(i) - b.alpha(i)) * (a.alpha(i) - b.alpha(i)) / d.alpha(i);
  for (Index i = 0; i < a.s.size(); ++i)
    if (d.s(i) > 0) acc += (a.s(i) - b.s(i)) * (a.s(i) - b.s(i)) / d.s(i);
  return acc;
}

double inner(const BlockVectors<double>& g, const Coefficients& a, const Coefficients& b) {
  return g.alpha0 * (a.alpha0 - b.alpha0) + g.alpha.dot(a.alpha - b.alpha) + g.s.dot(a.s - b.s);
}

// z = a + beta (a - b), coefficient-wise
Coefficients extrapolate(const Coefficients& a, const Coefficients& b, double beta) {
  Coefficients z;
  z.alpha0 = a.alpha0 + beta * (a.alpha0 - b.alpha0);
  z.alpha = a.alpha + beta * (a.alpha - b.alpha);
  z.s = a.s + beta * (a.s - b.s);
  return z;
}

double invert_or_zero(double v) { return v > 0 ? 1.0 / v : 0.0; }

// Inverse diagonal of the Fisher information at mu0. The dictionary block
// ignores the blur (it barely changes radially extended columns); the source
// block is exact.
Metric fisher_metric(const Model& model, const VectorXd& mu0) {
  const double floor = 1e-3 * std::max(mu0.mean(), 1e-300);
  VectorXd inv_mu(mu0.size());
  for (Index i = 0; i < mu0.size(); ++i) inv_mu(i) = 1.0 / std::max(mu0(i), floor);

  Metric d;
  d.alpha0 = invert_or_zero(model.x0().cwiseAbs2().dot(inv_mu));

  const VectorXd e2 = model.sensitivity().values.cwiseAbs2();
  const VectorXd pixel_weight = e2.cwiseProduct(inv_mu);
  const auto& a = model.abel().matrix();
  const Matrix<double> gram = Matrix<double>(a.transpose() * pixel_weight.asDiagonal() * a);
  const auto& dict = model.dictionary();
  d.alpha.resize(dict.n_penalized());
  for (Index i = 0; i < dict.n_penalized(); ++i) {
    const VectorXd col = dict.column(i);
    d.alpha(i) = invert_or_zero(col.dot(gram * col));
  }

  const BlurOperator<double> squared(model.n(), model.psf().kernel.cwiseAbs2().eval());
  const VectorXd fs = e2.cwiseProduct(squared.adjoint(inv_mu));
  d.s.resize(fs.size());
  for (Index i = 0; i < fs.size(); ++i) d.s(i) = invert_or_zero(fs(i));
  return d;
}

// Largest eigenvalue of D^1/2 M^T W M D^1/2 by power iteration.
double metric_lipschitz(const Model& model, const Metric& d, const VectorXd& mu0, int iters = 30) {
  const double floor = 1e-3 * std::max(mu0.mean(), 1e-300);
  VectorXd w(mu0.size());
  for (Index i = 0; i < mu0.size(); ++i) w(i) = 1.0 / std::max(mu0(i), floor);

  Coefficients v;
  v.alpha0 = 1.0;
  v.alpha = VectorXd::Ones(d.alpha.size());
  v.s = VectorXd::Ones(d.s.size());
  double estimate = 1.0;
  for (int k = 0; k < iters; ++k) {
    const double norm = std::sqrt(v.alpha0 * v.alpha0 + v.alpha.squaredNorm() + v.s.squaredNorm());
    if (norm == 0) break;
    v.alpha0 /= norm;
    v.alpha /= norm;
    v.s /= norm;
    // u = D^1/2 v
    Coefficients u;
    u.alpha0 = std::sqrt(d.alpha0) * v.alpha0;
    u.alpha = d.alpha.cwiseSqrt().cwiseProduct(v.alpha);
    u.s = d.s.cwiseSqrt().cwiseProduct(v.s);
    const VectorXd image = model.linear_part(u.alpha0, u.alpha, u.s);
    const auto back = model.adjoint(w.cwiseProduct(image));
    Coefficients next;
    next.alpha0 = std::sqrt(d.alpha0) * back.alpha0;
    next.alpha = d.alpha.cwiseSqrt().cwiseProduct(back.alpha);
    next.s = d.s.cwiseSqrt().cwiseProduct(back.s);
    estimate = next.alpha0 * v.alpha0 + next.alpha.dot(v.alpha) + next.s.dot(v.s);
    v = std::move(next);
  }
  return std::max(estimate, 1e-12);
}

// Coordinates of the current support, each held to its present sign.
struct Support {
  std::vector<Index> dict;
  std::vector<Index> sources;
  std::vector<int> signs;  // of the dictionary entries
  bool operator==(const Support&) const = default;
  Index size() const { return Index(1 + dict.size() + sources.size()); }
};

Support support_of(const Coefficients& c) {
  Support s;
  for (Index i = 0; i < c.alpha.size(); ++i) {
    if (c.alpha(i) != 0) {
      s.dict.push_back(i);
      s.signs.push_back(c.alpha(i) > 0 ? 1 : -1);
    }
  }
  for (Index i = 0; i < c.s.size(); ++i)
    if (c.s(i) != 0) s.sources.push_back(i);
  return s;
}

// B(E o e_q) straight from the stencil.
VectorXd source_column(const Model& model, Index q) {
  const Index n = model.n();
  const auto& psf = model.psf();
  const Index reach = std::min(psf.radius, n - 1);
  const Index qx = q % n, qy = q / n;
  const double eq = model.sensitivity().values(q);
  VectorXd col = VectorXd::Zero(n * n);
  if (eq == 0) return col;
  for (Index y = std::max<Index>(0, qy - reach); y <= std::min(n - 1, qy + reach); ++y)
    for (Index x = std::max<Index>(0, qx - reach); x <= std::min(n - 1, qx + reach); ++x)
      col(y * n + x) = eq * psf.at(x - qx, y - qy);
  return col;
}

constexpr Index kMaxPolishSize = 300;

// Newton's method for the smooth problem restricted to `support`, with the
// l1 term linear because signs are frozen. A coordinate that reaches zero is
// dropped. Returns false when the support is too large or nothing improved.
bool polish_support(const VectorXd& y, const Model& model, const Coefficients& x,
                    const Support& support, double lambda1, double lambda2, double mu_floor,
                    Coefficients& out) {
  const Index k = support.size();
  if (k > kMaxPolishSize) return false;
  const Index pixels = model.pixels();
  const auto& dict = model.dictionary();

  Matrix<double> cols(pixels, k);
  VectorXd theta(k), weight(k);
  std::vector<int> sign(std::size_t(k), 0);
  cols.col(0) = model.x0();
  theta(0) = x.alpha0;
  weight(0) = 0;
  const VectorXd no_sources = VectorXd::Zero(pixels);
  for (std::size_t j = 0; j < support.dict.size(); ++j) {
    const Index c = Index(1 + j);
    cols.col(c) = model.linear_image(dict.column(support.dict[j]), no_sources);
    theta(c) = x.alpha(support.dict[j]);
    sign[std::size_t(c)] = support.signs[j];
    weight(c) = lambda1 * support.signs[j];
  }
  const VectorXd no_profile = VectorXd::Zero(dict.length());
  for (std::size_t j = 0; j < support.sources.size(); ++j) {
    const Index c = Index(1 + support.dict.size() + j);
    cols.col(c) = source_column(model, support.sources[j]);
    theta(c) = x.s(support.sources[j]);
    sign[std::size_t(c)] = 1;
    weight(c) = lambda2;
  }

  const VectorXd& e = model.background();
  VectorXd mu = e + cols * theta;
  if (!feasible(y, mu, mu_floor)) return false;
  std::vector<bool> live(std::size_t(k), true);
  bool improved = false;

  for (int iter = 0; iter < 100; ++iter) {
    VectorXd r(pixels), curv(pixels);
    for (Index i = 0; i < pixels; ++i) {
      r(i) = 1.0 - y(i) / mu(i);
      curv(i) = y(i) / (mu(i) * mu(i));
    }
    VectorXd g = cols.transpose() * r + weight;
    Matrix<double> h = cols.transpose() * curv.asDiagonal() * cols;
    for (Index c = 0; c < k; ++c) {
      if (live[std::size_t(c)]) continue;
      g(c) = 0;
      h.row(c).setZero();
      h.col(c).setZero();
      h(c, c) = 1;
    }
    h.diagonal().array() += 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);
    const VectorXd d = -h.ldlt().solve(g);
    const double gd = g.dot(d);
    if (!d.allFinite() || !(gd < 0)) break;

    double t_max = 1.0;
    Index blocking = -1;
    for (Index c = 0; c < k; ++c) {
      if (!live[std::size_t(c)] || sign[std::size_t(c)] == 0) continue;
      if (d(c) * sign[std::size_t(c)] < 0) {
        const double t_c = -theta(c) / d(c);
        if (t_c < t_max) {
          t_max = t_c;
          blocking = c;
        }
      }
    }

    bool accepted = false;
    double t = t_max;
    VectorXd next, mu_next;
    for (int tries = 0; tries < 60; ++tries, t *= 0.5) {
      next = theta + t * d;
      const bool hits = blocking >= 0 && t == t_max;
      if (hits) next(blocking) = 0;
      for (Index c = 0; c < k; ++c)
        if (sign[std::size_t(c)] != 0 && next(c) * sign[std::size_t(c)] < 0) next(c) = 0;
      mu_next = e + cols * next;
      if (!feasible(y, mu_next, mu_floor)) continue;
      const double df = nll_change(y, mu, mu_next) + weight.dot(next - theta);
      if (df <= 1e-4 * t * gd) {
        accepted = true;
        if (hits) live[std::size_t(blocking)] = false;
        break;
      }
    }
    if (!accepted) break;
    const double decrease = -weight.dot(next - theta) - nll_change(y, mu, mu_next);
    theta = next;
    mu = mu_next;
    improved = true;
    if (decrease <= 1e-15 * (1.0 + std::abs(mu.sum())) && blocking < 0) break;
  }
  if (!improved) return false;

  out = Coefficients::zeros(model, theta(0));
  for (std::size_t j = 0; j < support.dict.size(); ++j)
    out.alpha(support.dict[j]) = theta(Index(1 + j));
  for (std::size_t j = 0; j < support.sources.size(); ++j)
    out.s(support.sources[j]) = theta(Index(1 + support.dict.size() + j));
  return true;
}

}  // namespace

BlockVectors<double> objective_grad(const VectorXd& y, const Model& model,
                                    const Coefficients& coeffs, double mu_floor) {
  const VectorXd mu = model.mu(coeffs.alpha0, coeffs.alpha, coeffs.s);
  DEPROJ_REQUIRE(feasible(y, mu, 0.0), DomainError,
                 "intensity must be positive where counts are observed");
  return model.adjoint(residual_weights(y, mu, mu_floor));
}

Coefficients prox_step(const Coefficients& z, Index n_king, double t, double lambda1,
                       double lambda2) {
  DEPROJ_REQUIRE(t > 0, DomainError, "prox step must be positive");
  Coefficients out = z;
  for (Index i = 0; i < z.alpha.size(); ++i)
    out.alpha(i) = i < n_king ? positive_threshold(z.alpha(i), t * lambda1)
                              : soft_threshold(z.alpha(i), t * lambda1);
  for (Index i = 0; i < z.s.size(); ++i) out.s(i) = positive_threshold(z.s(i), t * lambda2);
  return out;
}

KktResiduals kkt_from_gradient(const BlockVectors<double>& grad, const Coefficients& coeffs,
                               Index n_king, double lambda1, double lambda2) {
  auto violation = [](double g, double theta, double lambda, bool non_negative) {
    if (theta > 0) return std::abs(g + lambda);
    if (theta < 0) return std::abs(g - lambda);
    return non_negative ? std::max(-g - lambda, 0.0) : std::max(std::abs(g) - lambda, 0.0);
  };
  KktResiduals r;
  r.intercept = std::abs(grad.alpha0);
  for (Index i = 0; i < coeffs.alpha.size(); ++i)
    r.dictionary =
        std::max(r.dictionary, violation(grad.alpha(i), coeffs.alpha(i), lambda1, i < n_king));
  for (Index i = 0; i < coeffs.s.size(); ++i)
    r.sources = std::max(r.sources, violation(grad.s(i), coeffs.s(i), lambda2, true));
  return r;
}

KktResiduals kkt_residuals(const VectorXd& y, const Model& model, const Coefficients& coeffs,
                           double lambda1, double lambda2, double mu_floor) {
  return kkt_from_gradient(objective_grad(y, model, coeffs, mu_floor), coeffs,
                           model.dictionary().n_king(), lambda1, lambda2);
}

FitResult fit_fista(const VectorXd& y, const Model& model, double lambda1, double lambda2,
                    const FitOptions& opts, const Coefficients& init) {
  opts.validate();
  DEPROJ_REQUIRE(lambda1 >= 0 && lambda2 >= 0, DomainError, "penalty levels must be >= 0");
  DEPROJ_REQUIRE(y.size() == model.pixels(), DimensionError, "image size does not match model");
  model.dictionary().check_layout(init.alpha);
  DEPROJ_REQUIRE(init.s.size() == model.pixels(), DimensionError, "source map size mismatch");

  const Index n_king = model.dictionary().n_king();
  const VectorXd& e = model.background();

  Coefficients x = init;
  VectorXd lin_x = model.linear_part(x.alpha0, x.alpha, x.s);
  VectorXd mu_x = e + lin_x;
  DEPROJ_REQUIRE(feasible(y, mu_x, opts.mu_floor), DomainError,
                 "initial coefficients give non-positive intensity where counts are observed");

  const Metric metric = fisher_metric(model, mu_x);
  double step = opts.initial_step > 0 ? opts.initial_step : 1.0 / metric_lipschitz(model, metric, mu_x);

  const double mass = std::max(1.0, model.x0().lpNorm<1>());
  FitResult result;
  result.lambda1 = lambda1;
  result.lambda2 = lambda2;
  result.kkt_tolerance.intercept = std::max(opts.kkt_rel_tol * std::max(lambda1, lambda2),
                                            opts.kkt_abs_tol * mass);
  result.kkt_tolerance.dictionary = std::max(opts.kkt_rel_tol * lambda1, opts.kkt_abs_tol * mass);
  result.kkt_tolerance.sources = std::max(opts.kkt_rel_tol * lambda2, opts.kkt_abs_tol * mass);
  auto within_tolerance = [&](const KktResiduals& r) {
    return r.intercept <= result.kkt_tolerance.intercept &&
           r.dictionary <= result.kkt_tolerance.dictionary &&
           r.sources <= result.kkt_tolerance.sources;
  };

  double objective = neg_log_likelihood(y, mu_x) + penalty(x, lambda1, lambda2);
  if (!std::isfinite(objective)) throw FitFailure("non-finite initial objective", {});
  result.objective_trace.push_back(objective);

  Coefficients x_prev = x;
  VectorXd lin_prev = lin_x;
  double momentum = 1.0;  // FISTA t_k
  double beta = 0.0;
  bool kkt_known = false;
  Support support = support_of(x);
  int stable = 0;
  bool polished = false;  // for the current support

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    result.iterations = iter;
    Coefficients yk = beta > 0 ? extrapolate(x, x_prev, beta) : x;
    VectorXd lin_y = beta > 0 ? VectorXd(lin_x + beta * (lin_x - lin_prev)) : lin_x;
    VectorXd mu_y = e + lin_y;
    if (beta > 0 && !feasible(y, mu_y, opts.mu_floor)) {
      yk = x;
      lin_y = lin_x;
      mu_y = mu_x;
      momentum = 1.0;
      beta = 0.0;
      ++result.restarts;
    }
    const bool from_x = beta == 0.0;
    const auto grad = model.adjoint(residual_weights(y, mu_y, opts.mu_floor));

    Coefficients z;
    VectorXd lin_z, mu_z;
    bool accepted = false;
    for (int tries = 0; tries < 80; ++tries) {
      z = scaled_prox(yk, grad, metric, step, n_king, lambda1, lambda2);
      lin_z = model.linear_part(z.alpha0, z.alpha, z.s);
      mu_z = e + lin_z;
      if (feasible(y, mu_z, opts.mu_floor)) {
        const double df = nll_change(y, mu_y, mu_z);
        const double model_gap = inner(grad, z, yk) + metric_norm2(z, yk, metric) / (2.0 * step);
        const double margin = 1e-12 * (1.0 + std::abs(objective));
        if (!std::isfinite(df)) throw FitFailure("non-finite objective change", result.objective_trace);
        if (df <= model_gap + margin) {
          accepted = true;
          break;
        }
      }
      step *= opts.shrink;
    }
    if (!accepted) break;  // step underflow: no representable progress left

    const double change =
        nll_change(y, mu_x, mu_z) + penalty(z, lambda1, lambda2) - penalty(x, lambda1, lambda2);
    if (!std::isfinite(change)) throw FitFailure("non-finite objective", result.objective_trace);
    if (change > 0) {
      if (from_x || !opts.restart) break;  // proximal-gradient step from x cannot decrease further
      x_prev = x;
      lin_prev = lin_x;
      momentum = 1.0;
      beta = 0.0;
      ++result.restarts;
      continue;
    }

    x_prev = std::move(x);
    lin_prev = std::move(lin_x);
    x = std::move(z);
    lin_x = std::move(lin_z);
    mu_x = std::move(mu_z);
    objective += change;
    result.objective_trace.push_back(objective);
    kkt_known = false;

    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    beta = (momentum - 1.0) / next_momentum;
    momentum = next_momentum;

    const bool small_change =
        -change <= opts.objective_rel_tol * std::max(1.0, std::abs(objective));
    Support now = support_of(x);
    if (now == support) {
      ++stable;
    } else {
      support = std::move(now);
      stable = 0;
      polished = false;
    }

    bool check = small_change;
    if (opts.polish && !polished && (stable >= opts.polish_after || small_change)) {
      polished = true;
      Coefficients p;
      if (polish_support(y, model, x, support, lambda1, lambda2, opts.mu_floor, p)) {
        VectorXd lin_p = model.linear_part(p.alpha0, p.alpha, p.s);
        VectorXd mu_p = e + lin_p;
        if (feasible(y, mu_p, opts.mu_floor)) {
          const double gain = nll_change(y, mu_x, mu_p) + penalty(p, lambda1, lambda2) -
                              penalty(x, lambda1, lambda2);
          if (std::isfinite(gain) && gain <= 0) {
            x = std::move(p);
            lin_x = std::move(lin_p);
            mu_x = std::move(mu_p);
            x_prev = x;
            lin_prev = lin_x;
            objective += gain;
            result.objective_trace.push_back(objective);
            ++result.polishes;
            momentum = 1.0;
            beta = 0.0;
            support = support_of(x);
            check = true;
          }
        }
      }
    }

    if (check) {
      const auto g = model.adjoint(residual_weights(y, mu_x, opts.mu_floor));
      result.kkt = kkt_from_gradient(g, x, n_king, lambda1, lambda2);
      kkt_known = true;
      if (within_tolerance(result.kkt)) {
        result.converged = true;
        break;
      }
    }
  }

  if (!kkt_known) {
    const auto g = model.adjoint(residual_weights(y, mu_x, opts.mu_floor));
    result.kkt = kkt_from_gradient(g, x, n_king, lambda1, lambda2);
    result.converged = within_tolerance(result.kkt);
  }
  result.coefficients = std::move(x);
  result.mu = std::move(mu_x);
  return result;
}

}  // namespace deproj

#pragma once

#include <deproj/core/error.hpp>
#include <deproj/model/forward_model.hpp>

#include <string>
#include <utility>
#include <vector>

namespace deproj {

using VectorXd = Vector<double>;
using Model = ForwardModel<double>;

/// (alpha0, alpha, s). The King block of alpha and all of s are non-negative.
struct Coefficients {
  double alpha0 = 0;
  VectorXd alpha;
  VectorXd s;

  static Coefficients zeros(const Model& model, double alpha0 = 0);

  /// Sparse view of the point-source map: (pixel index, intensity) pairs.
  std::vector<std::pair<Index, double>> active_sources() const;
  Index active_dictionary() const;
  bool zero_scene() const { return active_dictionary() == 0 && active_sources().empty(); }
};

struct FitOptions {
  int max_iters = 20000;
  double objective_rel_tol = 1e-8;
  double kkt_rel_tol = 1e-4;   // relative to lambda
  double kkt_abs_tol = 1e-8;   // relative to the intercept column mass
  double shrink = 0.5;
  double initial_step = 0;     // <= 0: power-iteration estimate
  bool restart = true;
  bool polish = true;          // Newton on the active set once the support settles
  int polish_after = 25;       // accepted iterations with an unchanged support
  double mu_floor = 1e-12;

  void validate() const;
  bool operator==(const FitOptions&) const = default;
};

struct KktResiduals {
  double intercept = 0;
  double dictionary = 0;
  double sources = 0;
};

struct FitResult {
  Coefficients coefficients;
  VectorXd mu;
  std::vector<double> objective_trace;
  KktResiduals kkt;
  KktResiduals kkt_tolerance;
  double lambda1 = 0;
  double lambda2 = 0;
  int iterations = 0;
  int restarts = 0;
  int polishes = 0;            // accepted active-set Newton steps
  bool converged = false;
};

/// Solver failure that keeps the objective history for diagnosis.
class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// sum(mu - y log mu) with 0 log mu = 0. Throws DomainError if mu <= 0 where y > 0.
double neg_log_likelihood(const VectorXd& y, const VectorXd& mu);

/// Gradient of the negative log-likelihood, M^T((mu - y)/mu), by block.
BlockVectors<double> objective_grad(const VectorXd& y, const Model& model,
                                    const Coefficients& coeffs, double mu_floor = 1e-12);

/// Proximal map of t*(lambda1 |alpha|_1 + lambda2 |s|_1) with sign constraints:
/// one-sided soft threshold on the King block and on s, two-sided on wavelets.
Coefficients prox_step(const Coefficients& z, Index n_king, double t, double lambda1,
                       double lambda2);

/// Violation of the first-order optimality conditions at `coeffs`.
KktResiduals kkt_residuals(const VectorXd& y, const Model& model, const Coefficients& coeffs,
                           double lambda1, double lambda2, double mu_floor = 1e-12);

KktResiduals kkt_from_gradient(const BlockVectors<double>& grad, const Coefficients& coeffs,
                               Index n_king, double lambda1, double lambda2);

/// Penalized Poisson fit by accelerated proximal gradient with backtracking,
/// a fixed diagonal (Fisher) metric, and function-value restarts. Accepted
/// iterates never increase the objective.
FitResult fit_fista(const VectorXd& y, const Model& model, double lambda1, double lambda2,
                    const FitOptions& opts, const Coefficients& init);

}  // namespace deproj

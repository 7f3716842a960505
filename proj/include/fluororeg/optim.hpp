#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fluororeg {

struct OptimConfig {
  int max_iters = 200;
  /// Per-dimension initial step (Powell direction scale). Empty means 1.0.
  std::vector<double> step_init;
  double tol_f = 1e-12;
  double tol_x = 1e-12;
  // ADAM
  double lr = 0.25;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws InvalidConfig when an invariant is violated.
  void validate() const;
};

struct OptimTrace {
  std::vector<double> values;  // one objective value per iteration
  int iterations = 0;
  bool converged = false;
  std::vector<double> final_params;
  std::vector<double> best_params;  // lowest objective seen
  double best_value = 0.0;
  long evaluations = 0;
};

struct OptimResult {
  std::vector<double> x;
  OptimTrace trace;
};

using Objective = std::function<double(std::span<const double>)>;
/// Returns the objective and writes the gradient into the second argument.
using ValueAndGradient = std::function<double(std::span<const double>, std::span<double>)>;

/// Brent line search parameters used inside Powell.
inline constexpr double kLineSearchTol = 1e-8;
inline constexpr int kLineSearchMaxEvals = 100;

/// Powell's direction-set method with a bracketing Brent search along each
/// direction. Stops when one sweep lowers f by less than tol_f relative to
/// |f|, when the sweep moves x by less than tol_x, or after max_iters sweeps.
/// The direction set is reset to the scaled axes every n sweeps.
/// Throws NonFiniteObjective.
OptimResult powell_minimize(const Objective& f, std::vector<double> x0, const OptimConfig& cfg);

/// ADAM with bias correction for exactly cfg.max_iters steps.
/// trace.values[k] is the objective at the k-th iterate, before its update.
/// Throws NonFiniteGradient.
OptimResult adam_minimize(const ValueAndGradient& g, std::vector<double> x0, const OptimConfig& cfg);

/// Central differences (f(x + h_i e_i) - f(x - h_i e_i)) / (2 h_i).
/// Throws NonFiniteObjective.
std::vector<double> finite_diff_grad(const Objective& f, std::span<const double> x, std::span<const double> h);

}  // namespace fluororeg

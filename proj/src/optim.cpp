#include "fluororeg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "fluororeg/error.hpp"

namespace fluororeg {

void OptimConfig::validate() const {
  if (max_iters < 0) fail(ErrorKind::InvalidConfig, "max_iters must be non-negative");
  if (!(lr > 0.0)) fail(ErrorKind::InvalidConfig, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::InvalidConfig, "ADAM betas must lie in [0, 1)");
  }
  if (!(tol_f > 0.0) || !(tol_x > 0.0)) fail(ErrorKind::InvalidConfig, "tolerances must be positive");
  if (!(eps > 0.0)) fail(ErrorKind::InvalidConfig, "eps must be positive");
  for (double s : step_init) {
    if (!(s > 0.0)) fail(ErrorKind::InvalidConfig, "initial steps must be positive");
  }
}

namespace {

constexpr double kGold = 1.618033988749895;
constexpr double kCGold = 0.3819660112501051;
constexpr double kTiny = 1e-300;

class CountingObjective {
 public:
  explicit CountingObjective(const Objective& f) : f_(f) {}

  double operator()(std::span<const double> x) {
    ++evals_;
    const double v = f_(x);
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteObjective, "objective returned a non-finite value");
    return v;
  }

  long evaluations() const { return evals_; }

 private:
  const Objective& f_;
  long evals_ = 0;
};

struct LineMinimum {
  double alpha;
  double value;
};

// Minimizes phi(alpha) = f(x + alpha d) starting from alpha = 0 where phi(0) = f0.
class LineSearch {
 public:
  LineSearch(CountingObjective& f, const std::vector<double>& x, const std::vector<double>& d)
      : f_(f), x_(x), d_(d), probe_(x.size()) {}

  double phi(double alpha) {
    if (evals_ >= kLineSearchMaxEvals) exhausted_ = true;
    ++evals_;
    for (std::size_t i = 0; i < x_.size(); ++i) probe_[i] = x_[i] + alpha * d_[i];
    return f_(probe_);
  }

  LineMinimum run(double f0) {
    // Bracket (golden expansion with parabolic extrapolation).
    double ax = 0.0, bx = 1.0;
    double fa = f0, fb = phi(bx);
    if (fb > fa) {
      std::swap(ax, bx);
      std::swap(fa, fb);
    }
    double cx = bx + kGold * (bx - ax);
    double fc = phi(cx);
    while (fb > fc && !exhausted_) {
      const double r = (bx - ax) * (fb - fc);
      const double q = (bx - cx) * (fb - fa);
      double denom = 2.0 * std::copysign(std::max(std::abs(q - r), 1e-20), q - r);
      double u = bx - ((bx - cx) * q - (bx - ax) * r) / denom;
      const double ulim = bx + 100.0 * (cx - bx);
      double fu;
      if ((bx - u) * (u - cx) > 0.0) {
        fu = phi(u);
        if (fu < fc) {
          ax = bx; fa = fb;
          bx = u; fb = fu;
          break;
        }
        if (fu > fb) {
          cx = u; fc = fu;
          break;
        }
        u = cx + kGold * (cx - bx);
        fu = phi(u);
      } else if ((cx - u) * (u - ulim) > 0.0) {
        fu = phi(u);
        if (fu < fc) {
          bx = cx; cx = u; u = cx + kGold * (cx - bx);
          fb = fc; fc = fu; fu = phi(u);
        }
      } else if ((u - ulim) * (ulim - cx) >= 0.0) {
        u = ulim;
        fu = phi(u);
      } else {
        u = cx + kGold * (cx - bx);
        fu = phi(u);
      }
      ax = bx; bx = cx; cx = u;
      fa = fb; fb = fc; fc = fu;
    }
    LineMinimum best{0.0, f0};
    auto consider = [&](double a, double fv) {
      if (fv < best.value) best = {a, fv};
    };
    consider(ax, fa);
    consider(bx, fb);
    consider(cx, fc);
    if (exhausted_) return best;
    const LineMinimum b = brent(std::min(ax, cx), std::max(ax, cx), bx, fb);
    consider(b.alpha, b.value);
    return best;
  }

 private:
  LineMinimum brent(double a, double b, double x, double fx) {
    double w = x, v = x, fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    while (!exhausted_) {
      const double xm = 0.5 * (a + b);
      const double tol1 = kLineSearchTol * std::abs(x) + 1e-12;
      const double tol2 = 2.0 * tol1;
      if (std::abs(x - xm) <= (tol2 - 0.5 * (b - a))) break;
      if (std::abs(e) > tol1) {
        const double r = (x - w) * (fx - fv);
        double q = (x - v) * (fx - fw);
        double p = (x - v) * q - (x - w) * r;
        q = 2.0 * (q - r);
        if (q > 0.0) p = -p;
        q = std::abs(q);
        const double etemp = e;
        e = d;
        if (std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x)) {
          e = (x >= xm) ? a - x : b - x;
          d = kCGold * e;
        } else {
          d = p / q;
          const double u = x + d;
          if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        }
      } else {
        e = (x >= xm) ? a - x : b - x;
        d = kCGold * e;
      }
      const double u = (std::abs(d) >= tol1) ? x + d : x + std::copysign(tol1, d);
      const double fu = phi(u);
      if (fu <= fx) {
        if (u >= x) a = x; else b = x;
        v = w; w = x; x = u;
        fv = fw; fw = fx; fx = fu;
      } else {
        if (u < x) a = u; else b = u;
        if (fu <= fw || w == x) {
          v = w; w = u;
          fv = fw; fw = fu;
        } else if (fu <= fv || v == x || v == w) {
          v = u;
          fv = fu;
        }
      }
    }
    return {x, fx};
  }

  CountingObjective& f_;
  const std::vector<double>& x_;
  const std::vector<double>& d_;
  std::vector<double> probe_;
  int evals_ = 0;
  bool exhausted_ = false;
};

std::vector<std::vector<double>> axis_directions(std::size_t n, const std::vector<double>& step) {
  std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) dirs[i][i] = step.empty() ? 1.0 : step[i];
  return dirs;
}

}  // namespace

OptimResult powell_minimize(const Objective& f, std::vector<double> x0, const OptimConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  if (!cfg.step_init.empty() && cfg.step_init.size() != n) {
    fail(ErrorKind::InvalidConfig, "step_init size does not match the parameter count");
  }
  CountingObjective obj(f);
  OptimResult result;
  std::vector<double> x = std::move(x0);
  double fx = obj(x);
  OptimTrace& trace = result.trace;

  auto dirs = axis_directions(n, cfg.step_init);
  std::vector<double> x_start = x;
  int since_reset = 0;

  for (int iter = 0; iter < cfg.max_iters && n > 0; ++iter) {
    const double f_start = fx;
    std::size_t biggest = 0;
    double biggest_drop = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double before = fx;
      LineSearch ls(obj, x, dirs[i]);
      const LineMinimum m = ls.run(fx);
      if (m.value < fx) {
        for (std::size_t k = 0; k < n; ++k) x[k] += m.alpha * dirs[i][k];
        fx = m.value;
      }
      if (before - fx > biggest_drop) {
        biggest_drop = before - fx;
        biggest = i;
      }
    }
    trace.values.push_back(fx);
    trace.iterations = iter + 1;

    double max_move = 0.0;
    for (std::size_t k = 0; k < n; ++k) max_move = std::max(max_move, std::abs(x[k] - x_start[k]));
    if (2.0 * (f_start - fx) <= cfg.tol_f * (std::abs(f_start) + std::abs(fx)) + kTiny || max_move <= cfg.tol_x) {
      trace.converged = true;
      break;
    }

    // Extrapolated point along the net displacement of this sweep.
    std::vector<double> ext(n), net(n);
    for (std::size_t k = 0; k < n; ++k) {
      ext[k] = 2.0 * x[k] - x_start[k];
      net[k] = x[k] - x_start[k];
    }
    x_start = x;
    const double f_ext = obj(ext);
    if (++since_reset >= static_cast<int>(n)) {
      dirs = axis_directions(n, cfg.step_init);
      since_reset = 0;
    } else if (f_ext < f_start) {
      const double a = f_start - fx - biggest_drop;
      const double b = f_start - f_ext;
      const double t = 2.0 * (f_start - 2.0 * fx + f_ext) * a * a - biggest_drop * b * b;
      if (t < 0.0) {
        LineSearch ls(obj, x, net);
        const LineMinimum m = ls.run(fx);
        if (m.value < fx) {
          for (std::size_t k = 0; k < n; ++k) x[k] += m.alpha * net[k];
          fx = m.value;
        }
        dirs[biggest] = dirs[n - 1];
        dirs[n - 1] = net;
      }
    }
  }
  trace.final_params = x;
  trace.best_params = x;
  trace.best_value = fx;
  trace.evaluations = obj.evaluations();
  result.x = std::move(x);
  return result;
}

OptimResult adam_minimize(const ValueAndGradient& g, std::vector<double> x0, const OptimConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  std::vector<double> x = std::move(x0);
  std::vector<double> grad(n, 0.0), m(n, 0.0), v(n, 0.0);
  OptimResult result;
  OptimTrace& trace = result.trace;
  trace.best_value = std::numeric_limits<double>::infinity();
  double b1t = 1.0, b2t = 1.0;
  for (int step = 0; step < cfg.max_iters; ++step) {
    const double value = g(x, grad);
    ++trace.evaluations;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(grad[i])) {
        trace.final_params = x;
        fail(ErrorKind::NonFiniteGradient,
             "gradient component " + std::to_string(i) + " is non-finite at step " + std::to_string(step));
      }
    }
    trace.values.push_back(value);
    if (value < trace.best_value) {
      trace.best_value = value;
      trace.best_params = x;
    }
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / (1.0 - b1t);
      const double v_hat = v[i] / (1.0 - b2t);
      x[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  trace.iterations = cfg.max_iters;
  trace.converged = true;
  trace.final_params = x;
  if (trace.best_params.empty()) {
    trace.best_params = x;
  }
  result.x = std::move(x);
  return result;
}

std::vector<double> finite_diff_grad(const Objective& f, std::span<const double> x, std::span<const double> h) {
  if (h.size() != x.size()) fail(ErrorKind::InvalidConfig, "step vector size does not match the parameter count");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(h[i] > 0.0)) fail(ErrorKind::InvalidConfig, "finite-difference steps must be positive");
    probe[i] = x[i] + h[i];
    const double fp = f(probe);
    probe[i] = x[i] - h[i];
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(ErrorKind::NonFiniteObjective, "objective is non-finite near coordinate " + std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h[i]);
  }
  return grad;
}

}  // namespace fluororeg

#include "fluororeg/discal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <limits>
#include <memory>
#include <unordered_map>

#include <Eigen/Dense>

#include "fluororeg/error.hpp"
#include "fluororeg/mesh.hpp"
#include "fluororeg/parallel.hpp"
#include "fluororeg/simd/kernels.hpp"

namespace fluororeg {

void BeadGridSpec::validate() const {
  if (rows < 2 || cols < 2) fail(ErrorKind::InvalidParams, "bead grid needs at least 2 rows and 2 columns");
  if (!(spacing > 0.0)) fail(ErrorKind::InvalidParams, "bead spacing must be positive");
  if (!(pitch > 0.0)) fail(ErrorKind::InvalidParams, "pixel pitch must be positive");
}

std::vector<Vec2> ideal_grid(const BeadGridSpec& spec) {
  spec.validate();
  const double step = spec.spacing / spec.pitch;
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(spec.rows) * spec.cols);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      pts.emplace_back(spec.center.x() + (c - 0.5 * (spec.cols - 1)) * step,
                       spec.center.y() + (r - 0.5 * (spec.rows - 1)) * step);
    }
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Polynomial map

std::array<double, DistortionMap::kTerms> poly3_basis(double x, double y) {
  return {1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y};
}

DistortionMap DistortionMap::identity(int width, int height) {
  DistortionMap m;
  m.width = width;
  m.height = height;
  m.coeffs_x[1] = 1.0;
  m.coeffs_y[2] = 1.0;
  return m;
}

Vec2 DistortionMap::normalize(const Vec2& px) const {
  return Vec2((px.x() - 0.5 * (width - 1)) / (0.5 * width), (px.y() - 0.5 * (height - 1)) / (0.5 * height));
}

Vec2 DistortionMap::denormalize(const Vec2& n) const {
  return Vec2(n.x() * 0.5 * width + 0.5 * (width - 1), n.y() * 0.5 * height + 0.5 * (height - 1));
}

Vec2 DistortionMap::apply(const Vec2& px) const {
  const Vec2 n = normalize(px);
  const auto b = poly3_basis(n.x(), n.y());
  double ox = 0.0, oy = 0.0;
  for (int k = 0; k < kTerms; ++k) {
    ox += coeffs_x[k] * b[k];
    oy += coeffs_y[k] * b[k];
  }
  return denormalize(Vec2(ox, oy));
}

Eigen::Matrix2d DistortionMap::jacobian(const Vec2& px) const {
  const Vec2 n = normalize(px);
  const double x = n.x(), y = n.y();
  const std::array<double, kTerms> dx = {0, 1, 0, 2 * x, y, 0, 3 * x * x, 2 * x * y, y * y, 0};
  const std::array<double, kTerms> dy = {0, 0, 1, 0, x, 2 * y, 0, x * x, 2 * x * y, 3 * y * y};
  Eigen::Matrix2d jn = Eigen::Matrix2d::Zero();
  for (int k = 0; k < kTerms; ++k) {
    jn(0, 0) += coeffs_x[k] * dx[k];
    jn(0, 1) += coeffs_x[k] * dy[k];
    jn(1, 0) += coeffs_y[k] * dx[k];
    jn(1, 1) += coeffs_y[k] * dy[k];
  }
  // Normalization scales are per axis: d(out_px)/d(in_px) = S * Jn * S^-1.
  const double sx = 0.5 * width, sy = 0.5 * height;
  Eigen::Matrix2d j;
  j << jn(0, 0), jn(0, 1) * sx / sy, jn(1, 0) * sy / sx, jn(1, 1);
  return j;
}

Vec2 DistortionMap::invert(const Vec2& ideal) const {
  Vec2 p = ideal;
  for (int it = 0; it < 50; ++it) {
    const Vec2 r = apply(p) - ideal;
    if (r.norm() < 1e-11) return p;
    p -= jacobian(p).partialPivLu().solve(r);
    if (!p.allFinite() || (p - ideal).norm() > 50.0) {
      fail(ErrorKind::InversionDivergence, "distortion map inversion left the 50 px envelope");
    }
  }
  if ((apply(p) - ideal).norm() > 1e-8) fail(ErrorKind::InversionDivergence, "distortion map inversion did not converge");
  return p;
}

// ---------------------------------------------------------------------------
// Coherent point drift

namespace {

void require_spread(const std::vector<Vec2>& pts, const char* which) {
  if (pts.size() < 4) fail(ErrorKind::DegenerateConfiguration, std::string(which) + " set has fewer than 4 points");
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) cov += (p - mean) * (p - mean).transpose();
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  if (!(ev(0) > 1e-10 * ev(1))) fail(ErrorKind::DegenerateConfiguration, std::string(which) + " points are collinear");
}

/// Uniform bucket grid over the detections for radius queries.
class PointBuckets {
 public:
  PointBuckets(const std::vector<Vec2>& pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(cell_of(pts[i]))].push_back(static_cast<int>(i));
  }

  template <class F>
  void near(const Vec2& q, F&& f) const {
    const auto c = cell_of(q);
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(key({c.first + dx, c.second + dy}));
        if (it == cells_.end()) continue;
        for (int i : it->second) f(i);
      }
    }
  }

 private:
  std::pair<long long, long long> cell_of(const Vec2& p) const {
    return {static_cast<long long>(std::floor(p.x() / cell_)), static_cast<long long>(std::floor(p.y() / cell_))};
  }
  static long long key(std::pair<long long, long long> c) { return c.first * 4000037LL + c.second; }

  const std::vector<Vec2>& pts_;
  double cell_;
  std::unordered_map<long long, std::vector<int>> cells_;
};

struct EmState {
  Eigen::Matrix2d rot = Eigen::Matrix2d::Identity();
  double scale = 1.0;
  Vec2 trans = Vec2::Zero();
  double sigma2 = 0.0;

  Vec2 map(const Vec2& y) const { return scale * (rot * y) + trans; }
};

/// Visits every (m, n) pair whose Gaussian weight can matter, with the weight.
/// Weights are evaluated a row at a time through the neg_exp kernel.
template <class F>
void for_each_pair(const std::vector<Vec2>& x, const std::vector<Vec2>& ty, double sigma2, double extent,
                   const PointBuckets* buckets, F&& f) {
  const double r2 = 60.0 * sigma2;
  const double scale = 1.0 / (2.0 * sigma2);
  const auto neg_exp = simd::active_kernels().neg_exp;
  thread_local std::vector<double> d2, e;
  thread_local std::vector<int> idx;
  d2.resize(x.size());
  e.resize(x.size());
  if (buckets == nullptr || r2 >= extent * extent) {
    for (std::size_t m = 0; m < ty.size(); ++m) {
      for (std::size_t n = 0; n < x.size(); ++n) d2[n] = (x[n] - ty[m]).squaredNorm();
      neg_exp(d2.data(), e.data(), x.size(), scale);
      for (std::size_t n = 0; n < x.size(); ++n) f(static_cast<int>(m), static_cast<int>(n), e[n]);
    }
    return;
  }
  for (std::size_t m = 0; m < ty.size(); ++m) {
    idx.clear();
    std::size_t k = 0;
    buckets->near(ty[m], [&](int n) {
      const double d = (x[n] - ty[m]).squaredNorm();
      if (d < r2) {
        idx.push_back(n);
        d2[k++] = d;
      }
    });
    neg_exp(d2.data(), e.data(), k, scale);
    for (std::size_t i = 0; i < k; ++i) f(static_cast<int>(m), idx[i], e[i]);
  }
}

}  // namespace

Correspondences cpd_align(const std::vector<Vec2>& detected, const std::vector<Vec2>& ideal, const CpdConfig& cfg) {
  require_spread(detected, "detected");
  require_spread(ideal, "ideal");
  if (!(cfg.w_outlier >= 0.0 && cfg.w_outlier < 1.0) || cfg.max_em_iters < 1 || !(cfg.tol > 0.0) ||
      !(cfg.sigma2_init >= 0.0 && std::isfinite(cfg.sigma2_init))) {
    fail(ErrorKind::InvalidConfig, "invalid CPD configuration");
  }
  const auto& x = detected;
  const auto& y = ideal;
  const double n_pts = static_cast<double>(x.size()), m_pts = static_cast<double>(y.size());

  Aabb box;
  for (const Vec2& p : x) box.extend(Vec3(p.x(), p.y(), 0.0));
  for (const Vec2& p : y) box.extend(Vec3(p.x(), p.y(), 0.0));
  const double extent = (box.hi - box.lo).norm();

  EmState st;
  st.sigma2 = cfg.sigma2_init;
  if (st.sigma2 == 0.0) {
    double s = 0.0;
    for (const Vec2& a : x) {
      for (const Vec2& b : y) s += (a - b).squaredNorm();
    }
    st.sigma2 = s / (2.0 * n_pts * m_pts);
  }

  std::vector<Vec2> ty(y.size());
  std::vector<double> den(x.size());
  std::vector<double> p1(y.size()), pt1(x.size());
  std::vector<Vec2> px(y.size());
  double prev_nll = std::numeric_limits<double>::infinity();
  Correspondences out;

  auto outlier_const = [&](double sigma2) {
    return 2.0 * 3.14159265358979323846 * sigma2 * cfg.w_outlier / (1.0 - cfg.w_outlier) * m_pts / n_pts;
  };

  std::unique_ptr<PointBuckets> buckets;
  double bucket_cell = 0.0;
  auto refresh_buckets = [&](double sigma2) {
    const double r = std::sqrt(60.0 * sigma2);
    if (r * r >= extent * extent) {
      buckets.reset();
      return;
    }
    if (!buckets || r < 0.5 * bucket_cell || r > bucket_cell) {
      bucket_cell = r;
      buckets = std::make_unique<PointBuckets>(x, r);
    }
  };

  auto e_step_denominators = [&](double c) {
    for (std::size_t m = 0; m < y.size(); ++m) ty[m] = st.map(y[m]);
    std::fill(den.begin(), den.end(), c);
    for_each_pair(x, ty, st.sigma2, extent, buckets.get(), [&](int, int n, double e) { den[n] += e; });
  };

  for (int it = 0; it < cfg.max_em_iters; ++it) {
    refresh_buckets(st.sigma2);
    const double c = outlier_const(st.sigma2);
    e_step_denominators(c);
    double nll = n_pts * std::log(st.sigma2);
    for (double d : den) nll -= std::log(d);
    out.iterations = it + 1;
    if (std::abs(prev_nll - nll) <= cfg.tol * std::abs(nll)) {
      out.converged = true;
      break;
    }
    prev_nll = nll;

    std::fill(p1.begin(), p1.end(), 0.0);
    std::fill(pt1.begin(), pt1.end(), 0.0);
    std::fill(px.begin(), px.end(), Vec2::Zero());
    for_each_pair(x, ty, st.sigma2, extent, buckets.get(), [&](int m, int n, double e) {
      const double p = e / den[n];
      p1[m] += p;
      pt1[n] += p;
      px[m] += p * x[n];
    });
    double np = 0.0;
    Vec2 mu_x = Vec2::Zero(), mu_y = Vec2::Zero();
    for (std::size_t n = 0; n < x.size(); ++n) mu_x += pt1[n] * x[n];
    for (std::size_t m = 0; m < y.size(); ++m) {
      mu_y += p1[m] * y[m];
      np += p1[m];
    }
    if (!(np > 0.0)) break;
    mu_x /= np;
    mu_y /= np;
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    double yy = 0.0, xx = 0.0;
    for (std::size_t m = 0; m < y.size(); ++m) {
      const Vec2 yc = y[m] - mu_y;
      a += (px[m] - p1[m] * mu_x) * yc.transpose();
      yy += p1[m] * yc.squaredNorm();
    }
    for (std::size_t n = 0; n < x.size(); ++n) xx += pt1[n] * (x[n] - mu_x).squaredNorm();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d corr = Eigen::Matrix2d::Identity();
    corr(1, 1) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    st.rot = svd.matrixU() * corr * svd.matrixV().transpose();
    const double tr = (a.transpose() * st.rot).trace();
    st.scale = tr / yy;
    st.trans = mu_x - st.scale * st.rot * mu_y;
    st.sigma2 = (xx - st.scale * tr) / (2.0 * np);
    if (!(st.sigma2 > 1e-10)) {
      st.sigma2 = 1e-10;
      out.converged = true;
      break;
    }
  }

  // Final responsibilities at the converged transform.
  refresh_buckets(st.sigma2);
  e_step_denominators(outlier_const(st.sigma2));
  struct Candidate {
    double p;
    int m, n;
  };
  std::vector<Candidate> best(y.size(), Candidate{0.0, -1, -1});
  for_each_pair(x, ty, st.sigma2, extent, buckets.get(), [&](int m, int n, double e) {
    const double p = e / den[n];
    if (p > best[m].p || (p == best[m].p && best[m].n >= 0 && n < best[m].n)) best[m] = {p, m, n};
  });
  std::vector<Candidate> cand;
  for (const Candidate& c : best) {
    if (c.n >= 0 && c.p >= 0.5) cand.push_back(c);
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.p != b.p) return a.p > b.p;
    return a.m < b.m;
  });
  std::vector<char> used(x.size(), 0);
  double resid = 0.0;
  for (const Candidate& c : cand) {
    if (used[c.n]) continue;
    used[c.n] = 1;
    out.pairs.push_back({c.n, c.m, x[c.n], y[c.m], c.p});
    resid += (ty[c.m] - x[c.n]).norm();
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const Correspondence& a, const Correspondence& b) { return a.ideal_index < b.ideal_index; });
  out.outliers = static_cast<int>(y.size() - out.pairs.size());
  out.mean_residual = out.pairs.empty() ? 0.0 : resid / static_cast<double>(out.pairs.size());
  out.rotation = st.rot;
  out.scale = st.scale;
  out.translation = st.trans;
  out.sigma2 = st.sigma2;
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial fit

namespace {

struct FitProblem {
  Eigen::MatrixXd basis;  // K x 10 over normalized detected points
  Eigen::VectorXd tx, ty;
  double sx, sy;

  double objective(const double* cx, const double* cy) const {
    const Eigen::Map<const Eigen::VectorXd> ax(cx, DistortionMap::kTerms), ay(cy, DistortionMap::kTerms);
    const Eigen::VectorXd ex = (basis * ax - tx) * sx;
    const Eigen::VectorXd ey = (basis * ay - ty) * sy;
    return (ex.squaredNorm() + ey.squaredNorm()) / static_cast<double>(basis.rows());
  }
};

}  // namespace

double distortion_objective(const DistortionMap& map, const Correspondences& corr) {
  double s = 0.0;
  for (const auto& c : corr.pairs) s += (map.apply(c.detected) - c.ideal).squaredNorm();
  return corr.pairs.empty() ? 0.0 : s / static_cast<double>(corr.pairs.size());
}

DistortionFit fit_distortion(const Correspondences& corr, int width, int height, const OptimConfig& powell) {
  if (corr.pairs.size() < 10) {
    fail(ErrorKind::InsufficientCorrespondences,
         "need at least 10 correspondences, have " + std::to_string(corr.pairs.size()));
  }
  if (width <= 0 || height <= 0) fail(ErrorKind::InvalidParams, "image size must be positive");
  DistortionFit fit;
  fit.map = DistortionMap::identity(width, height);
  const auto k = static_cast<Eigen::Index>(corr.pairs.size());
  FitProblem prob;
  prob.basis.resize(k, DistortionMap::kTerms);
  prob.tx.resize(k);
  prob.ty.resize(k);
  prob.sx = 0.5 * width;
  prob.sy = 0.5 * height;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& c = corr.pairs[static_cast<std::size_t>(i)];
    const Vec2 dn = fit.map.normalize(c.detected);
    const Vec2 in = fit.map.normalize(c.ideal);
    const auto b = poly3_basis(dn.x(), dn.y());
    for (int j = 0; j < DistortionMap::kTerms; ++j) prob.basis(i, j) = b[j];
    prob.tx(i) = in.x();
    prob.ty(i) = in.y();
  }
  const auto qr = prob.basis.colPivHouseholderQr();
  if (qr.rank() < DistortionMap::kTerms) {
    fail(ErrorKind::InsufficientCorrespondences, "correspondences do not constrain a cubic map");
  }
  const Eigen::VectorXd ls_x = qr.solve(prob.tx), ls_y = qr.solve(prob.ty);

  std::vector<double> x0(2 * DistortionMap::kTerms);
  for (int j = 0; j < DistortionMap::kTerms; ++j) {
    x0[j] = ls_x(j);
    x0[DistortionMap::kTerms + j] = ls_y(j);
  }
  const double ls_value = prob.objective(x0.data(), x0.data() + DistortionMap::kTerms);
  fit.ls_rms_px = std::sqrt(ls_value);

  OptimConfig cfg = powell;
  if (cfg.step_init.empty()) cfg.step_init.assign(x0.size(), 1e-4);
  const OptimResult res = powell_minimize(
      [&](std::span<const double> p) { return prob.objective(p.data(), p.data() + DistortionMap::kTerms); }, x0, cfg);
  const std::vector<double>& best = res.trace.best_value <= ls_value ? res.trace.best_params : x0;
  for (int j = 0; j < DistortionMap::kTerms; ++j) {
    fit.map.coeffs_x[j] = best[j];
    fit.map.coeffs_y[j] = best[DistortionMap::kTerms + j];
  }
  fit.rms_px = std::sqrt(prob.objective(best.data(), best.data() + DistortionMap::kTerms));
  fit.trace = res.trace;
  return fit;
}

std::vector<Vec2> undistort_points(const std::vector<Vec2>& pts, const DistortionMap& map) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec2& p : pts) out.push_back(map.apply(p));
  return out;
}

GrayImage undistort_image(const GrayImage& img, const DistortionMap& map) {
  GrayImage out(img.width(), img.height());
  parallel_for(static_cast<std::size_t>(img.height()), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < img.width(); ++x) {
      const Vec2 q(x, y);
      Vec2 p = q;
      for (int it = 0; it < 10; ++it) p += q - map.apply(p);
      if (!p.allFinite() || (p - q).norm() > 50.0) {
        fail(ErrorKind::InversionDivergence, "fixed-point inversion moved more than 50 px");
      }
      out.at(x, y) = bilinear_sample(img, p);
    }
  });
  return out;
}

GrayImage distort_image(const GrayImage& ideal, const DistortionMap& map) {
  GrayImage out(ideal.width(), ideal.height());
  parallel_for(static_cast<std::size_t>(ideal.height()), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < ideal.width(); ++x) out.at(x, y) = bilinear_sample(ideal, map.apply(Vec2(x, y)));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Calibration file

namespace {

std::string join_numbers(const double* v, int n) {
  std::string s;
  char buf[40];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i] == 0.0 ? 0.0 : v[i]);
    if (i) s += ' ';
    s += buf;
  }
  return s;
}

std::vector<double> parse_numbers(std::string_view text, std::size_t expected, long long line) {
  std::istringstream in{std::string(text)};
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v)) throw ParseError("not a finite number: '" + tok + "'", -1, line);
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " numbers, found " + std::to_string(out.size()), -1,
                     line);
  }
  return out;
}

}  // namespace

std::string format_calibration(const CalibrationRecord& rec) {
  std::string s;
  s += "plane: ";
  s += plane_letter(rec.plane);
  s += "\nbasis: poly3-normalized\n";
  s += "coeffs_x: " + join_numbers(rec.map.coeffs_x.data(), DistortionMap::kTerms) + "\n";
  s += "coeffs_y: " + join_numbers(rec.map.coeffs_y.data(), DistortionMap::kTerms) + "\n";
  s += "rms_px: " + join_numbers(&rec.rms_px, 1) + "\n";
  if (rec.sical_source_mm) s += "sical_source_mm: " + join_numbers(rec.sical_source_mm->data(), 3) + "\n";
  return s;
}

CalibrationRecord parse_calibration(std::string_view text, int width, int height) {
  CalibrationRecord rec;
  rec.map = DistortionMap::identity(width, height);
  bool seen_plane = false, seen_basis = false, seen_x = false, seen_y = false, seen_rms = false;
  std::istringstream in{std::string(text)};
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw ParseError("expected 'key: value'", -1, line_no);
    const std::string key = line.substr(0, colon);
    const std::string_view value = std::string_view(line).substr(colon + 2);
    if (key == "plane") {
      if (value != "A" && value != "B") throw ParseError("plane must be A or B", -1, line_no);
      rec.plane = value == "A" ? Plane::A : Plane::B;
      seen_plane = true;
    } else if (key == "basis") {
      if (value != "poly3-normalized") throw ParseError("unsupported basis '" + std::string(value) + "'", -1, line_no);
      seen_basis = true;
    } else if (key == "coeffs_x" || key == "coeffs_y") {
      const auto v = parse_numbers(value, DistortionMap::kTerms, line_no);
      auto& dst = key == "coeffs_x" ? rec.map.coeffs_x : rec.map.coeffs_y;
      std::copy(v.begin(), v.end(), dst.begin());
      (key == "coeffs_x" ? seen_x : seen_y) = true;
    } else if (key == "rms_px") {
      rec.rms_px = parse_numbers(value, 1, line_no)[0];
      seen_rms = true;
    } else if (key == "sical_source_mm") {
      const auto v = parse_numbers(value, 3, line_no);
      rec.sical_source_mm = Vec3(v[0], v[1], v[2]);
    } else {
      throw ParseError("unknown key '" + key + "'", -1, line_no);
    }
  }
  if (!(seen_plane && seen_basis && seen_x && seen_y && seen_rms)) {
    throw ParseError("calibration file is missing a required field", -1, line_no + 1);
  }
  return rec;
}

BeadGridSpec bead_grid_for(int width, int height, double full_pitch, int downscale) {
  BeadGridSpec spec;
  spec.center = Vec2((width - 1) * 0.5, (height - 1) * 0.5);
  spec.pitch = full_pitch * downscale;
  spec.validate();
  return spec;
}

BeadCalibration calibrate_bead_image(const GrayImage& img, const BeadGridSpec& spec) {
  BeadCalibration out;
  BlobConfig bc;
  bc.polarity = Polarity::Dark;
  bc.threshold = 0.6;
  bc.min_area = 1.0;
  const double spacing_px = spec.spacing / spec.pitch;
  bc.max_area = spacing_px * spacing_px * 0.5;
  out.blobs = detect_blobs(img, bc);
  std::vector<Vec2> pts;
  pts.reserve(out.blobs.size());
  for (const Blob& b : out.blobs) pts.push_back(b.centroid);
  CpdConfig cpd;
  cpd.sigma2_init = spacing_px * spacing_px;
  out.corr = cpd_align(pts, ideal_grid(spec), cpd);
  out.fit = fit_distortion(out.corr, img.width(), img.height());
  return out;
}

}  // namespace fluororeg

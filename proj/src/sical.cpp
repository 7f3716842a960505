#include "fluororeg/sical.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fluororeg/error.hpp"

namespace fluororeg {

void PlatePhantomSpec::validate() const {
  if (!(plate_diameter > 0.0)) fail(ErrorKind::InvalidParams, "plate diameter must be positive");
  if (!(standoff > 0.0)) fail(ErrorKind::InvalidParams, "plate standoff must be positive");
}

ShadowFit fit_circle(const std::vector<Vec2>& pts) {
  if (pts.size() < 3) fail(ErrorKind::DegenerateConfiguration, "circle fit needs at least 3 points");
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());

  // Kåsa: x^2 + y^2 + D x + E y + F = 0 in mean-centered coordinates.
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 q = pts[static_cast<std::size_t>(i)] - mean;
    a(i, 0) = q.x();
    a(i, 1) = q.y();
    a(i, 2) = 1.0;
    b(i) = -q.squaredNorm();
  }
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < 3) fail(ErrorKind::DegenerateConfiguration, "edge points are collinear");
  const Eigen::Vector3d def = qr.solve(b);
  Vec2 c(-0.5 * def(0), -0.5 * def(1));
  const double r2 = c.squaredNorm() - def(2);
  if (!(r2 > 0.0)) fail(ErrorKind::DegenerateConfiguration, "algebraic circle fit failed");
  double r = std::sqrt(r2);

  // Gauss-Newton on sum (|p - c| - r)^2.
  for (int it = 0; it < 50; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (const Vec2& p : pts) {
      const Vec2 d = p - mean - c;
      const double dist = d.norm();
      if (dist == 0.0) continue;
      const Eigen::Vector3d j(-d.x() / dist, -d.y() / dist, -1.0);
      jtj += j * j.transpose();
      jtr += j * (dist - r);
    }
    const Eigen::Vector3d step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) break;
    c += step.head<2>();
    r += step(2);
    if (step.norm() < 1e-12 * (1.0 + r)) break;
  }

  ShadowFit fit;
  fit.center = c + mean;
  fit.radius = r;
  fit.edge_points = pts.size();
  double ss = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) {
    const Vec2 d = p - fit.center;
    ss += (d.norm() - r) * (d.norm() - r);
    cov += d * d.transpose();
  }
  fit.rms = std::sqrt(ss / static_cast<double>(pts.size()));
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  fit.axis_ratio = ev(0) > 0.0 ? std::sqrt(ev(1) / ev(0)) : std::numeric_limits<double>::infinity();
  fit.ellipse_warning = fit.axis_ratio > 1.005;
  if (!(fit.radius > 0.0)) fail(ErrorKind::DegenerateConfiguration, "circle fit produced a non-positive radius");
  return fit;
}

std::vector<Vec2> shadow_edge_points(const GrayImage& img, const ShadowConfig& cfg) {
  const int w = img.width(), h = img.height();
  auto dark = [&](int x, int y) { return img.at(x, y) < cfg.edge_threshold; };

  // Largest 8-connected dark component.
  std::vector<int> label(img.size(), -1);
  std::vector<int> stack;
  int best_label = -1;
  std::size_t best_size = 0;
  bool best_touches = false;
  int next = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!dark(x0, y0) || label[static_cast<std::size_t>(y0) * w + x0] >= 0) continue;
      const int id = next++;
      std::size_t size = 0;
      bool touches = false;
      stack.assign(1, y0 * w + x0);
      label[static_cast<std::size_t>(y0) * w + x0] = id;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int x = idx % w, y = idx / w;
        ++size;
        if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
            if (label[nidx] >= 0 || !dark(nx, ny)) continue;
            label[nidx] = id;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best_label = id;
        best_touches = touches;
      }
    }
  }
  if (best_label < 0 || best_size < static_cast<std::size_t>(cfg.min_area_px)) {
    fail(ErrorKind::NoShadowFound, "no dark component above the threshold");
  }
  if (best_touches) fail(ErrorKind::PartialShadow, "shadow touches the image border");

  std::vector<Vec2> pts;
  const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      if (label[static_cast<std::size_t>(y) * w + x] != best_label) continue;
      const double vin = img.at(x, y);
      for (const auto& d : nb) {
        const int nx = x + d[0], ny = y + d[1];
        if (dark(nx, ny)) continue;
        const double vout = img.at(nx, ny);
        const double t = (cfg.edge_threshold - vin) / (vout - vin);
        pts.emplace_back(x + t * d[0], y + t * d[1]);
      }
    }
  }
  return pts;
}

ShadowFit fit_plate_shadow(const GrayImage& img, const ShadowConfig& cfg) {
  return fit_circle(shadow_edge_points(img, cfg));
}

SicalResult solve_source(const ShadowFit& fit, const PlatePhantomSpec& spec, double pitch, const Vec2& principal) {
  spec.validate();
  if (!(pitch > 0.0)) fail(ErrorKind::InvalidParams, "pixel pitch must be positive");
  const double plate_r = 0.5 * spec.plate_diameter;
  const double m = fit.radius * pitch / plate_r;
  if (!(m > 1.0)) fail(ErrorKind::MagnificationTooSmall, "shadow magnification must exceed 1");
  const double d = spec.standoff;
  const double height = m * d / (m - 1.0);
  const Vec2 c = (fit.center - principal) * pitch;
  const Vec2 s = -c * (height - d) / d;
  SicalResult res;
  res.source = Vec3(s.x(), s.y(), height);
  res.magnification = m;
  res.fit = fit;
  return res;
}

}  // namespace fluororeg

#include "fluororeg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "fluororeg/error.hpp"
#include "fluororeg/eval.hpp"
#include "fluororeg/fileio.hpp"
#include "fluororeg/parallel.hpp"

namespace fluororeg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng derived_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed2701ULL)));
}

// ---------------------------------------------------------------------------
// Trajectories

std::vector<std::string> activity_names() { return {"level_walk", "stair_descent", "ramp_descent", "chair_sit"}; }

ActivityTemplate activity_template(std::string_view name) {
  ActivityTemplate t;
  t.name = std::string(name);
  auto set = [&](double flex_mean, double flex_amp, double scale) {
    t.mean = {flex_mean, 0.0, 0.0, 0.0, 0.0, 0.0};
    t.bank[0] = {{flex_amp, 1.0, 0.0}};
    t.bank[1] = {{2.0 * scale, 1.0, 0.3}};
    t.bank[2] = {{4.0 * scale, 1.0, 1.2}, {1.5 * scale, 2.0, 0.4}};
    t.bank[3] = {{2.0 * scale, 1.0, 0.8}};
    t.bank[4] = {{3.0 * scale, 2.0, 0.0}};
    t.bank[5] = {{4.0 * scale, 1.0, 1.6}};
  };
  if (name == "level_walk") {
    set(20.0, 25.0, 1.0);
  } else if (name == "stair_descent") {
    set(30.0, 30.0, 1.2);
  } else if (name == "ramp_descent") {
    set(25.0, 22.0, 0.9);
  } else if (name == "chair_sit") {
    set(45.0, 40.0, 0.6);
  } else {
    fail(ErrorKind::InvalidParams, "unknown activity '" + std::string(name) + "'");
  }
  return t;
}

Vec3 workspace_center(const DualPlaneRig& rig, double clearance) {
  // Inward normals point from each detector toward its source.
  const Vec3 na = -rig.camera_a.normal();
  const Vec3 nb = -rig.camera_b.normal();
  const Vec3 bisector = (na + nb).normalized();
  return bisector * (clearance / bisector.dot(na));
}

RigidPose dof_pose(const DofVector& dof, const DualPlaneRig& rig) {
  constexpr double kBaseYawDeg = 55.0;
  const Quat q = Quat(Eigen::AngleAxisd((kBaseYawDeg + dof[2]) * kDeg, Vec3::UnitY())) *
                 Quat(Eigen::AngleAxisd(dof[1] * kDeg, Vec3::UnitZ())) *
                 Quat(Eigen::AngleAxisd(dof[0] * kDeg, Vec3::UnitX()));
  return RigidPose(q.normalized(), workspace_center(rig) + Vec3(dof[3], dof[4], dof[5]));
}

std::vector<DofVector> gen_trajectory_dofs(const ActivityTemplate& tpl, int n_frames, std::uint64_t seed) {
  if (n_frames < 1) fail(ErrorKind::InvalidParams, "n_frames must be >= 1");
  Rng rng = derived_rng(seed, 0);
  std::uniform_real_distribution<double> jitter(-0.25 * kPi, 0.25 * kPi);
  auto bank = tpl.bank;
  for (int d = 1; d < kDofs; ++d) {
    for (auto& s : bank[d]) s.phase += jitter(rng);
  }
  std::vector<DofVector> out;
  out.reserve(static_cast<std::size_t>(n_frames));
  for (int k = 0; k < n_frames; ++k) {
    const double tau = static_cast<double>(k) / n_frames;
    DofVector v = tpl.mean;
    for (int d = 0; d < kDofs; ++d) {
      for (const auto& s : bank[d]) {
        v[d] += s.amplitude * (std::sin(2.0 * kPi * s.frequency * tau + s.phase) - std::sin(s.phase));
      }
    }
    out.push_back(v);
  }
  return out;
}

std::vector<RigidPose> gen_trajectory(const ActivityTemplate& tpl, int n_frames, std::uint64_t seed,
                                      const DualPlaneRig& rig) {
  std::vector<RigidPose> poses;
  for (const auto& d : gen_trajectory_dofs(tpl, n_frames, seed)) poses.push_back(dof_pose(d, rig));
  return poses;
}

// ---------------------------------------------------------------------------
// Robot noise

void NoiseModel::validate() const {
  if (!(trans_sigma >= 0.0 && rot_sigma >= 0.0)) fail(ErrorKind::InvalidParams, "noise sigmas must be >= 0");
}

RigidPose perturb_pose(const RigidPose& p, const NoiseModel& noise, Rng& rng) {
  noise.validate();
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec3 dt, w;
  for (int i = 0; i < 3; ++i) dt[i] = n01(rng) * noise.trans_sigma;
  for (int i = 0; i < 3; ++i) w[i] = n01(rng) * noise.rot_sigma * kDeg;
  if (noise.trans_sigma == 0.0 && noise.rot_sigma == 0.0) return p;
  return RigidPose((exp_rotation(w) * p.rotation()).normalized(), p.translation() + dt);
}

namespace {

double bisect_sigma(const std::function<double(double)>& pct, double target) {
  double lo = 0.0, hi = 1.0;
  while (pct(hi) < target) hi *= 2.0;
  for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pct(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

NoiseModel calibrate_noise(const DualPlaneRig& rig, const NoiseCalibration& cal) {
  if (cal.samples < 2) fail(ErrorKind::InvalidParams, "calibration needs at least 2 samples");
  Rng rng = derived_rng(cal.seed, 0);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Vec3> dt(static_cast<std::size_t>(cal.samples)), w(static_cast<std::size_t>(cal.samples));
  for (int i = 0; i < cal.samples; ++i) {
    for (int k = 0; k < 3; ++k) dt[i][k] = n01(rng);
    for (int k = 0; k < 3; ++k) w[i][k] = n01(rng);
  }
  const RigidPose truth;
  NoiseModel m;
  m.trans_sigma = bisect_sigma(
      [&](double s) {
        std::vector<double> v;
        v.reserve(dt.size());
        for (const Vec3& d : dt) v.push_back(inplane_l1(RigidPose::from_translation(s * d), truth, rig));
        return percentile(std::move(v), cal.percentile);
      },
      cal.target_inplane_l1);
  m.rot_sigma = bisect_sigma(
      [&](double s) {
        std::vector<double> v;
        v.reserve(w.size());
        for (const Vec3& x : w) v.push_back(geodesic_angle(RigidPose::from_axis_angle(s * kDeg * x), truth));
        return percentile(std::move(v), cal.percentile);
      },
      cal.target_geodesic);
  return m;
}

NoiseModel load_noise_config(const std::string& path) {
  const std::string text = read_file_text(path);
  try {
    const auto j = nlohmann::json::parse(text);
    NoiseModel m;
    m.trans_sigma = j.at("trans_sigma_mm").get<double>();
    m.rot_sigma = j.at("rot_sigma_deg").get<double>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what(), -1, -1);
  }
}

// ---------------------------------------------------------------------------
// Acquisition

std::string trial_id_for(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "t%04d", index);
  return buf;
}

std::vector<AcquiredFrame> acquire_trial(const MeshAccel& mesh, const std::vector<RigidPose>& poses,
                                         const DualPlaneRig& rig, const AcquireOptions& opt) {
  opt.noise.validate();
  opt.render.validate();
  if (!(opt.pixel_noise_sigma >= 0.0)) fail(ErrorKind::InvalidParams, "pixel noise sigma must be >= 0");
  std::vector<AcquiredFrame> frames(poses.size());
  parallel_for(poses.size(), [&](std::size_t i) {
    const int index = opt.first_id + static_cast<int>(i);
    Rng rng = derived_rng(opt.noise.seed, static_cast<std::uint64_t>(index));
    AcquiredFrame& f = frames[i];
    TrialRecord& r = f.record;
    r.trial_id = trial_id_for(index);
    r.activity = opt.activity;
    r.frame = static_cast<int>(i);
    r.true_pose = parse_pose(format_pose(poses[i]));
    r.target_pose = parse_pose(format_pose(perturb_pose(poses[i], opt.noise, rng)));
    r.image_a = "images/" + r.trial_id + "_a.pgm";
    r.image_b = "images/" + r.trial_id + "_b.pgm";
    std::normal_distribution<double> pix(0.0, 1.0);
    for (Plane plane : {Plane::A, Plane::B}) {
      GrayImage img = render(mesh, r.true_pose, rig.camera(plane), opt.render);
      const auto& dist = plane == Plane::A ? opt.distortion_a : opt.distortion_b;
      if (dist) img = distort_image(img, *dist);
      if (opt.pixel_noise_sigma > 0.0) {
        for (double& v : img.pixels()) v += opt.pixel_noise_sigma * pix(rng);
      }
      (plane == Plane::A ? f.image_a : f.image_b) = std::move(img);
    }
  });
  return frames;
}

std::vector<GrayImage> repeatability_probe(const MeshAccel& mesh, const RigidPose& default_pose,
                                           const DualPlaneRig& rig, Plane plane, int k, const NoiseModel& jitter,
                                           const RenderConfig& cfg) {
  if (k < 2) fail(ErrorKind::InvalidParams, "repeatability probe needs k >= 2");
  std::vector<GrayImage> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    Rng rng = derived_rng(jitter.seed, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = render(mesh, perturb_pose(default_pose, jitter, rng), rig.camera(plane), cfg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration phantoms

DistortionMap random_distortion(Rng& rng, int width, int height, double max_disp_px) {
  if (width <= 0 || height <= 0 || !(max_disp_px >= 0.0)) fail(ErrorKind::InvalidParams, "invalid distortion size");
  std::normal_distribution<double> n01(0.0, 1.0);
  std::array<double, DistortionMap::kTerms> dx{}, dy{};
  for (int k = 0; k < DistortionMap::kTerms; ++k) {
    dx[k] = n01(rng);
    dy[k] = n01(rng);
  }
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const auto b = poly3_basis(-1.0 + 0.1 * i, -1.0 + 0.1 * j);
      double ex = 0.0, ey = 0.0;
      for (int k = 0; k < DistortionMap::kTerms; ++k) {
        ex += dx[k] * b[k];
        ey += dy[k] * b[k];
      }
      worst = std::max(worst, std::hypot(ex * 0.5 * width, ey * 0.5 * height));
    }
  }
  DistortionMap m = DistortionMap::identity(width, height);
  const double s = worst > 0.0 ? max_disp_px / worst : 0.0;
  for (int k = 0; k < DistortionMap::kTerms; ++k) {
    m.coeffs_x[k] += s * dx[k];
    m.coeffs_y[k] += s * dy[k];
  }
  return m;
}

GrayImage bead_image(const std::vector<Vec2>& centers, int width, int height, double bead_radius_px) {
  GrayImage img(width, height, 1.0);
  constexpr int kSub = 4;
  const double r2 = bead_radius_px * bead_radius_px;
  for (const Vec2& c : centers) {
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x() - bead_radius_px - 1)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(c.x() + bead_radius_px + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y() - bead_radius_px - 1)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(c.y() + bead_radius_px + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int inside = 0;
        for (int b = 0; b < kSub; ++b) {
          for (int a = 0; a < kSub; ++a) {
            const double sx = x - 0.5 + (a + 0.5) / kSub - c.x();
            const double sy = y - 0.5 + (b + 0.5) / kSub - c.y();
            if (sx * sx + sy * sy <= r2) ++inside;
          }
        }
        img.at(x, y) -= 0.8 * inside / (kSub * kSub);
      }
    }
  }
  return img;
}

GrayImage plate_shadow_image(const PlatePhantomSpec& plate, const Vec3& source, double pitch, int width, int height,
                             double background, double shadow) {
  plate.validate();
  const double d = plate.standoff, big_h = source.z(), radius = 0.5 * plate.plate_diameter;
  if (!(big_h > d)) fail(ErrorKind::InvalidParams, "source must lie above the plate");
  const double k = (big_h - d) / big_h;
  // Detector point (x, y) in mm from the detector center; the ray from the
  // source crosses the plate plane at S + (P - S) * k.
  auto in_shadow = [&](double x, double y) {
    const double qx = source.x() + (x - source.x()) * k;
    const double qy = source.y() + (y - source.y()) * k;
    return qx * qx + qy * qy <= radius * radius;
  };
  // Detector coordinate of a pixel corner (i, j).
  auto corner_mm = [&](double i, double j) { return Vec2((i - 0.5 * width) * pitch, (j - 0.5 * height) * pitch); };

  std::vector<std::uint8_t> corners(static_cast<std::size_t>(width + 1) * (height + 1));
  for (int j = 0; j <= height; ++j) {
    for (int i = 0; i <= width; ++i) {
      const Vec2 p = corner_mm(i, j);
      corners[static_cast<std::size_t>(j) * (width + 1) + i] = in_shadow(p.x(), p.y()) ? 1 : 0;
    }
  }
  GrayImage img(width, height, background);
  constexpr int kSub = 16;
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int j = static_cast<int>(row);
    for (int i = 0; i < width; ++i) {
      const auto c = [&](int di, int dj) { return corners[static_cast<std::size_t>(j + dj) * (width + 1) + i + di]; };
      const int sum = c(0, 0) + c(1, 0) + c(0, 1) + c(1, 1);
      double frac;
      if (sum == 4) {
        frac = 1.0;
      } else if (sum == 0) {
        frac = 0.0;
      } else {
        int inside = 0;
        for (int b = 0; b < kSub; ++b) {
          for (int a = 0; a < kSub; ++a) {
            const Vec2 p = corner_mm(i + (a + 0.5) / kSub, j + (b + 0.5) / kSub);
            if (in_shadow(p.x(), p.y())) ++inside;
          }
        }
        frac = static_cast<double>(inside) / (kSub * kSub);
      }
      img.at(i, j) = background + (shadow - background) * frac;
    }
  });
  return img;
}

}  // namespace fluororeg

#include "fluororeg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "fluororeg/error.hpp"

namespace fluororeg {

namespace {

constexpr double kPi = 3.14159265358979323846;

Quat normalized_if_needed(const Quat& q) {
  const double n = q.norm();
  if (std::abs(n - 1.0) < 1e-12) return q;
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::InvalidParams, "quaternion has zero or non-finite norm");
  return Quat(q.coeffs() / n);
}

}  // namespace

RigidPose::RigidPose() : q_(Quat::Identity()), t_(Vec3::Zero()) {}

RigidPose::RigidPose(const Quat& rotation, const Vec3& translation)
    : q_(normalized_if_needed(rotation)), t_(translation) {}

RigidPose RigidPose::from_translation(const Vec3& t) { return RigidPose(Quat::Identity(), t); }

RigidPose RigidPose::from_axis_angle(const Vec3& omega, const Vec3& t) { return RigidPose(exp_rotation(omega), t); }

RigidPose RigidPose::from_matrix(const Mat4& m) {
  const Mat3 r = m.topLeftCorner<3, 3>();
  return RigidPose(Quat(r), m.topRightCorner<3, 1>());
}

Mat4 RigidPose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = t_;
  return m;
}

RigidPose compose(const RigidPose& a, const RigidPose& b) {
  Quat q = a.rotation() * b.rotation();
  q.normalize();
  return RigidPose(q, a.rotation() * b.translation() + a.translation());
}

RigidPose invert(const RigidPose& a) {
  const Quat qi = a.rotation().conjugate();
  return RigidPose(qi, -(qi * a.translation()));
}

double geodesic_angle(const RigidPose& a, const RigidPose& b) {
  // Equal to arccos((trace(Ra^T Rb) - 1) / 2) but well conditioned near 0 and 180.
  const Quat rel = a.rotation().conjugate() * b.rotation();
  const double s = rel.vec().norm();
  const double c = std::abs(rel.w());
  return 2.0 * std::atan2(s, c) * 180.0 / kPi;
}

Quat exp_rotation(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    Quat q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    q.normalize();
    return q;
  }
  const Vec3 axis = omega / theta;
  const double h = 0.5 * theta;
  const double s = std::sin(h);
  return Quat(std::cos(h), s * axis.x(), s * axis.y(), s * axis.z());
}

Vec3 log_rotation(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double s = q.vec().norm();
  if (s < 1e-15) return 2.0 * q.vec();
  const double theta = 2.0 * std::atan2(s, q.w());
  return q.vec() * (theta / s);
}

std::string format_pose(const RigidPose& p) {
  const Quat& q = p.rotation();
  const Vec3& t = p.translation();
  const std::array<double, 7> v{q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()};
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i] == 0.0 ? 0.0 : v[i];  // no "-0"
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

RigidPose parse_pose(std::string_view text) {
  std::array<double, 7> v{};
  std::size_t pos = 0;
  int count = 0;
  const std::string s(text);
  while (true) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size() || s[pos] == '\n' || s[pos] == '\r') break;
    if (count == 7) throw ParseError("pose record has more than 7 fields", static_cast<long long>(pos), 1);
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || !std::isfinite(x)) {
      throw ParseError("pose record field " + std::to_string(count + 1) + " is not a finite number",
                       static_cast<long long>(pos), 1);
    }
    v[count++] = x;
    pos += static_cast<std::size_t>(end - begin);
    if (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != '\n' && s[pos] != '\r') {
      throw ParseError("unexpected character in pose record", static_cast<long long>(pos), 1);
    }
  }
  if (count != 7) throw ParseError("pose record needs 7 fields, got " + std::to_string(count), -1, 1);
  const Quat q(v[0], v[1], v[2], v[3]);
  if (!(q.norm() > 0.0)) throw ParseError("pose record has a zero quaternion", -1, 1);
  return RigidPose(q, Vec3(v[4], v[5], v[6]));
}

Vec2 CameraModel::principal_pixel() const {
  const Vec3 n = normal();
  const Vec3 foot = source - ((source - detector_origin).dot(n)) * n;
  const Vec3 d = foot - detector_origin;
  return Vec2(d.dot(detector_u) / pixel_pitch, d.dot(detector_v) / pixel_pitch);
}

CameraModel CameraModel::downscaled(int factor) const {
  if (factor < 1) fail(ErrorKind::InvalidConfig, "downscale factor must be >= 1");
  CameraModel c = *this;
  c.width = width / factor;
  c.height = height / factor;
  c.pixel_pitch = pixel_pitch * factor;
  return c;
}

Vec2 project(const CameraModel& cam, const Vec3& x) {
  const Vec3 n = cam.normal();
  const Vec3 dir = x - cam.source;
  const double denom = dir.dot(n);
  if (std::abs(denom) <= 1e-12 * dir.norm()) {
    fail(ErrorKind::RayParallelToDetector, "projection ray is parallel to the detector plane");
  }
  const double t = (cam.detector_origin - cam.source).dot(n) / denom;
  if (!(t > 0.0)) fail(ErrorKind::BehindSource, "point lies behind the X-ray source");
  const Vec3 hit = cam.source + t * dir;
  const Vec3 d = hit - cam.detector_origin;
  return Vec2(d.dot(cam.detector_u) / cam.pixel_pitch, d.dot(cam.detector_v) / cam.pixel_pitch);
}

DualPlaneRig build_rig(double angle_deg, double sid_a, double sid_b, double detector_mm, int width,
                       int height) {
  if (!(angle_deg > 0.0 && angle_deg < 180.0)) fail(ErrorKind::InvalidGeometry, "inter-plane angle must lie in (0, 180)");
  if (!(sid_a > 0.0 && sid_b > 0.0)) fail(ErrorKind::InvalidGeometry, "source-intensifier distances must be positive");
  if (!(detector_mm > 0.0)) fail(ErrorKind::InvalidGeometry, "detector size must be positive");
  if (width <= 0 || height <= 0) fail(ErrorKind::InvalidGeometry, "image dimensions must be positive");

  const double pitch = detector_mm / width;
  auto make_camera = [&](double sid) {
    CameraModel c;
    c.detector_u = Vec3::UnitX();
    c.detector_v = -Vec3::UnitY();
    c.source = Vec3(0.0, 0.0, sid);
    c.pixel_pitch = pitch;
    c.width = width;
    c.height = height;
    c.sid = sid;
    c.detector_origin = -(0.5 * width * pitch) * c.detector_u - (0.5 * height * pitch) * c.detector_v;
    return c;
  };

  DualPlaneRig rig;
  rig.camera_a = make_camera(sid_a);
  CameraModel b = make_camera(sid_b);
  const Mat3 r = Eigen::AngleAxisd(angle_deg * kPi / 180.0, Vec3::UnitY()).toRotationMatrix();
  b.source = r * b.source;
  b.detector_origin = r * b.detector_origin;
  b.detector_u = r * b.detector_u;
  b.detector_v = r * b.detector_v;
  rig.camera_b = b;
  rig.inter_plane_angle = angle_deg;
  return rig;
}

double principal_ray_angle(const DualPlaneRig& rig) {
  const Vec3 a = rig.camera_a.normal();
  const Vec3 b = rig.camera_b.normal();
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / kPi;
}

double inplane_l1(const RigidPose& estimate, const RigidPose& truth, const DualPlaneRig& rig) {
  const Vec3 dt = estimate.translation() - truth.translation();
  double total = 0.0;
  for (const CameraModel* c : {&rig.camera_a, &rig.camera_b}) {
    total += std::abs(dt.dot(c->detector_u)) + std::abs(dt.dot(c->detector_v));
  }
  return 0.5 * total;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::RayParallelToDetector: return "RayParallelToDetector";
    case ErrorKind::BehindSource: return "BehindSource";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ConstantImage: return "ConstantImage";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyMesh: return "EmptyMesh";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::NotWatertight: return "NotWatertight";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::InsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorKind::InversionDivergence: return "InversionDivergence";
    case ErrorKind::NoShadowFound: return "NoShadowFound";
    case ErrorKind::PartialShadow: return "PartialShadow";
    case ErrorKind::MagnificationTooSmall: return "MagnificationTooSmall";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fluororeg

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <string_view>

namespace fluororeg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

/// Element of SE(3): unit quaternion rotation plus translation in mm.
/// Maps a point from the object frame into the world frame as R*x + t.
class RigidPose {
 public:
  RigidPose();
  /// The quaternion is renormalized unless it is already unit within 1e-12.
  RigidPose(const Quat& rotation, const Vec3& translation);

  static RigidPose identity() { return RigidPose(); }
  static RigidPose from_translation(const Vec3& t);
  /// Rotation given as axis * angle (radians).
  static RigidPose from_axis_angle(const Vec3& omega, const Vec3& t = Vec3::Zero());
  static RigidPose from_matrix(const Mat4& m);

  const Quat& rotation() const { return q_; }
  const Vec3& translation() const { return t_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }
  Mat4 matrix() const;

  Vec3 apply(const Vec3& x) const { return q_ * x + t_; }

 private:
  Quat q_;
  Vec3 t_;
};

/// a∘b: applies b first, then a.
RigidPose compose(const RigidPose& a, const RigidPose& b);
RigidPose invert(const RigidPose& a);
inline Vec3 apply(const RigidPose& p, const Vec3& x) { return p.apply(x); }

/// Shortest-path angle between the two rotations, degrees in [0, 180].
double geodesic_angle(const RigidPose& a, const RigidPose& b);

/// SO(3) exponential of an axis-angle vector (radians).
Quat exp_rotation(const Vec3& omega);
/// Inverse of exp_rotation; the returned angle lies in [0, pi].
Vec3 log_rotation(const Quat& q);

/// Pose text record: `qw qx qy qz tx ty tz`, 15 significant digits.
std::string format_pose(const RigidPose& p);
/// Throws ParseError when the record does not hold exactly 7 finite numbers
/// or the quaternion is zero.
RigidPose parse_pose(std::string_view text);

/// Point X-ray source plus planar intensifier.
///
/// Detector coordinates put the (0,0) pixel *corner* at detector_origin; pixel
/// (i, j) therefore has its center at detector coordinate (i + 0.5, j + 0.5).
/// Image-index coordinates (sampling, blobs, calibration) place pixel centers
/// on integers; convert with `detector_to_index`.
struct CameraModel {
  Vec3 source = Vec3::Zero();
  Vec3 detector_origin = Vec3::Zero();
  Vec3 detector_u = Vec3::UnitX();
  Vec3 detector_v = Vec3::UnitY();
  double pixel_pitch = 1.0;  // mm per pixel
  int width = 0;
  int height = 0;
  double sid = 0.0;  // mm

  /// Unit normal of the detector plane pointing away from the source.
  Vec3 normal() const { return detector_u.cross(detector_v); }
  /// World position of a continuous detector-coordinate pixel.
  Vec3 detector_point(const Vec2& px) const {
    return detector_origin + (px.x() * pixel_pitch) * detector_u + (px.y() * pixel_pitch) * detector_v;
  }
  /// Foot of the perpendicular from the source, in detector coordinates.
  Vec2 principal_pixel() const;
  /// Same camera sampled at 1/factor resolution (pitch scaled, size divided).
  CameraModel downscaled(int factor) const;
};

inline Vec2 detector_to_index(const Vec2& px) { return px - Vec2(0.5, 0.5); }
inline Vec2 index_to_detector(const Vec2& px) { return px + Vec2(0.5, 0.5); }

/// Central projection of a world point onto the detector, detector coordinates.
/// Throws RayParallelToDetector or BehindSource.
Vec2 project(const CameraModel& cam, const Vec3& x);

enum class Plane { A, B };
inline char plane_letter(Plane p) { return p == Plane::A ? 'A' : 'B'; }

struct DualPlaneRig {
  CameraModel camera_a;
  CameraModel camera_b;
  double inter_plane_angle = 0.0;  // degrees

  const CameraModel& camera(Plane p) const { return p == Plane::A ? camera_a : camera_b; }
};

/// Parameters that fully determine a rig built by build_rig.
struct RigSpec {
  double angle_deg = 110.0;
  double sid_a = 1850.0;
  double sid_b = 1855.0;
  double detector_mm = 360.0;
  int width = 1664;
  int height = 1600;

  bool operator==(const RigSpec&) const = default;
};

/// Camera A looks along world -z with its detector centered on the origin and
/// +y as the vertical axis (image rows run along -y). Camera B is the same
/// assembly rotated about +y by angle_deg. Throws InvalidGeometry.
DualPlaneRig build_rig(double angle_deg, double sid_a, double sid_b, double detector_mm, int width,
                       int height);
inline DualPlaneRig build_rig(const RigSpec& s) {
  return build_rig(s.angle_deg, s.sid_a, s.sid_b, s.detector_mm, s.width, s.height);
}

/// Angle in degrees between the principal rays of the two cameras.
double principal_ray_angle(const DualPlaneRig& rig);

/// Mean over both planes of |dt.u| + |dt.v|, with dt the translation error.
double inplane_l1(const RigidPose& estimate, const RigidPose& truth, const DualPlaneRig& rig);

}  // namespace fluororeg

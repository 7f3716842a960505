#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fluororeg/discal.hpp"
#include "fluororeg/geometry.hpp"
#include "fluororeg/image.hpp"
#include "fluororeg/manifest.hpp"
#include "fluororeg/render.hpp"
#include "fluororeg/sical.hpp"

namespace fluororeg {

using Rng = std::mt19937_64;

/// Independent stream for item `index` of a run seeded with `seed`.
Rng derived_rng(std::uint64_t seed, std::uint64_t index);

struct Sinusoid {
  double amplitude = 0.0;  // deg or mm
  double frequency = 1.0;  // cycles per trial
  double phase = 0.0;      // rad
};

/// Degrees of freedom, in order: flexion (about object x), abduction (about
/// object z), axial rotation (about object y) in degrees; tx, ty, tz in mm.
inline constexpr int kDofs = 6;
using DofVector = std::array<double, kDofs>;

struct ActivityTemplate {
  std::string name;
  DofVector mean{};
  std::array<std::vector<Sinusoid>, kDofs> bank;
};

std::vector<std::string> activity_names();
/// level_walk, stair_descent, ramp_descent, chair_sit. Throws InvalidParams.
ActivityTemplate activity_template(std::string_view name);

/// Point on the bisector of the two detector half-spaces at `clearance` mm
/// from both detector planes; the common field of view of the rig.
Vec3 workspace_center(const DualPlaneRig& rig, double clearance = 70.0);

/// Object pose for a DOF vector: the object is yawed so that its long axes
/// are oblique to both beams, then flexed/abducted/rotated, then placed at
/// the workspace center plus (tx, ty, tz).
RigidPose dof_pose(const DofVector& dof, const DualPlaneRig& rig);

/// Frame k of n samples the bank at cycle fraction k / n; each term is
/// a sin(2 pi f tau + phase) - a sin(phase), so frame 0 is the mean pose.
/// The seed jitters the phases of every DOF except flexion.
std::vector<RigidPose> gen_trajectory(const ActivityTemplate& tpl, int n_frames, std::uint64_t seed,
                                      const DualPlaneRig& rig);
std::vector<DofVector> gen_trajectory_dofs(const ActivityTemplate& tpl, int n_frames, std::uint64_t seed);

struct NoiseModel {
  double trans_sigma = 0.0;  // mm per axis
  double rot_sigma = 0.0;    // deg per axis
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adds N(0, trans_sigma) to each translation axis and left-composes the
/// rotation with exp(w), w ~ N(0, rot_sigma) per axis.
RigidPose perturb_pose(const RigidPose& p, const NoiseModel& noise, Rng& rng);

struct NoiseCalibration {
  double percentile = 65.0;
  double target_inplane_l1 = 2.5;  // mm
  double target_geodesic = 1.0;    // deg
  int samples = 10000;
  std::uint64_t seed = 20240607;
};

/// Bisection on each sigma until the requested percentile of inplane_l1
/// (resp. geodesic) error over `samples` draws hits its target.
NoiseModel calibrate_noise(const DualPlaneRig& rig, const NoiseCalibration& cal);

/// Loads {"trans_sigma_mm", "rot_sigma_deg"} from a JSON file. Throws
/// IoError, ParseError.
NoiseModel load_noise_config(const std::string& path);

struct AcquireOptions {
  NoiseModel noise;
  std::optional<DistortionMap> distortion_a;
  std::optional<DistortionMap> distortion_b;
  double pixel_noise_sigma = 0.0;
  RenderConfig render;  // target image renderer
  std::string activity = "custom";
  int first_id = 0;
};

struct AcquiredFrame {
  TrialRecord record;
  GrayImage image_a;
  GrayImage image_b;
};

std::string trial_id_for(int index);

/// Renders each true pose on both planes, applies the optional forward
/// distortion and pixel noise, and draws the noisy target pose.
std::vector<AcquiredFrame> acquire_trial(const MeshAccel& mesh, const std::vector<RigidPose>& poses,
                                         const DualPlaneRig& rig, const AcquireOptions& opt);

/// k renders of default_pose on one plane, each with independent jitter.
std::vector<GrayImage> repeatability_probe(const MeshAccel& mesh, const RigidPose& default_pose,
                                           const DualPlaneRig& rig, Plane plane, int k, const NoiseModel& jitter,
                                           const RenderConfig& cfg);

/// Random cubic distorted->ideal map whose largest displacement over the
/// image is exactly max_disp_px.
DistortionMap random_distortion(Rng& rng, int width, int height, double max_disp_px);

/// Dark antialiased beads (0.2 on 1.0) at the given index-coordinate centers.
GrayImage bead_image(const std::vector<Vec2>& centers, int width, int height, double bead_radius_px);

/// Ray-traced shadow of a circular plate parallel to the detector and
/// centered over the detector center, antialiased by 16x16 subsampling of
/// boundary pixels. `source` holds the lateral offset along detector u, v
/// (mm from the detector center) and the source height H.
GrayImage plate_shadow_image(const PlatePhantomSpec& plate, const Vec3& source, double pitch, int width, int height,
                             double background = 1.0, double shadow = 0.2);

}  // namespace fluororeg

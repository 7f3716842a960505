#pragma once

#include <array>
#include <span>
#include <vector>

#include "fluororeg/error.hpp"
#include "fluororeg/geometry.hpp"
#include "fluororeg/image.hpp"
#include "fluororeg/render.hpp"

namespace fluororeg {

struct RegistrationConfig {
  int steps = 200;
  double lr = 0.25;
  double rot_scale = 0.02;   // rad per unit parameter
  double trans_scale = 1.0;  // mm per unit parameter
  double fd_step = 0.5;      // parameter units, central differences
  RenderConfig render = default_render();

  static RenderConfig default_render() {
    RenderConfig r;
    r.mode = RenderMode::Silhouette;
    r.blur_sigma = 1.0;
    r.supersample = 1;
    r.downscale = 4;
    return r;
  }
  /// Throws InvalidConfig.
  void validate() const;
};

struct TargetPair {
  GrayImage a;
  GrayImage b;
  const GrayImage& operator[](Plane p) const { return p == Plane::A ? a : b; }
};

/// Loss evaluator for one registration: pose = init∘exp(rot_scale p[0..3])
/// with translation init.t + trans_scale p[3..6]; loss = -(NCC_a + NCC_b)/2,
/// or +1 when either render is empty or constant.
class RegistrationProblem {
 public:
  /// Throws DimensionMismatch (target size != render size), ConstantImage
  /// (constant target), InvalidConfig.
  RegistrationProblem(const MeshAccel& mesh, const DualPlaneRig& rig, const TargetPair& targets,
                      const RigidPose& init, const RegistrationConfig& cfg);

  RigidPose pose_from_params(std::span<const double> p) const;
  double loss(std::span<const double> p) const;
  double loss_at(const RigidPose& pose) const;
  /// Per-plane NCC of a pose, NaN for a constant render.
  std::array<double, 2> ncc_at(const RigidPose& pose) const;
  long render_count() const { return renders_; }

 private:
  double plane_ncc(const RigidPose& pose, int plane) const;

  const MeshAccel& mesh_;
  const DualPlaneRig& rig_;
  RigidPose init_;
  RegistrationConfig cfg_;
  TargetPair targets_;
  std::array<NccReference, 2> refs_;
  mutable long renders_ = 0;
};

double registration_loss(std::span<const double> params, const MeshAccel& mesh, const DualPlaneRig& rig,
                         const TargetPair& targets, const RigidPose& init, const RegistrationConfig& cfg);

struct RegistrationResult {
  RigidPose pose;                 // best pose over the trajectory
  std::vector<double> loss_trace; // loss at each ADAM iterate
  double initial_loss = 0.0;
  double best_loss = 0.0;
  std::array<double, 2> ncc{};    // per plane at the returned pose
  bool improved = false;          // best_loss < initial_loss
  double wall_seconds = 0.0;
  long renders = 0;
};

/// Raised when the optimizer aborts; carries the loss trace up to the abort.
class RegistrationError : public Error {
 public:
  RegistrationError(ErrorKind kind, const std::string& what, std::vector<double> trace)
      : Error(kind, what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// ADAM on registration_loss with central finite-difference gradients.
/// Throws RegistrationError (NonFiniteGradient).
RegistrationResult register_pose(const TargetPair& targets, const MeshAccel& mesh, const RigidPose& init,
                                 const DualPlaneRig& rig, const RegistrationConfig& cfg);

struct PoseErrors {
  double inplane_l1 = 0.0;  // mm
  double geodesic = 0.0;    // deg
};

PoseErrors evaluate_errors(const RigidPose& estimate, const RigidPose& truth, const DualPlaneRig& rig);

}  // namespace fluororeg

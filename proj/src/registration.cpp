#include "fluororeg/registration.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "fluororeg/optim.hpp"

namespace fluororeg {

void RegistrationConfig::validate() const {
  if (steps < 1) fail(ErrorKind::InvalidConfig, "steps must be >= 1");
  if (!(lr > 0.0)) fail(ErrorKind::InvalidConfig, "lr must be positive");
  if (!(rot_scale > 0.0 && trans_scale > 0.0)) fail(ErrorKind::InvalidConfig, "parameter scales must be positive");
  if (!(fd_step > 0.0)) fail(ErrorKind::InvalidConfig, "fd_step must be positive");
  render.validate();
}

RegistrationProblem::RegistrationProblem(const MeshAccel& mesh, const DualPlaneRig& rig, const TargetPair& targets,
                                         const RigidPose& init, const RegistrationConfig& cfg)
    : mesh_(mesh), rig_(rig), init_(init), cfg_(cfg), targets_(targets) {
  cfg_.validate();
  for (int k = 0; k < 2; ++k) {
    const Plane plane = k == 0 ? Plane::A : Plane::B;
    const CameraModel cam = rig.camera(plane).downscaled(cfg.render.downscale);
    const GrayImage& t = targets_[plane];
    if (t.width() != cam.width || t.height() != cam.height) {
      fail(ErrorKind::DimensionMismatch, std::string("target ") + plane_letter(plane) + " is " +
                                             std::to_string(t.width()) + "x" + std::to_string(t.height()) +
                                             ", renders are " + std::to_string(cam.width) + "x" +
                                             std::to_string(cam.height));
    }
    refs_[k] = make_ncc_reference(t);
  }
}

RigidPose RegistrationProblem::pose_from_params(std::span<const double> p) const {
  if (p.size() != 6) fail(ErrorKind::DimensionMismatch, "pose parameters must have 6 entries");
  const Quat q = init_.rotation() * exp_rotation(Vec3(p[0], p[1], p[2]) * cfg_.rot_scale);
  const Vec3 t = init_.translation() + Vec3(p[3], p[4], p[5]) * cfg_.trans_scale;
  return RigidPose(q.normalized(), t);
}

double RegistrationProblem::plane_ncc(const RigidPose& pose, int plane) const {
  ++renders_;
  const RenderPatch patch = render_region(mesh_, pose, rig_.camera(plane == 0 ? Plane::A : Plane::B), cfg_.render);
  try {
    return ncc_patch(refs_[plane], patch.image, patch.x0, patch.y0);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConstantImage) return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

std::array<double, 2> RegistrationProblem::ncc_at(const RigidPose& pose) const {
  return {plane_ncc(pose, 0), plane_ncc(pose, 1)};
}

double RegistrationProblem::loss_at(const RigidPose& pose) const {
  const auto n = ncc_at(pose);
  if (std::isnan(n[0]) || std::isnan(n[1])) return 1.0;
  return -0.5 * (n[0] + n[1]);
}

double RegistrationProblem::loss(std::span<const double> p) const { return loss_at(pose_from_params(p)); }

double registration_loss(std::span<const double> params, const MeshAccel& mesh, const DualPlaneRig& rig,
                         const TargetPair& targets, const RigidPose& init, const RegistrationConfig& cfg) {
  return RegistrationProblem(mesh, rig, targets, init, cfg).loss(params);
}

RegistrationResult register_pose(const TargetPair& targets, const MeshAccel& mesh, const RigidPose& init,
                                 const DualPlaneRig& rig, const RegistrationConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const RegistrationProblem prob(mesh, rig, targets, init, cfg);
  const Objective f = [&](std::span<const double> p) { return prob.loss(p); };
  const std::vector<double> h(6, cfg.fd_step);
  std::vector<double> trace;

  OptimConfig oc;
  oc.max_iters = cfg.steps;
  oc.lr = cfg.lr;
  OptimResult res;
  try {
    res = adam_minimize(
        [&](std::span<const double> p, std::span<double> g) {
          const double v = f(p);
          trace.push_back(v);
          const auto grad = finite_diff_grad(f, p, h);
          std::copy(grad.begin(), grad.end(), g.begin());
          return v;
        },
        std::vector<double>(6, 0.0), oc);
  } catch (const Error& e) {
    throw RegistrationError(e.kind(), e.what(), trace);
  }

  RegistrationResult out;
  out.loss_trace = res.trace.values;
  out.initial_loss = out.loss_trace.empty() ? prob.loss(std::vector<double>(6, 0.0)) : out.loss_trace.front();
  out.best_loss = res.trace.best_value;
  out.pose = prob.pose_from_params(res.trace.best_params);
  out.ncc = prob.ncc_at(out.pose);
  out.improved = out.best_loss < out.initial_loss;
  out.renders = prob.render_count();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PoseErrors evaluate_errors(const RigidPose& estimate, const RigidPose& truth, const DualPlaneRig& rig) {
  return {inplane_l1(estimate, truth, rig), geodesic_angle(estimate, truth)};
}

}  // namespace fluororeg

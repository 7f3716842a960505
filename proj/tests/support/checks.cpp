#include "checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>

#include "fluororeg/cli.hpp"
#include "fluororeg/error.hpp"
#include "fluororeg/eval.hpp"
#include "fluororeg/fileio.hpp"
#include "fluororeg/optim.hpp"
#include "fluororeg/registration.hpp"
#include "fluororeg/render.hpp"
#include "fluororeg/sical.hpp"
#include "fluororeg/synthgen.hpp"

namespace fluororeg::checks {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Quat random_quat(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

DofVector random_dofs(Rng& rng, double deg, double mm) {
  std::uniform_real_distribution<double> r(-deg, deg), t(-mm, mm);
  return {r(rng), r(rng), r(rng), t(rng), t(rng), t(rng)};
}

TriMesh transformed(const TriMesh& m, const RigidPose& p) {
  TriMesh out = m;
  for (Vec3& v : out.vertices) v = p.apply(v);
  return out;
}

double max_abs_diff(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.pixels()[i] - b.pixels()[i]));
  return d;
}

std::string slurp(const fs::path& p) { return read_file_text(p); }

}  // namespace

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = fs::temp_directory_path() /
          ("fluororeg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

RigidPose random_pose(std::uint64_t seed, std::uint64_t index, double max_trans) {
  Rng rng = derived_rng(seed, index);
  std::uniform_real_distribution<double> t(-max_trans, max_trans);
  const Quat q = random_quat(rng);
  return RigidPose(q, Vec3(t(rng), t(rng), t(rng)));
}

// ---------------------------------------------------------------------------

CheckResult geodesic_metric_axioms(int triples, std::uint64_t seed) {
  double worst_sym = 0.0, worst_self = 0.0, worst_tri = 0.0, worst_inv = 0.0;
  for (int i = 0; i < triples; ++i) {
    const RigidPose a = random_pose(seed, 3 * i), b = random_pose(seed, 3 * i + 1), c = random_pose(seed, 3 * i + 2);
    const double ab = geodesic_angle(a, b), ba = geodesic_angle(b, a);
    const double bc = geodesic_angle(b, c), ac = geodesic_angle(a, c);
    worst_sym = std::max(worst_sym, std::abs(ab - ba));
    worst_self = std::max(worst_self, geodesic_angle(a, a));
    worst_tri = std::max(worst_tri, ac - (ab + bc));  // positive is a violation
    const RigidPose q = random_pose(seed + 1, i);
    worst_inv = std::max(worst_inv, std::abs(geodesic_angle(compose(q, a), compose(q, b)) - ab));
    worst_inv = std::max(worst_inv, std::abs(geodesic_angle(compose(a, q), compose(b, q)) - ab));
  }
  const bool pass = worst_sym <= 1e-9 && worst_self <= 1e-9 && worst_tri <= 1e-9 && worst_inv <= 1e-9;
  std::ostringstream s;
  s << triples << " triples: |d(a,b)-d(b,a)| " << fmt("%.1e", worst_sym) << ", d(a,a) " << fmt("%.1e", worst_self)
    << ", triangle excess " << fmt("%.1e", worst_tri) << ", invariance " << fmt("%.1e", worst_inv) << " deg";
  return {pass, s.str()};
}

CheckResult geodesic_quaternion_oracle(int pairs, std::uint64_t seed) {
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const RigidPose a = random_pose(seed, 2 * i), b = random_pose(seed, 2 * i + 1);
    const double dot = std::min(1.0, std::abs(a.rotation().dot(b.rotation())));
    const double oracle = 2.0 * std::acos(dot) * 180.0 / kPi;
    worst = std::max(worst, std::abs(geodesic_angle(a, b) - oracle));
  }
  // near-identical and near-antipodal rotations, where acos is badly conditioned
  for (double angle : {1e-7, 1e-3, 179.999, 180.0}) {
    const RigidPose a = random_pose(seed, 999);
    const RigidPose b = compose(a, RigidPose::from_axis_angle(Vec3(0.3, -0.5, 0.8).normalized() * angle * kPi / 180.0));
    worst = std::max(worst, std::abs(geodesic_angle(a, b) - angle));
  }
  return {worst <= 1e-9, std::to_string(pairs) + " pairs + edge angles, worst |diff| " + fmt("%.2e", worst) + " deg"};
}

CheckResult ncc_invariance(int trials, std::uint64_t seed) {
  double worst_affine = 0.0, worst_sym = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = derived_rng(seed, t);
    std::uniform_real_distribution<double> u(0.0, 1.0), alpha(0.05, 20.0), beta(-5.0, 5.0);
    const int w = 16 + t % 23, h = 9 + t % 17;
    GrayImage a(w, h), b(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        a.at(x, y) = u(rng);
        b.at(x, y) = 0.6 * a.at(x, y) + 0.4 * u(rng);
      }
    }
    const double al = alpha(rng), be = beta(rng);
    GrayImage b2 = b;
    for (double& v : b2.pixels()) v = al * v + be;
    const double base = ncc(a, b);
    worst_affine = std::max(worst_affine, std::abs(ncc(a, b2) - base));
    worst_sym = std::max(worst_sym, std::abs(ncc(b, a) - base));
  }
  return {worst_affine <= 1e-9 && worst_sym <= 1e-9,
          std::to_string(trials) + " image pairs: affine " + fmt("%.1e", worst_affine) + ", symmetry " +
              fmt("%.1e", worst_sym)};
}

CheckResult render_parity(int rays, std::uint64_t seed) {
  const MeshAccel sphere(make_sphere(SphereParams{}));
  const MeshAccel box(make_box(BoxParams{}));
  Rng rng = derived_rng(seed, 0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  long odd = 0, hit_rays = 0;
  std::vector<double> hits;
  for (int i = 0; i < rays; ++i) {
    const MeshAccel& m = i % 2 == 0 ? sphere : box;
    const Aabb bb = m.bounds();
    const Vec3 center = 0.5 * (bb.lo + bb.hi);
    const Vec3 half = 0.5 * (bb.hi - bb.lo);
    const Vec3 origin = center + Vec3(n(rng), n(rng), n(rng)).normalized() * 200.0;
    const Vec3 aim = center + Vec3(u(rng) * half.x(), u(rng) * half.y(), u(rng) * half.z());
    const Vec3 dir = (aim - origin).normalized();
    m.all_hits(origin, dir, 0.0, 1e6, hits);
    if (!hits.empty()) ++hit_rays;
    if (hits.size() % 2 != 0) ++odd;
  }
  return {odd == 0, std::to_string(rays) + " rays (" + std::to_string(hit_rays) + " hitting), odd parity " +
                        std::to_string(odd)};
}

CheckResult render_equivariance(int scenes, std::uint64_t seed) {
  const DualPlaneRig rig = build_rig(RigSpec{});
  const TriMesh meshes[2] = {make_phantom(PhantomSpec{}), make_box(BoxParams{})};
  double worst = 0.0;
  for (int s = 0; s < scenes; ++s) {
    Rng rng = derived_rng(seed, s);
    const RigidPose pose = dof_pose(random_dofs(rng, 20.0, 15.0), rig);
    const TriMesh& mesh = meshes[s % 2];
    const MeshAccel posed(mesh), baked(transformed(mesh, pose));
    for (RenderMode mode : {RenderMode::Silhouette, RenderMode::Thickness}) {
      RenderConfig cfg;
      cfg.mode = mode;
      cfg.downscale = 4;
      cfg.blur_sigma = s % 3 == 0 ? 0.0 : 1.0;
      const Plane plane = s % 2 == 0 ? Plane::A : Plane::B;
      const GrayImage a = render(posed, pose, rig.camera(plane), cfg);
      const GrayImage b = render(baked, RigidPose::identity(), rig.camera(plane), cfg);
      worst = std::max(worst, max_abs_diff(a, b));
    }
  }
  return {worst <= 1e-6, std::to_string(scenes) + " scenes x 2 modes, max pixel diff " + fmt("%.2e", worst)};
}

CheckResult bvh_equivalence(int scenes, std::uint64_t seed) {
  const DualPlaneRig rig = build_rig(RigSpec{});
  PhantomSpec specs[4];
  specs[0].kind = PhantomKind::CondylePair;
  specs[1].kind = PhantomKind::TrayWithWings;
  specs[2].kind = PhantomKind::Sphere;
  specs[3].kind = PhantomKind::Box;
  int identical = 0;
  for (int s = 0; s < scenes; ++s) {
    Rng rng = derived_rng(seed, s);
    const TriMesh mesh = make_phantom(specs[s % 4]);
    const MeshAccel bvh(mesh, true), flat(mesh, false);
    const RigidPose pose = dof_pose(random_dofs(rng, 30.0, 20.0), rig);
    RenderConfig cfg;
    cfg.mode = s % 2 == 0 ? RenderMode::Silhouette : RenderMode::Thickness;
    cfg.downscale = 8;
    cfg.supersample = 1 + s % 2;
    cfg.blur_sigma = 0.5 * (s % 3);
    const CameraModel& cam = rig.camera(s % 2 == 0 ? Plane::A : Plane::B);
    if (render(bvh, pose, cam, cfg) == render(flat, pose, cam, cfg)) ++identical;
  }
  return {identical == scenes, std::to_string(identical) + "/" + std::to_string(scenes) + " scenes bit-identical"};
}

CheckResult downscale_consistency(int scenes, std::uint64_t seed) {
  const DualPlaneRig rig = build_rig(RigSpec{});
  const MeshAccel mesh(make_phantom(PhantomSpec{}));
  double worst = 0.0;
  for (int s = 0; s < scenes; ++s) {
    Rng rng = derived_rng(seed, s);
    const RigidPose pose = dof_pose(random_dofs(rng, 15.0, 10.0), rig);
    const CameraModel cam = rig.camera(s % 2 == 0 ? Plane::A : Plane::B).downscaled(2);
    RenderConfig full;
    full.mode = s % 2 == 0 ? RenderMode::Silhouette : RenderMode::Thickness;
    RenderConfig half = full;
    half.downscale = 2;
    half.supersample = 2;
    const GrayImage f = render(mesh, pose, cam, full);
    const GrayImage h = render(mesh, pose, cam, half);
    GrayImage pooled(f.width() / 2, f.height() / 2);
    for (int y = 0; y < pooled.height(); ++y) {
      for (int x = 0; x < pooled.width(); ++x) {
        pooled.at(x, y) =
            0.25 * (f.at(2 * x, 2 * y) + f.at(2 * x + 1, 2 * y) + f.at(2 * x, 2 * y + 1) + f.at(2 * x + 1, 2 * y + 1));
      }
    }
    worst = std::max(worst, max_abs_diff(pooled, h));
  }
  return {worst <= 1e-6, std::to_string(scenes) + " scenes, max |block mean - downscaled| " + fmt("%.2e", worst)};
}

CheckResult fd_step_halving(int poses, std::uint64_t seed, double tolerance) {
  // Thickness render: the silhouette loss is piecewise constant at the
  // subsample level and its near-zero components drown in that noise.
  const DualPlaneRig rig = build_rig(RigSpec{});
  const MeshAccel mesh(make_phantom(PhantomSpec{}));
  RenderConfig target_cfg = RegistrationConfig::default_render();
  target_cfg.mode = RenderMode::Thickness;
  target_cfg.supersample = 2;
  target_cfg.downscale = 2;
  RegistrationConfig rc;
  rc.render = target_cfg;
  rc.render.blur_sigma = 1.0;
  const double h = 0.5;

  const std::vector<std::string> acts = activity_names();
  double worst = 0.0;
  int worst_pose = -1, worst_coord = -1;
  for (int k = 0; k < poses; ++k) {
    const auto traj = gen_trajectory(activity_template(acts[k % acts.size()]), 10, seed, rig);
    const RigidPose truth = traj[(3 * k + 1) % traj.size()];
    const TargetPair targets{render(mesh, truth, rig.camera_a, target_cfg), render(mesh, truth, rig.camera_b, target_cfg)};
    const RegistrationProblem prob(mesh, rig, targets, truth, rc);
    const Objective f = [&](std::span<const double> p) { return prob.loss(p); };

    Rng rng = derived_rng(seed + 1, k);
    std::uniform_real_distribution<double> rot(3.0, 6.0), trans(1.0, 2.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> x(6);
    for (int i = 0; i < 6; ++i) x[i] = (sign(rng) ? 1.0 : -1.0) * (i < 3 ? rot(rng) : trans(rng));

    const auto g1 = finite_diff_grad(f, x, std::vector<double>(6, h));
    const auto g2 = finite_diff_grad(f, x, std::vector<double>(6, h / 2));
    for (int i = 0; i < 6; ++i) {
      const double rel = std::abs(g1[i] - g2[i]) / std::max(std::abs(g1[i]), 1e-300);
      if (rel > worst) {
        worst = rel;
        worst_pose = k;
        worst_coord = i;
      }
    }
  }
  std::ostringstream s;
  s << poses << " poses, worst relative change " << fmt("%.2f%%", 100.0 * worst) << " (pose " << worst_pose
    << ", coord " << worst_coord << ")";
  return {worst <= tolerance, s.str()};
}

CheckResult powell_vs_ls(int warps, std::uint64_t seed) {
  const BeadGridSpec spec;
  const auto ideal = ideal_grid(spec);
  double worst_excess = -std::numeric_limits<double>::infinity();
  double gain = 0.0;
  for (int w = 0; w < warps; ++w) {
    Rng rng = derived_rng(seed, w);
    const DistortionMap warp = random_distortion(rng, 1664, 1600, 5.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    Correspondences corr;
    for (std::size_t i = 0; i < ideal.size(); ++i) {
      Vec2 d = warp.invert(ideal[i]);
      d += Vec2(noise(rng), noise(rng));
      corr.pairs.push_back({static_cast<int>(i), static_cast<int>(i), d, ideal[i], 1.0});
    }
    const DistortionFit fit = fit_distortion(corr, 1664, 1600);
    worst_excess = std::max(worst_excess, fit.rms_px - fit.ls_rms_px);
    gain += fit.ls_rms_px - fit.rms_px;
  }
  return {worst_excess <= 1e-6, std::to_string(warps) + " noisy warps: worst rms(Powell) - rms(LS) " +
                                    fmt("%.2e", worst_excess) + " px, mean gain " + fmt("%.2e", gain / warps) + " px"};
}

CheckResult optimizer_determinism() {
  std::vector<std::string> failures;
  OptimConfig cfg;
  const Objective rosen = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto p1 = powell_minimize(rosen, {-1.2, 1.0}, cfg);
  const auto p2 = powell_minimize(rosen, {-1.2, 1.0}, cfg);
  if (p1.x != p2.x || p1.trace.values != p2.trace.values) failures.push_back("powell");

  const ValueAndGradient quad = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0];
    g[1] = 20.0 * x[1];
    return x[0] * x[0] + 10.0 * x[1] * x[1];
  };
  const auto a1 = adam_minimize(quad, {3.0, -2.0}, cfg);
  const auto a2 = adam_minimize(quad, {3.0, -2.0}, cfg);
  if (a1.x != a2.x || a1.trace.values != a2.trace.values) failures.push_back("adam");

  const DualPlaneRig rig = build_rig(RigSpec{});
  const MeshAccel mesh(make_phantom(PhantomSpec{}));
  const RigidPose truth = dof_pose(DofVector{5.0, -3.0, 8.0, 1.0, 0.0, -2.0}, rig);
  RenderConfig tc = RegistrationConfig::default_render();
  tc.supersample = 2;
  const TargetPair targets{render(mesh, truth, rig.camera_a, tc), render(mesh, truth, rig.camera_b, tc)};
  RegistrationConfig rc;
  rc.steps = 8;
  const RigidPose init = compose(RigidPose::from_translation(Vec3(1.5, -1.0, 0.5)), truth);
  const auto r1 = register_pose(targets, mesh, init, rig, rc);
  const auto r2 = register_pose(targets, mesh, init, rig, rc);
  if (r1.loss_trace != r2.loss_trace || format_pose(r1.pose) != format_pose(r2.pose)) failures.push_back("register");

  std::string detail = "powell, adam, register_pose repeated: ";
  if (failures.empty()) return {true, detail + "bit-identical"};
  for (const auto& f : failures) detail += f + " ";
  return {false, detail + "differ"};
}

CheckResult io_determinism() {
  std::vector<std::string> failures;
  for (const GoldenFile& g : golden_files()) {
    for (const GoldenFile& h : golden_files()) {
      if (g.name == h.name && g.bytes != h.bytes) failures.push_back(g.name);
    }
  }

  TempDir a("synth-a"), b("synth-b");
  std::ostringstream out, err;
  for (const TempDir* d : {&a, &b}) {
    const int code = cli_main({"synth", "--activity", "stair_descent", "--frames", "3", "--seed", "7", "--downscale",
                               "8", "--out-dir", d->path().string()},
                              out, err);
    if (code != 0) failures.push_back("synth exit " + std::to_string(code));
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.path());
    if (!fs::exists(b.path() / rel) || slurp(entry.path()) != slurp(b.path() / rel)) {
      failures.push_back(rel.string());
    }
    ++compared;
  }
  if (compared < 8) failures.push_back("synth wrote only " + std::to_string(compared) + " files");

  std::string detail = "formats + CLI synth twice (" + std::to_string(compared) + " files): ";
  if (failures.empty()) return {true, detail + "byte-identical"};
  for (const auto& f : failures) detail += f + " ";
  return {false, detail};
}

CheckResult manifest_fault_injection() {
  TempDir dir("fault");
  const fs::path path = dir.path() / "manifest.jsonl";
  Manifest m;
  for (int i = 0; i < 20; ++i) {
    TrialRecord r;
    r.trial_id = trial_id_for(i);
    r.activity = "level_walk";
    r.frame = i;
    r.true_pose = random_pose(5, i);
    r.target_pose = random_pose(6, i);
    r.image_a = "images/" + r.trial_id + "_a.pgm";
    r.image_b = "images/" + r.trial_id + "_b.pgm";
    m.records.push_back(r);
  }
  write_manifest(m, path);
  const std::string before = slurp(path);

  int crashes = 0, torn = 0, leftovers = 0;
  Manifest changed = m;
  changed.records[3].auto_pose = random_pose(7, 0);
  struct Crash {};
  // crash after the first half and after the full payload, before the rename
  for (int stage = 0; stage < 2; ++stage) {
    int calls = 0;
    const WriteFaultHook hook = [&](std::size_t) {
      if (slurp(path) != before) ++torn;  // a concurrent reader must still see the old file
      if (calls++ == stage) throw Crash{};
    };
    try {
      write_manifest(changed, path, hook);
    } catch (const Crash&) {
      ++crashes;
    }
    if (slurp(path) != before) ++torn;
    for (const auto& e : fs::directory_iterator(dir.path())) {
      if (e.path().filename() != "manifest.jsonl") ++leftovers;
    }
  }

  // the same through the manual-commit path
  ManifestStore store(path);
  store.set_fault_hook([&](std::size_t) { throw Crash{}; });
  try {
    store.commit_manual(m.records[0].trial_id, random_pose(8, 0), 0.99, 0.98, 0);
  } catch (const Crash&) {
    ++crashes;
  }
  if (slurp(path) != before) ++torn;
  if (store.snapshot()->records[0].manual_pose.has_value()) ++torn;
  store.set_fault_hook({});
  int rev = -1;
  const bool committed = store.commit_manual(m.records[0].trial_id, random_pose(8, 0), 0.99, 0.98, 0, &rev) ==
                         CommitStatus::Ok;
  const bool persisted = read_manifest(path).records[0].manual_revision == 1 && rev == 1;

  const bool pass = crashes == 3 && torn == 0 && leftovers == 0 && committed && persisted;
  std::ostringstream s;
  s << crashes << " injected crashes, " << torn << " torn reads, " << leftovers << " stray temp files, recovery commit "
    << (committed && persisted ? "ok" : "failed");
  return {pass, s.str()};
}

// ---------------------------------------------------------------------------

std::vector<GoldenFile> golden_files() {
  std::vector<GoldenFile> out;

  const RigidPose pose(Quat(0.9238795325112867, 0.1, -0.2, 0.3), Vec3(101.25, -0.000123456789012345, 70.5));
  out.push_back({"pose.txt", format_pose(pose) + "\n"});

  CalibrationRecord cal;
  cal.plane = Plane::B;
  cal.map = DistortionMap::identity(416, 400);
  const double cx[10] = {0.0012, 1.0003, -0.0021, 1.5e-4, -2.25e-4, 3e-5, -7.5e-5, 1.2e-5, 4.4e-6, -9.1e-6};
  const double cy[10] = {-0.0008, 0.0017, 0.9991, -3.3e-5, 6.6e-5, 1.1e-4, 2.2e-6, -5.5e-5, 8.8e-6, 3.3e-5};
  std::copy(cx, cx + 10, cal.map.coeffs_x.begin());
  std::copy(cy, cy + 10, cal.map.coeffs_y.begin());
  cal.rms_px = 0.0712345;
  cal.sical_source_mm = Vec3(1.25, -0.5, 1850.125);
  out.push_back({"calibration_b.txt", format_calibration(cal)});

  const DualPlaneRig rig = build_rig(RigSpec{});
  Manifest m;
  m.header.mesh_path = "mesh.obj";
  m.header.seed = 42;
  m.header.trans_sigma_mm = 1.383398;
  m.header.rot_sigma_deg = 0.554982;
  m.header.calibration_a = "calibration_a.txt";
  m.header.calibration_b = "calibration_b.txt";
  for (int i = 0; i < 4; ++i) {
    TrialRecord r;
    r.trial_id = trial_id_for(i);
    r.activity = i < 2 ? "level_walk" : "chair_sit";
    r.frame = i % 2;
    r.true_pose = dof_pose(DofVector{10.0 * i, -2.0, 3.5 * i, 0.5 * i, 1.0, -0.25 * i}, rig);
    r.target_pose = compose(RigidPose::from_axis_angle(Vec3(0.01 * (i + 1), 0.0, -0.005), Vec3(0.3 * i, -1.1, 2.0)),
                            r.true_pose);
    r.image_a = "images/" + r.trial_id + "_a.pgm";
    r.image_b = "images/" + r.trial_id + "_b.pgm";
    if (i != 2) r.auto_pose = compose(RigidPose::from_translation(Vec3(0.1 * i, 0.05, -0.2)), r.true_pose);
    if (i == 1) {
      r.manual_pose = compose(RigidPose::from_axis_angle(Vec3(0.0, 0.002, 0.0)), r.true_pose);
      r.manual_ncc_a = 0.99321;
      r.manual_ncc_b = 0.98765;
      r.manual_revision = 2;
    }
    m.records.push_back(r);
  }
  out.push_back({"manifest.jsonl", format_manifest(m)});
  out.push_back({"percentiles.csv", percentiles_csv(error_percentiles(m.records, rig))});

  GrayImage img(7, 5);
  for (int i = 0; i < 35; ++i) img.pixels()[i] = static_cast<double>((i * 9973 + 17) % 65536) / 65535.0;
  img.pixels()[0] = 0.0;
  img.pixels()[34] = 1.0;
  const auto pgm = encode_pgm(img);
  out.push_back({"image16.pgm", std::string(pgm.begin(), pgm.end())});
  return out;
}

void write_goldens(const fs::path& dir) {
  fs::create_directories(dir);
  for (const GoldenFile& g : golden_files()) {
    std::ofstream f(dir / g.name, std::ios::binary);
    f << g.bytes;
  }
}

CheckResult goldens_match(const fs::path& dir) {
  std::vector<std::string> bad;
  int ok = 0;
  for (const GoldenFile& g : golden_files()) {
    const fs::path p = dir / g.name;
    std::string disk;
    try {
      disk = slurp(p);
    } catch (const Error&) {
      bad.push_back(g.name + " missing");
      continue;
    }
    if (disk != g.bytes) {
      bad.push_back(g.name + " differs");
      continue;
    }
    // parse what is on disk and write it back
    std::string again;
    if (g.name == "pose.txt") {
      again = format_pose(parse_pose(disk)) + "\n";
    } else if (g.name == "calibration_b.txt") {
      again = format_calibration(parse_calibration(disk, 416, 400));
    } else if (g.name == "manifest.jsonl") {
      again = format_manifest(parse_manifest(disk));
    } else if (g.name == "percentiles.csv") {
      const Manifest m = parse_manifest(slurp(dir / "manifest.jsonl"));
      again = percentiles_csv(error_percentiles(m.records, build_rig(m.header.rig)));
    } else if (g.name == "image16.pgm") {
      const auto bytes = std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(disk.data()), disk.size());
      const auto enc = encode_pgm(decode_pgm(bytes));
      again.assign(enc.begin(), enc.end());
    }
    if (again != disk) {
      bad.push_back(g.name + " round trip");
      continue;
    }
    ++ok;
  }
  std::string detail = std::to_string(ok) + "/" + std::to_string(golden_files().size()) + " formats byte-exact";
  for (const auto& b : bad) detail += "; " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------

DiscalStats discal_round_trip(int warps, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const BeadGridSpec spec;
  const auto ideal = ideal_grid(spec);
  const double spacing_px = spec.spacing / spec.pitch;
  CpdConfig cpd;
  cpd.sigma2_init = spacing_px * spacing_px;
  DiscalStats st;

  auto rms_after_fit = [&](const std::vector<Vec2>& detected) {
    const Correspondences corr = cpd_align(detected, ideal, cpd);
    const DistortionFit fit = fit_distortion(corr, 1664, 1600);
    const auto und = undistort_points(detected, fit.map);
    double s = 0.0;
    for (std::size_t i = 0; i < und.size(); ++i) s += (und[i] - ideal[i]).squaredNorm();
    return std::sqrt(s / static_cast<double>(und.size()));
  };

  for (int w = 0; w < warps; ++w) {
    Rng rng = derived_rng(seed, w);
    const DistortionMap warp = random_distortion(rng, 1664, 1600, 5.0);
    std::vector<Vec2> exact;
    exact.reserve(ideal.size());
    for (const Vec2& q : ideal) exact.push_back(warp.invert(q));
    st.worst_rms_exact = std::max(st.worst_rms_exact, rms_after_fit(exact));

    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<Vec2> noisy = exact;
    for (Vec2& p : noisy) p += Vec2(noise(rng), noise(rng));
    st.worst_rms_noisy = std::max(st.worst_rms_noisy, rms_after_fit(noisy));

    // drop 2% of the beads, shuffle the rest, score against the known identity
    std::vector<int> order(exact.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(order.size() - order.size() * 2 / 100);
    std::vector<Vec2> kept;
    for (int i : order) kept.push_back(exact[i]);
    const Correspondences corr = cpd_align(kept, ideal, cpd);
    int correct = 0;
    for (const Correspondence& c : corr.pairs) {
      if (order[c.detected_index] == c.ideal_index) ++correct;
    }
    st.worst_match_rate = std::min(st.worst_match_rate, static_cast<double>(correct) / static_cast<double>(kept.size()));
  }
  st.seconds = seconds_since(t0);
  return st;
}

SicalStats sical_round_trip(int sources, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const int w = 1664, h = 1600;
  const double pitch = 360.0 / 1664.0;
  const Vec2 principal((w - 1) * 0.5, (h - 1) * 0.5);
  const PlatePhantomSpec plate;
  SicalStats st;
  std::vector<double> h_err, xy_err;
  for (int k = 0; k < sources; ++k) {
    Rng rng = derived_rng(seed, k);
    std::uniform_real_distribution<double> radius(0.0, 20.0), angle(0.0, 2.0 * kPi), height(1700.0, 2000.0);
    const double rr = radius(rng), aa = angle(rng);
    const Vec3 src(rr * std::cos(aa), rr * std::sin(aa), height(rng));
    const GrayImage img = plate_shadow_image(plate, src, pitch, w, h);

    std::vector<Vec2> edge = shadow_edge_points(img);
    const SicalResult clean = solve_source(fit_circle(edge), plate, pitch, principal);
    st.worst_h_noiseless = std::max(st.worst_h_noiseless, std::abs(clean.source.z() - src.z()));
    st.worst_xy_noiseless = std::max(st.worst_xy_noiseless, (clean.source.head<2>() - src.head<2>()).norm());

    std::normal_distribution<double> noise(0.0, 0.2);
    for (Vec2& p : edge) p += Vec2(noise(rng), noise(rng));
    const SicalResult noisy = solve_source(fit_circle(edge), plate, pitch, principal);
    h_err.push_back(std::abs(noisy.source.z() - src.z()));
    xy_err.push_back((noisy.source.head<2>() - src.head<2>()).norm());
  }
  st.median_h_noisy = percentile(h_err, 50.0);
  st.median_xy_noisy = percentile(xy_err, 50.0);
  st.seconds = seconds_since(t0);
  return st;
}

RepeatabilityStats repeatability_gate(std::uint64_t seed) {
  const DualPlaneRig rig = build_rig(RigSpec{});
  const MeshAccel mesh(make_phantom(PhantomSpec{}));
  RenderConfig cfg = RegistrationConfig::default_render();
  cfg.supersample = 2;
  const RigidPose home = dof_pose(DofVector{}, rig);
  RepeatabilityStats st;
  const auto robot = repeatability_report(repeatability_probe(mesh, home, rig, Plane::A, 5, NoiseModel{0.05, 0.0, seed}, cfg));
  const auto large = repeatability_report(repeatability_probe(mesh, home, rig, Plane::A, 5, NoiseModel{5.0, 0.0, seed}, cfg));
  st.min_ncc_robot = robot.min_ncc;
  st.robot_pass = robot.pass;
  st.min_ncc_large = large.min_ncc;
  st.large_pass = large.pass;
  return st;
}

}  // namespace fluororeg::checks

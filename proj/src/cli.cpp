#include "fluororeg/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "fluororeg/dataset.hpp"
#include "fluororeg/discal.hpp"
#include "fluororeg/error.hpp"
#include "fluororeg/eval.hpp"
#include "fluororeg/fileio.hpp"
#include "fluororeg/manifest.hpp"
#include "fluororeg/mesh.hpp"
#include "fluororeg/registration.hpp"
#include "fluororeg/server.hpp"
#include "fluororeg/sical.hpp"
#include "fluororeg/synthgen.hpp"

#ifndef FLUOROREG_DEFAULT_CONFIG_DIR
#define FLUOROREG_DEFAULT_CONFIG_DIR "config"
#endif

namespace fluororeg {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int downscale = 0;  // 0: subcommand default
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--out-dir", c.out_dir, "output directory");
  sub->add_option("--downscale", c.downscale, "image downscale factor")->check(CLI::Range(1, 64));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Plane parse_plane(const std::string& s) {
  if (s == "a" || s == "A") return Plane::A;
  if (s == "b" || s == "B") return Plane::B;
  fail(ErrorKind::InvalidParams, "plane must be a or b, got '" + s + "'");
}

NoiseModel noise_preset(const std::string& preset) {
  if (preset == "none") return {};
  if (preset == "robot") {
    const char* env = std::getenv("FLUOROREG_CONFIG_DIR");
    const fs::path dir = env != nullptr ? fs::path(env) : fs::path(FLUOROREG_DEFAULT_CONFIG_DIR);
    return load_noise_config((dir / "robot_noise.json").string());
  }
  return load_noise_config(preset);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, std::string_view(text));
}

void write_image(const fs::path& path, const GrayImage& img) {
  fs::create_directories(path.parent_path());
  write_pgm(img, path);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string activity = "level_walk";
  int frames = 50;
  std::string noise_preset = "robot";
  double distort = 0.0;  // max displacement px, 0 = none
  double pixel_noise = 0.0;
  std::string phantom = "condyle_pair";
};

int run_synth(const Common& c, const SynthArgs& a, std::ostream& out) {
  const int ds = c.downscale > 0 ? c.downscale : 4;
  const fs::path dir(c.out_dir);
  const RigSpec rig_spec;
  const DualPlaneRig rig = build_rig(rig_spec);
  const CameraModel cam = rig.camera_a.downscaled(ds);

  PhantomSpec ps;
  ps.kind = phantom_kind_from_string(a.phantom);
  const TriMesh mesh = make_phantom(ps);
  write_text(dir / "mesh.obj", to_obj(mesh));
  const MeshAccel accel(mesh);

  AcquireOptions opt;
  opt.noise = noise_preset(a.noise_preset);
  opt.noise.seed = c.seed;
  opt.pixel_noise_sigma = a.pixel_noise;
  opt.activity = a.activity;
  opt.render.mode = RenderMode::Silhouette;
  opt.render.blur_sigma = 1.0;
  opt.render.supersample = 2;
  opt.render.downscale = ds;

  ManifestHeader header;
  header.rig = rig_spec;
  header.mesh_path = "mesh.obj";
  header.seed = c.seed;
  header.downscale = ds;
  header.blur_sigma = opt.render.blur_sigma;
  header.supersample = opt.render.supersample;
  header.trans_sigma_mm = opt.noise.trans_sigma;
  header.rot_sigma_deg = opt.noise.rot_sigma;
  header.pixel_noise_sigma = a.pixel_noise;

  // calibration phantoms, one per plane
  const BeadGridSpec grid = bead_grid_for(cam.width, cam.height, cam.pixel_pitch / ds, ds);
  const std::vector<Vec2> ideal = ideal_grid(grid);
  for (Plane plane : {Plane::A, Plane::B}) {
    const char letter = plane == Plane::A ? 'a' : 'b';
    std::optional<DistortionMap> map;
    if (a.distort > 0.0) {
      Rng rng = derived_rng(c.seed, plane == Plane::A ? 0xd157a : 0xd157b);
      map = random_distortion(rng, cam.width, cam.height, a.distort);
    }
    std::vector<Vec2> beads = ideal;
    if (map) {
      for (Vec2& p : beads) p = map->invert(p);
    }
    const GrayImage bead_img = bead_image(beads, cam.width, cam.height, 1.5);
    write_image(dir / "phantoms" / (std::string("beads_") + letter + ".pgm"), bead_img);
    const double sid = plane == Plane::A ? rig_spec.sid_a : rig_spec.sid_b;
    write_image(dir / "phantoms" / (std::string("plate_") + letter + ".pgm"),
                plate_shadow_image(PlatePhantomSpec{}, Vec3(0.0, 0.0, sid), cam.pixel_pitch, cam.width, cam.height));
    if (map) {
      const BeadCalibration cal = calibrate_bead_image(bead_img, grid);
      CalibrationRecord rec{plane, cal.fit.map, cal.fit.rms_px, std::nullopt};
      const std::string name = std::string("calibration_") + letter + ".txt";
      write_text(dir / name, format_calibration(rec));
      (plane == Plane::A ? header.calibration_a : header.calibration_b) = name;
      (plane == Plane::A ? opt.distortion_a : opt.distortion_b) = *map;
      out << "plane " << letter << ": calibration rms_px " << fmt("%.6f", cal.fit.rms_px) << "\n";
    }
  }

  const auto poses = gen_trajectory(activity_template(a.activity), a.frames, c.seed, rig);
  const auto frames = acquire_trial(accel, poses, rig, opt);
  Manifest m;
  m.header = header;
  for (const AcquiredFrame& f : frames) {
    write_image(dir / f.record.image_a, f.image_a);
    write_image(dir / f.record.image_b, f.image_b);
    m.records.push_back(f.record);
  }
  write_manifest(m, dir / "manifest.jsonl");
  out << "wrote " << m.records.size() << " trials to " << (dir / "manifest.jsonl").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_discal(const Common& c, const std::string& image_path, const std::string& plane_name, std::ostream& out) {
  const Plane plane = parse_plane(plane_name);
  const int ds = c.downscale > 0 ? c.downscale : 4;
  const GrayImage img = read_pgm(image_path);
  const DualPlaneRig rig = build_rig(RigSpec{});
  const BeadGridSpec grid = bead_grid_for(img.width(), img.height(), rig.camera(plane).pixel_pitch, ds);
  const BeadCalibration cal = calibrate_bead_image(img, grid);
  CalibrationRecord rec{plane, cal.fit.map, cal.fit.rms_px, std::nullopt};
  const fs::path path = fs::path(c.out_dir) / (std::string("calibration_") + (plane == Plane::A ? 'a' : 'b') + ".txt");
  write_text(path, format_calibration(rec));
  out << "beads " << cal.blobs.size() << " matched " << cal.corr.pairs.size() << " outliers " << cal.corr.outliers
      << "\n";
  out << "rms_px " << fmt("%.6f", cal.fit.rms_px) << "\n";
  out << "wrote " << path.string() << "\n";
  return 0;
}

int run_sical(const Common& c, const std::string& image_path, const std::string& plane_name,
              const std::string& calibration, std::ostream& out) {
  const Plane plane = parse_plane(plane_name);
  const int ds = c.downscale > 0 ? c.downscale : 4;
  const GrayImage img = read_pgm(image_path);
  const DualPlaneRig rig = build_rig(RigSpec{});
  const double pitch = rig.camera(plane).pixel_pitch * ds;
  const Vec2 principal((img.width() - 1) * 0.5, (img.height() - 1) * 0.5);
  const SicalResult r = solve_source(fit_plate_shadow(img), PlatePhantomSpec{}, pitch, principal);
  std::ostringstream text;
  text << "source_mm " << fmt("%.6f", r.source.x()) << " " << fmt("%.6f", r.source.y()) << " "
       << fmt("%.6f", r.source.z()) << "\n";
  text << "magnification " << fmt("%.9f", r.magnification) << "\n";
  text << "shadow_center_px " << fmt("%.6f", r.fit.center.x()) << " " << fmt("%.6f", r.fit.center.y()) << "\n";
  text << "shadow_radius_px " << fmt("%.6f", r.fit.radius) << "\n";
  text << "fit_rms_px " << fmt("%.6f", r.fit.rms) << "\n";
  text << "ellipse_warning " << (r.fit.ellipse_warning ? "yes" : "no") << "\n";
  const fs::path path = fs::path(c.out_dir) / (std::string("sical_") + (plane == Plane::A ? 'a' : 'b') + ".txt");
  write_text(path, text.str());
  out << text.str();
  if (!calibration.empty()) {
    CalibrationRecord rec = parse_calibration(read_file_text(calibration), img.width(), img.height());
    if (rec.plane != plane) fail(ErrorKind::InvalidParams, "calibration file is for the other plane");
    rec.sical_source_mm = r.source;
    write_text(calibration, format_calibration(rec));
    out << "updated " << calibration << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_register(const Common& c, const std::string& manifest_path, int steps, double lr, std::ostream& out) {
  Manifest m = read_manifest(manifest_path);
  const Dataset ds = open_dataset(m.header, manifest_path);
  if (c.downscale > 0 && c.downscale != m.header.downscale) {
    fail(ErrorKind::InvalidParams, "--downscale must match the manifest's target resolution (" +
                                       std::to_string(m.header.downscale) + ")");
  }
  RegistrationConfig cfg;
  cfg.steps = steps;
  cfg.lr = lr;
  cfg.render.downscale = m.header.downscale;
  cfg.validate();
  for (TrialRecord& r : m.records) {
    const RegistrationResult res = register_pose(load_targets(ds, r), *ds.mesh, r.target_pose, ds.rig, cfg);
    r.auto_pose = parse_pose(format_pose(res.pose));
    const PoseErrors e = evaluate_errors(res.pose, r.true_pose, ds.rig);
    out << r.trial_id << " loss " << fmt("%.6f", res.initial_loss) << " -> " << fmt("%.6f", res.best_loss)
        << "  err " << fmt("%.3f", e.inplane_l1) << " mm " << fmt("%.3f", e.geodesic) << " deg\n";
    write_manifest(m, manifest_path);
  }
  return 0;
}

int run_evaluate(const Common& c, const std::string& manifest_path, std::ostream& out) {
  const Manifest m = read_manifest(manifest_path);
  const Dataset ds = open_dataset(m.header, manifest_path);
  const fs::path dir(c.out_dir);

  const auto tables = error_percentiles(m.records, ds.rig);
  write_text(dir / "percentiles.csv", percentiles_csv(tables));
  const auto mae = mae_summary(m.records, ds.rig);
  write_text(dir / "mae.csv", mae_csv(mae));

  // robot repositioning precision, +-0.05 mm
  RenderConfig cfg = ds.target_render;
  if (c.downscale > 0) cfg.downscale = c.downscale;
  const NoiseModel jitter{0.05, 0.0, c.seed};
  const RigidPose home = dof_pose(DofVector{}, ds.rig);
  const RepeatabilityReport rep = repeatability_report(repeatability_probe(*ds.mesh, home, ds.rig, Plane::A, 5, jitter, cfg));
  write_text(dir / "repeatability.csv", repeatability_csv(rep));

  for (const PercentileTable& t : tables) {
    out << t.series << " " << t.metric << " p80 " << fmt("%.4f", t.values[79]) << "\n";
  }
  for (const MaeSummary& s : mae) {
    out << s.series << " mae " << fmt("%.4f", s.mae_mm) << " mm " << fmt("%.4f", s.mae_deg) << " deg, below 1mm/1deg "
        << fmt("%.3f", s.frac_below_1mm_1deg) << "\n";
  }
  out << "repeatability min ncc " << fmt("%.6f", rep.min_ncc) << (rep.pass ? " pass" : " FAIL") << "\n";
  return 0;
}

int run_serve(const std::string& manifest_path, const std::string& host, int port, std::ostream& out) {
  HttpService svc(manifest_path);
  const int bound = svc.bind(host, port);
  if (bound < 0) fail(ErrorKind::IoError, "cannot bind " + host + ":" + std::to_string(port));
  out << "serving " << manifest_path << " on http://" << host << ":" << bound << "\n" << std::flush;
  return svc.listen() ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-plane fluoroscopy calibration, synthesis and 2D/3D registration", "fluororeg"};
  app.require_subcommand(1, 1);

  Common common;
  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic trial set");
  add_common(s_synth, common);
  s_synth->add_option("--activity", synth.activity)->check(CLI::IsMember(activity_names()));
  s_synth->add_option("--frames", synth.frames)->check(CLI::Range(1, 100000));
  s_synth->add_option("--noise-preset", synth.noise_preset, "robot | none | path to a noise JSON");
  s_synth->add_option("--distort", synth.distort, "max intensifier distortion in px (0 = none)")
      ->check(CLI::Range(0.0, 50.0));
  s_synth->add_option("--pixel-noise", synth.pixel_noise)->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--phantom", synth.phantom)
      ->check(CLI::IsMember({"sphere", "box", "condyle_pair", "tray_with_wings"}));

  std::string grid_image, plate_image, calibration, plane = "a";
  auto* s_discal = app.add_subcommand("discal", "fit intensifier distortion from a bead-grid image");
  add_common(s_discal, common);
  s_discal->add_option("--grid-image", grid_image)->required();
  s_discal->add_option("--plane", plane);

  auto* s_sical = app.add_subcommand("sical", "locate the source from a plate-shadow image");
  add_common(s_sical, common);
  s_sical->add_option("--plate-image", plate_image)->required();
  s_sical->add_option("--plane", plane);
  s_sical->add_option("--calibration", calibration, "calibration file to record the source position in");

  std::string manifest;
  int steps = 200;
  double lr = 0.25;
  auto* s_register = app.add_subcommand("register", "auto-register every trial of a manifest");
  add_common(s_register, common);
  s_register->add_option("--manifest", manifest)->required();
  s_register->add_option("--steps", steps)->check(CLI::Range(1, 100000));
  s_register->add_option("--lr", lr)->check(CLI::PositiveNumber);

  auto* s_evaluate = app.add_subcommand("evaluate", "percentile, MAE and repeatability CSVs");
  add_common(s_evaluate, common);
  s_evaluate->add_option("--manifest", manifest)->required();

  std::string host = "127.0.0.1";
  int port = 8701;
  auto* s_serve = app.add_subcommand("serve", "manual-registration HTTP service");
  add_common(s_serve, common);
  s_serve->add_option("--manifest", manifest)->required();
  s_serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  s_serve->add_option("--host", host);

  std::vector<const char*> argv{"fluororeg"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s_synth) return run_synth(common, synth, out);
    if (*s_discal) return run_discal(common, grid_image, plane, out);
    if (*s_sical) return run_sical(common, plate_image, plane, calibration, out);
    if (*s_register) return run_register(common, manifest, steps, lr, out);
    if (*s_evaluate) return run_evaluate(common, manifest, out);
    if (*s_serve) return run_serve(manifest, host, port, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace fluororeg

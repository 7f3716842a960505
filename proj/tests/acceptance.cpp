// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   fluororeg_acceptance [--only NAME]... [--write-goldens DIR] [--golden-dir DIR]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluororeg/eval.hpp"
#include "fluororeg/registration.hpp"
#include "fluororeg/synthgen.hpp"
#include "support/checks.hpp"

using namespace fluororeg;
using namespace fluororeg::checks;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(bool pass, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
}

bool run_e2e(const std::string& config_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const DualPlaneRig rig = build_rig(110.0, 1850.0, 1855.0, 360.0, 1664, 1600);
  NoiseModel noise = load_noise_config(config_dir + "/robot_noise.json");

  // the stored sigmas must still reproduce the 65th-percentile target
  std::vector<double> l1;
  {
    Rng rng = derived_rng(777, 0);
    const RigidPose home = dof_pose(DofVector{}, rig);
    for (int i = 0; i < 10000; ++i) l1.push_back(inplane_l1(perturb_pose(home, noise, rng), home, rig));
  }
  const double p65 = percentile(l1, 65.0);
  const bool noise_ok = p65 >= 2.3 && p65 <= 2.7;

  const MeshAccel mesh(make_phantom(PhantomSpec{}));
  AcquireOptions opt;
  opt.render = RegistrationConfig::default_render();
  opt.render.supersample = 2;
  RegistrationConfig cfg;
  cfg.steps = 200;
  cfg.lr = 0.25;
  cfg.render.downscale = 4;

  const std::vector<std::string> acts = activity_names();
  const int counts[4] = {13, 13, 12, 12};
  std::vector<TrialRecord> records;
  long renders = 0;
  for (std::size_t a = 0; a < acts.size(); ++a) {
    const auto poses = gen_trajectory(activity_template(acts[a]), counts[a], 2024 + a, rig);
    opt.noise = noise;
    opt.noise.seed = 9000 + a;
    opt.activity = acts[a];
    opt.first_id = static_cast<int>(records.size());
    for (const AcquiredFrame& f : acquire_trial(mesh, poses, rig, opt)) {
      const RegistrationResult res = register_pose({f.image_a, f.image_b}, mesh, f.record.target_pose, rig, cfg);
      TrialRecord r = f.record;
      r.auto_pose = res.pose;
      renders += res.renders;
      records.push_back(r);
    }
  }

  double frac = 0.0, mae_mm = 0.0, mae_deg = 0.0, robot_frac = 0.0;
  for (const MaeSummary& s : mae_summary(records, rig)) {
    if (s.series == "auto-reg") {
      frac = s.frac_below_1mm_1deg;
      mae_mm = s.mae_mm;
      mae_deg = s.mae_deg;
    } else if (s.series == "target-robot") {
      robot_frac = s.frac_below_1mm_1deg;
    }
  }
  double p80_mm = 0.0, p80_deg = 0.0;
  for (const PercentileTable& t : error_percentiles(records, rig)) {
    if (t.series != "auto-reg") continue;
    (t.metric == "inplane_l1" ? p80_mm : p80_deg) = t.values[79];
  }
  const double secs = seconds_since(t0);
  const bool pass = noise_ok && records.size() == 50 && frac >= 0.8 && mae_mm <= 1.0 && mae_deg <= 1.0 && secs <= 900.0;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%zu trials, below 1mm&1deg %.0f%% (robot target %.0f%%), MAE %.3f mm / %.3f deg, p80 %.3f mm / "
                "%.3f deg, robot p65 L1 %.3f mm, %ld renders, %.0f s",
                records.size(), 100.0 * frac, 100.0 * robot_frac, mae_mm, mae_deg, p80_mm, p80_deg, p65, renders, secs);
  report(pass, "e2e_registration", buf);
  return pass;
}

bool run_discal() {
  const DiscalStats st = discal_round_trip();
  const bool pass = st.worst_rms_exact < 0.05 && st.worst_rms_noisy < 0.15 && st.worst_match_rate >= 0.97 &&
                    st.seconds <= 60.0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "20 warps, worst rms exact %.2e px, noisy %.4f px, worst match rate %.2f%%, %.1f s",
                st.worst_rms_exact, st.worst_rms_noisy, 100.0 * st.worst_match_rate, st.seconds);
  report(pass, "discal_round_trip", buf);
  return pass;
}

bool run_sical() {
  const SicalStats st = sical_round_trip();
  const bool pass = st.worst_h_noiseless <= 1.0 && st.worst_xy_noiseless <= 0.2 && st.median_h_noisy <= 5.0 &&
                    st.median_xy_noisy <= 1.0 && st.seconds <= 60.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "50 sources, noiseless worst H %.4f mm / xy %.4f mm, 0.2 px noise median H %.3f mm / xy %.3f mm, %.1f s",
                st.worst_h_noiseless, st.worst_xy_noiseless, st.median_h_noisy, st.median_xy_noisy, st.seconds);
  report(pass, "sical_round_trip", buf);
  return pass;
}

bool run_repeatability() {
  const RepeatabilityStats st = repeatability_gate();
  const bool pass = st.robot_pass && !st.large_pass;
  char buf[256];
  std::snprintf(buf, sizeof buf, "0.05 mm jitter min NCC %.5f (%s), 5 mm jitter min NCC %.5f (%s), gate 0.985",
                st.min_ncc_robot, st.robot_pass ? "pass" : "fail", st.min_ncc_large, st.large_pass ? "pass" : "fail");
  report(pass, "repeatability_gate", buf);
  return pass;
}

bool run_properties() {
  const std::vector<std::pair<const char*, std::function<CheckResult()>>> suites = {
      {"geodesic metric axioms", [] { return geodesic_metric_axioms(); }},
      {"geodesic quaternion oracle", [] { return geodesic_quaternion_oracle(); }},
      {"ncc invariance", [] { return ncc_invariance(); }},
      {"render parity", [] { return render_parity(); }},
      {"render equivariance", [] { return render_equivariance(); }},
      {"bvh equivalence", [] { return bvh_equivalence(); }},
      {"downscale consistency", [] { return downscale_consistency(); }},
      {"fd step halving", [] { return fd_step_halving(); }},
      {"powell vs least squares", [] { return powell_vs_ls(); }},
      {"optimizer determinism", [] { return optimizer_determinism(); }},
      {"io determinism", [] { return io_determinism(); }},
      {"manifest fault injection", [] { return manifest_fault_injection(); }},
  };
  int passed = 0;
  std::vector<std::string> lines;
  for (const auto& [name, fn] : suites) {
    CheckResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    passed += r.pass ? 1 : 0;
    lines.push_back(std::string("    ") + (r.pass ? "ok   " : "FAIL ") + name + ": " + r.detail);
  }
  const bool pass = passed == static_cast<int>(suites.size());
  report(pass, "property_suites", std::to_string(passed) + "/" + std::to_string(suites.size()) + " suites");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return pass;
}

bool run_goldens(const std::string& dir) {
  const CheckResult r = goldens_match(dir);
  report(r.pass, "format_goldens", r.detail);
  return r.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluororeg acceptance criteria"};
  std::vector<std::string> only;
  std::string write_dir;
  std::string golden_dir = FLUOROREG_GOLDEN_DIR;
  std::string config_dir = FLUOROREG_CONFIG_DIR;
  app.add_option("--only", only, "run only these criteria")
      ->check(CLI::IsMember({"e2e", "discal", "sical", "repeatability", "properties", "goldens"}));
  app.add_option("--write-goldens", write_dir, "regenerate the golden files into DIR and exit");
  app.add_option("--golden-dir", golden_dir);
  app.add_option("--config-dir", config_dir);
  CLI11_PARSE(app, argc, argv);

  if (!write_dir.empty()) {
    write_goldens(write_dir);
    std::printf("wrote goldens to %s\n", write_dir.c_str());
    return 0;
  }
  auto wanted = [&](const char* name) { return only.empty() || std::find(only.begin(), only.end(), name) != only.end(); };

  bool all = true;
  auto guard = [&](const char* label, const std::function<bool()>& fn) {
    try {
      all = fn() && all;
    } catch (const std::exception& e) {
      report(false, label, std::string("threw: ") + e.what());
      all = false;
    }
  };
  if (wanted("goldens")) guard("format_goldens", [&] { return run_goldens(golden_dir); });
  if (wanted("repeatability")) guard("repeatability_gate", run_repeatability);
  if (wanted("sical")) guard("sical_round_trip", run_sical);
  if (wanted("discal")) guard("discal_round_trip", run_discal);
  if (wanted("properties")) guard("property_suites", run_properties);
  if (wanted("e2e")) guard("e2e_registration", [&] { return run_e2e(config_dir); });
  return all ? 0 : 1;
}

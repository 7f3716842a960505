#include "fluororeg/manifest.hpp"

#include <set>
#include <sstream>

#include "json.hpp"

#include "fluororeg/error.hpp"

namespace fluororeg {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "fluororeg-manifest";

bool same_pose(const RigidPose& a, const RigidPose& b) { return format_pose(a) == format_pose(b); }

bool same_pose(const std::optional<RigidPose>& a, const std::optional<RigidPose>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_pose(*a, *b);
}

[[noreturn]] void bad_line(const std::string& what, long long line) { throw ParseError(what, -1, line); }

template <class T>
T get_field(const ojson& j, const char* key, long long line) {
  const auto it = j.find(key);
  if (it == j.end()) bad_line(std::string("missing field '") + key + "'", line);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    bad_line(std::string("field '") + key + "' has the wrong type", line);
  }
}

RigidPose get_pose(const ojson& j, const char* key, long long line) {
  const auto text = get_field<std::string>(j, key, line);
  try {
    return parse_pose(text);
  } catch (const ParseError& e) {
    bad_line(std::string("field '") + key + "': " + e.what(), line);
  }
}

ojson header_to_json(const ManifestHeader& h) {
  ojson j;
  j["format"] = kFormat;
  j["version"] = h.version;
  j["rig"] = {{"angle_deg", h.rig.angle_deg}, {"sid_a", h.rig.sid_a},   {"sid_b", h.rig.sid_b},
              {"detector_mm", h.rig.detector_mm}, {"width", h.rig.width}, {"height", h.rig.height}};
  j["mesh"] = h.mesh_path;
  j["seed"] = h.seed;
  j["downscale"] = h.downscale;
  j["target_render"] = {{"blur_sigma", h.blur_sigma}, {"supersample", h.supersample}};
  j["noise"] = {{"trans_sigma_mm", h.trans_sigma_mm}, {"rot_sigma_deg", h.rot_sigma_deg}};
  j["pixel_noise_sigma"] = h.pixel_noise_sigma;
  j["calibration"] = {{"a", h.calibration_a}, {"b", h.calibration_b}};
  return j;
}

ManifestHeader header_from_json(const ojson& j) {
  constexpr long long line = 1;
  if (!j.is_object()) bad_line("header is not a JSON object", line);
  if (get_field<std::string>(j, "format", line) != kFormat) bad_line("not a fluororeg manifest", line);
  ManifestHeader h;
  h.version = get_field<std::string>(j, "version", line);
  const auto rig = get_field<ojson>(j, "rig", line);
  h.rig.angle_deg = get_field<double>(rig, "angle_deg", line);
  h.rig.sid_a = get_field<double>(rig, "sid_a", line);
  h.rig.sid_b = get_field<double>(rig, "sid_b", line);
  h.rig.detector_mm = get_field<double>(rig, "detector_mm", line);
  h.rig.width = get_field<int>(rig, "width", line);
  h.rig.height = get_field<int>(rig, "height", line);
  h.mesh_path = get_field<std::string>(j, "mesh", line);
  h.seed = get_field<std::uint64_t>(j, "seed", line);
  h.downscale = get_field<int>(j, "downscale", line);
  const auto tr = get_field<ojson>(j, "target_render", line);
  h.blur_sigma = get_field<double>(tr, "blur_sigma", line);
  h.supersample = get_field<int>(tr, "supersample", line);
  const auto noise = get_field<ojson>(j, "noise", line);
  h.trans_sigma_mm = get_field<double>(noise, "trans_sigma_mm", line);
  h.rot_sigma_deg = get_field<double>(noise, "rot_sigma_deg", line);
  h.pixel_noise_sigma = get_field<double>(j, "pixel_noise_sigma", line);
  const auto cal = get_field<ojson>(j, "calibration", line);
  h.calibration_a = get_field<std::string>(cal, "a", line);
  h.calibration_b = get_field<std::string>(cal, "b", line);
  return h;
}

ojson parse_json_line(std::string_view line, long long line_no) {
  try {
    return ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    bad_line(std::string("invalid JSON: ") + e.what(), line_no);
  }
}

}  // namespace

bool operator==(const TrialRecord& a, const TrialRecord& b) {
  return a.trial_id == b.trial_id && a.activity == b.activity && a.frame == b.frame &&
         same_pose(a.true_pose, b.true_pose) && same_pose(a.target_pose, b.target_pose) && a.image_a == b.image_a &&
         a.image_b == b.image_b && same_pose(a.auto_pose, b.auto_pose) && same_pose(a.manual_pose, b.manual_pose) &&
         a.manual_ncc_a == b.manual_ncc_a && a.manual_ncc_b == b.manual_ncc_b &&
         a.manual_revision == b.manual_revision;
}

const TrialRecord* Manifest::find(std::string_view trial_id) const {
  for (const auto& r : records) {
    if (r.trial_id == trial_id) return &r;
  }
  return nullptr;
}

TrialRecord* Manifest::find(std::string_view trial_id) {
  return const_cast<TrialRecord*>(static_cast<const Manifest*>(this)->find(trial_id));
}

std::string format_record(const TrialRecord& r) {
  ojson j;
  j["trial_id"] = r.trial_id;
  j["activity"] = r.activity;
  j["frame"] = r.frame;
  j["true_pose"] = format_pose(r.true_pose);
  j["target_pose"] = format_pose(r.target_pose);
  j["image_a"] = r.image_a;
  j["image_b"] = r.image_b;
  if (r.auto_pose) j["auto_pose"] = format_pose(*r.auto_pose);
  if (r.manual_pose) j["manual_pose"] = format_pose(*r.manual_pose);
  if (r.manual_ncc_a) j["manual_ncc_a"] = *r.manual_ncc_a;
  if (r.manual_ncc_b) j["manual_ncc_b"] = *r.manual_ncc_b;
  j["manual_revision"] = r.manual_revision;
  return j.dump();
}

TrialRecord parse_record(std::string_view line, long long line_no) {
  const ojson j = parse_json_line(line, line_no);
  if (!j.is_object()) bad_line("record is not a JSON object", line_no);
  TrialRecord r;
  r.trial_id = get_field<std::string>(j, "trial_id", line_no);
  if (r.trial_id.empty()) bad_line("empty trial_id", line_no);
  r.activity = get_field<std::string>(j, "activity", line_no);
  r.frame = get_field<int>(j, "frame", line_no);
  r.true_pose = get_pose(j, "true_pose", line_no);
  r.target_pose = get_pose(j, "target_pose", line_no);
  r.image_a = get_field<std::string>(j, "image_a", line_no);
  r.image_b = get_field<std::string>(j, "image_b", line_no);
  if (j.contains("auto_pose")) r.auto_pose = get_pose(j, "auto_pose", line_no);
  if (j.contains("manual_pose")) r.manual_pose = get_pose(j, "manual_pose", line_no);
  if (j.contains("manual_ncc_a")) r.manual_ncc_a = get_field<double>(j, "manual_ncc_a", line_no);
  if (j.contains("manual_ncc_b")) r.manual_ncc_b = get_field<double>(j, "manual_ncc_b", line_no);
  r.manual_revision = get_field<int>(j, "manual_revision", line_no);
  return r;
}

std::string format_manifest(const Manifest& m) {
  std::set<std::string_view> ids;
  std::string out = header_to_json(m.header).dump() + "\n";
  for (const auto& r : m.records) {
    if (!ids.insert(r.trial_id).second) fail(ErrorKind::DuplicateId, "duplicate trial id '" + r.trial_id + "'");
    out += format_record(r) + "\n";
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::set<std::string> ids;
  long long line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!have_header) {
      if (line_no != 1) bad_line("the header must be the first line", line_no);
      m.header = header_from_json(parse_json_line(line, line_no));
      have_header = true;
      continue;
    }
    TrialRecord r = parse_record(line, line_no);
    if (!ids.insert(r.trial_id).second) fail(ErrorKind::DuplicateId, "duplicate trial id '" + r.trial_id + "'");
    m.records.push_back(std::move(r));
  }
  if (!have_header) bad_line("manifest has no header line", 1);
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) { return parse_manifest(read_file_text(path)); }

void write_manifest(const Manifest& m, const std::filesystem::path& path, const WriteFaultHook& hook) {
  write_file_atomic(path, std::string_view(format_manifest(m)), hook);
}

ManifestStore::ManifestStore(std::filesystem::path path)
    : path_(std::move(path)), current_(std::make_shared<const Manifest>(read_manifest(path_))) {}

std::shared_ptr<const Manifest> ManifestStore::snapshot() const {
  std::lock_guard<std::mutex> lock(snapshot_mu_);
  return current_;
}

CommitStatus ManifestStore::commit_manual(std::string_view trial_id, const RigidPose& pose, double ncc_a,
                                          double ncc_b, int expected_revision, int* new_revision) {
  std::lock_guard<std::mutex> write_lock(write_mu_);
  const auto base = snapshot();
  const TrialRecord* existing = base->find(trial_id);
  if (existing == nullptr) return CommitStatus::NotFound;
  if (existing->manual_revision != expected_revision) {
    if (new_revision != nullptr) *new_revision = existing->manual_revision;
    return CommitStatus::Conflict;
  }

  auto next = std::make_shared<Manifest>(*base);
  TrialRecord* rec = next->find(trial_id);
  rec->manual_pose = parse_pose(format_pose(pose));
  rec->manual_ncc_a = ncc_a;
  rec->manual_ncc_b = ncc_b;
  rec->manual_revision += 1;
  write_manifest(*next, path_, hook_);
  if (new_revision != nullptr) *new_revision = rec->manual_revision;
  std::lock_guard<std::mutex> lock(snapshot_mu_);
  current_ = std::move(next);
  return CommitStatus::Ok;
}

}  // namespace fluororeg

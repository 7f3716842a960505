#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluororeg/fileio.hpp"
#include "fluororeg/geometry.hpp"

namespace fluororeg {

struct TrialRecord {
  std::string trial_id;
  std::string activity;
  int frame = 0;
  RigidPose true_pose;
  RigidPose target_pose;  // commanded robot pose
  std::string image_a;    // paths relative to the manifest directory
  std::string image_b;
  std::optional<RigidPose> auto_pose;
  std::optional<RigidPose> manual_pose;
  std::optional<double> manual_ncc_a;
  std::optional<double> manual_ncc_b;
  int manual_revision = 0;  // bumped on every accepted manual commit
};

bool operator==(const TrialRecord& a, const TrialRecord& b);

struct ManifestHeader {
  std::string version = "1";
  RigSpec rig;
  std::string mesh_path;
  std::uint64_t seed = 0;
  int downscale = 4;
  double blur_sigma = 1.0;  // px, target renders
  int supersample = 2;      // target renders
  double trans_sigma_mm = 0.0;
  double rot_sigma_deg = 0.0;
  double pixel_noise_sigma = 0.0;
  std::string calibration_a;  // empty when images are undistorted
  std::string calibration_b;

  bool operator==(const ManifestHeader&) const = default;
};

struct Manifest {
  ManifestHeader header;
  std::vector<TrialRecord> records;

  const TrialRecord* find(std::string_view trial_id) const;
  TrialRecord* find(std::string_view trial_id);
};

/// Header line, then one JSON object per record, each line terminated by \n.
/// Throws DuplicateId.
std::string format_manifest(const Manifest& m);
/// Throws ParseError (1-based line number) or DuplicateId.
Manifest parse_manifest(std::string_view text);

std::string format_record(const TrialRecord& r);
/// Throws ParseError with the supplied line number.
TrialRecord parse_record(std::string_view line, long long line_no = 1);

/// Throws IoError for unreadable files.
Manifest read_manifest(const std::filesystem::path& path);
/// Atomic replace through write_file_atomic.
void write_manifest(const Manifest& m, const std::filesystem::path& path, const WriteFaultHook& hook = {});

enum class CommitStatus { Ok, NotFound, Conflict };

/// Serialized manual-pose commits over an on-disk manifest. Readers get an
/// immutable snapshot and never block on the writer.
class ManifestStore {
 public:
  explicit ManifestStore(std::filesystem::path path);

  std::shared_ptr<const Manifest> snapshot() const;
  const std::filesystem::path& path() const { return path_; }

  /// Accepts the pose only when `expected_revision` equals the record's
  /// manual_revision; a second commit based on a stale revision is a
  /// Conflict and leaves the stored pose untouched. `new_revision` receives
  /// the stored revision either way.
  CommitStatus commit_manual(std::string_view trial_id, const RigidPose& pose, double ncc_a, double ncc_b,
                             int expected_revision, int* new_revision = nullptr);

  void set_fault_hook(WriteFaultHook hook) { hook_ = std::move(hook); }

 private:
  std::filesystem::path path_;
  mutable std::mutex snapshot_mu_;
  std::mutex write_mu_;
  std::shared_ptr<const Manifest> current_;
  WriteFaultHook hook_;
};

}  // namespace fluororeg

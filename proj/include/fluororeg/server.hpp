#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace fluororeg {

class ManifestStore;

/// HTTP service for manual registration over one manifest.
///
///   GET  /api/trials                 [{trial_id, activity, has_manual}]
///   GET  /api/image/{trial}/{a|b}    PNG preview of the stored image
///   POST /api/render                 {trial, plane, pose[7], downscale?} -> PNG silhouette
///   GET  /api/pose/{trial}           {target, auto?, manual?, manual_revision}
///   POST /api/pose/{trial}/manual    {pose[7], ncc_a, ncc_b, revision?} -> {revision}
///   POST /api/ncc                    {trial, plane, pose[7]} -> {ncc}
///
/// A manual commit must name the revision it was based on (default 0); a
/// stale revision gets 409 and the stored pose is kept.
class HttpService {
 public:
  /// Loads the manifest and everything it references. Throws Error.
  explicit HttpService(const std::filesystem::path& manifest_path);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound
  /// port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  bool listen();
  void stop();

  ManifestStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fluororeg

#include "fluororeg/dataset.hpp"

#include "fluororeg/error.hpp"
#include "fluororeg/fileio.hpp"
#include "fluororeg/mesh.hpp"

namespace fluororeg {

Dataset open_dataset(const ManifestHeader& header, const std::filesystem::path& manifest_path) {
  Dataset ds;
  ds.dir = manifest_path.parent_path();
  ds.rig = build_rig(header.rig);
  if (header.mesh_path.empty()) fail(ErrorKind::IoError, "manifest has no mesh path");
  ds.mesh = std::make_shared<const MeshAccel>(load_mesh_file(ds.dir / header.mesh_path));

  ds.target_render.mode = RenderMode::Silhouette;
  ds.target_render.downscale = header.downscale;
  ds.target_render.blur_sigma = header.blur_sigma;
  ds.target_render.supersample = header.supersample;
  ds.target_render.validate();

  const CameraModel cam = ds.rig.camera_a.downscaled(header.downscale);
  auto load_cal = [&](const std::string& rel) -> std::optional<DistortionMap> {
    if (rel.empty()) return std::nullopt;
    return parse_calibration(read_file_text(ds.dir / rel), cam.width, cam.height).map;
  };
  ds.distortion_a = load_cal(header.calibration_a);
  ds.distortion_b = load_cal(header.calibration_b);
  return ds;
}

GrayImage load_stored_image(const Dataset& ds, const TrialRecord& rec, Plane plane) {
  return read_pgm(ds.dir / (plane == Plane::A ? rec.image_a : rec.image_b));
}

TargetPair load_targets(const Dataset& ds, const TrialRecord& rec) {
  TargetPair t{load_stored_image(ds, rec, Plane::A), load_stored_image(ds, rec, Plane::B)};
  if (ds.distortion_a) t.a = undistort_image(t.a, *ds.distortion_a);
  if (ds.distortion_b) t.b = undistort_image(t.b, *ds.distortion_b);
  return t;
}

}  // namespace fluororeg

#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "fluororeg/discal.hpp"
#include "fluororeg/geometry.hpp"
#include "fluororeg/image.hpp"
#include "fluororeg/manifest.hpp"
#include "fluororeg/registration.hpp"
#include "fluororeg/render.hpp"

namespace fluororeg {

/// Everything a manifest points at, loaded once: rig, mesh, calibrations.
struct Dataset {
  std::filesystem::path dir;  // manifest directory; record paths are relative to it
  DualPlaneRig rig;
  std::shared_ptr<const MeshAccel> mesh;
  std::optional<DistortionMap> distortion_a;  // distorted -> ideal, at target resolution
  std::optional<DistortionMap> distortion_b;
  RenderConfig target_render;  // how the stored targets were rendered

  const std::optional<DistortionMap>& distortion(Plane p) const {
    return p == Plane::A ? distortion_a : distortion_b;
  }
};

/// Throws IoError, ParseError, EmptyMesh.
Dataset open_dataset(const ManifestHeader& header, const std::filesystem::path& manifest_path);

/// Stored image as written by synth.
GrayImage load_stored_image(const Dataset& ds, const TrialRecord& rec, Plane plane);
/// Stored images with the plane's calibration removed, ready for NCC against
/// undistorted renders.
TargetPair load_targets(const Dataset& ds, const TrialRecord& rec);

}  // namespace fluororeg

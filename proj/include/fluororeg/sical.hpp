#pragma once

#include <vector>

#include "fluororeg/geometry.hpp"
#include "fluororeg/image.hpp"

namespace fluororeg {

struct PlatePhantomSpec {
  double plate_diameter = 200.0;  // mm
  double standoff = 500.0;        // plate-to-intensifier, mm

  /// Throws InvalidParams.
  void validate() const;
};

struct ShadowConfig {
  double edge_threshold = 0.6;  // between shadow (dark) and background
  int min_area_px = 100;
};

struct ShadowFit {
  Vec2 center = Vec2::Zero();  // image-index px
  double radius = 0.0;         // px
  double rms = 0.0;            // px, geometric residual
  double axis_ratio = 1.0;     // major/minor spread of the edge points
  bool ellipse_warning = false;  // axis ratio off by more than 0.5%
  std::size_t edge_points = 0;
};

/// Kåsa algebraic fit refined by Gauss-Newton on the geometric distance.
/// Throws DegenerateConfiguration for fewer than 3 points or collinear input.
ShadowFit fit_circle(const std::vector<Vec2>& pts);

/// Subpixel threshold crossings along the boundary of the largest dark
/// component. Throws NoShadowFound, PartialShadow.
std::vector<Vec2> shadow_edge_points(const GrayImage& img, const ShadowConfig& cfg = {});

/// shadow_edge_points followed by fit_circle.
ShadowFit fit_plate_shadow(const GrayImage& img, const ShadowConfig& cfg = {});

struct SicalResult {
  /// Lateral source offset along detector u and v (mm, relative to the
  /// principal point) and source height above the detector (mm).
  Vec3 source = Vec3::Zero();
  double magnification = 0.0;
  ShadowFit fit;
};

/// Closed-form source position from the plate shadow. `principal` is in
/// image-index px. Throws MagnificationTooSmall.
SicalResult solve_source(const ShadowFit& fit, const PlatePhantomSpec& spec, double pitch, const Vec2& principal);

}  // namespace fluororeg

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluororeg/geometry.hpp"
#include "fluororeg/image.hpp"
#include "fluororeg/optim.hpp"

namespace fluororeg {

struct BeadGridSpec {
  int rows = 45;
  int cols = 45;
  double spacing = 7.0;                 // mm
  Vec2 center = Vec2(831.5, 799.5);     // image-index px
  double pitch = 360.0 / 1664.0;        // mm/px

  /// Throws InvalidParams.
  void validate() const;
};

/// Row-major bead centers, spacing / pitch px apart, centered on spec.center.
std::vector<Vec2> ideal_grid(const BeadGridSpec& spec);

/// Third-order bivariate polynomial over normalized image-index coordinates
/// xn = (x - (w-1)/2) / (w/2), likewise for y. Basis order:
/// 1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3. Maps distorted -> ideal.
struct DistortionMap {
  static constexpr int kTerms = 10;
  std::array<double, kTerms> coeffs_x{};
  std::array<double, kTerms> coeffs_y{};
  int width = 0;
  int height = 0;

  static DistortionMap identity(int width, int height);

  Vec2 normalize(const Vec2& px) const;
  Vec2 denormalize(const Vec2& n) const;
  /// Distorted -> ideal, pixel in and out. Extrapolates outside the image.
  Vec2 apply(const Vec2& px) const;
  /// Jacobian of apply() in pixel units.
  Eigen::Matrix2d jacobian(const Vec2& px) const;
  /// Ideal -> distorted by Newton iteration. Throws InversionDivergence.
  Vec2 invert(const Vec2& ideal) const;
};

std::array<double, DistortionMap::kTerms> poly3_basis(double x, double y);

struct CpdConfig {
  double w_outlier = 1e-5;
  int max_em_iters = 200;
  double tol = 1e-9;  // relative change of the EM objective
  // Starting variance in px^2; 0 takes the mean pairwise squared distance.
  // A grid that already sits within a fraction of its spacing of the
  // detections converges in far fewer iterations from spacing^2.
  double sigma2_init = 0.0;
};

struct Correspondence {
  int detected_index = -1;
  int ideal_index = -1;
  Vec2 detected;
  Vec2 ideal;
  double responsibility = 0.0;
};

struct Correspondences {
  std::vector<Correspondence> pairs;
  int outliers = 0;          // ideal points left unmatched
  double mean_residual = 0;  // px, |T(ideal) - detected| over pairs
  // Similarity transform ideal -> detected found by the EM.
  Eigen::Matrix2d rotation = Eigen::Matrix2d::Identity();
  double scale = 1.0;
  Vec2 translation = Vec2::Zero();
  double sigma2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Rigid coherent point drift (with scale) aligning the ideal grid onto the
/// detections, then greedy unique assignment by responsibility.
/// Throws DegenerateConfiguration.
Correspondences cpd_align(const std::vector<Vec2>& detected, const std::vector<Vec2>& ideal, const CpdConfig& cfg = {});

struct DistortionFit {
  DistortionMap map;
  double rms_px = 0.0;
  double ls_rms_px = 0.0;  // linear least-squares start
  OptimTrace trace;
};

/// Least squares, then Powell on the mean squared pixel error.
/// Throws InsufficientCorrespondences.
DistortionFit fit_distortion(const Correspondences& corr, int width, int height, const OptimConfig& powell = {});

/// Grid spec for images at 1/downscale of the full detector resolution,
/// centered on the image.
BeadGridSpec bead_grid_for(int width, int height, double full_pitch, int downscale);

struct BeadCalibration {
  std::vector<Blob> blobs;
  Correspondences corr;
  DistortionFit fit;
};

/// Dark-bead detection, CPD against the ideal grid, polynomial fit.
/// Throws DegenerateConfiguration, InsufficientCorrespondences.
BeadCalibration calibrate_bead_image(const GrayImage& img, const BeadGridSpec& spec);

/// Mean squared pixel error of `map` over the pairs (the Powell objective).
double distortion_objective(const DistortionMap& map, const Correspondences& corr);

std::vector<Vec2> undistort_points(const std::vector<Vec2>& pts, const DistortionMap& map);

/// Output pixel q takes the input at the distorted location p solving
/// map(p) = q (10 fixed-point steps), bilinear; outside -> 0.
/// Throws InversionDivergence when |p - q| exceeds 50 px.
GrayImage undistort_image(const GrayImage& img, const DistortionMap& map);

/// Forward model of the intensifier: output pixel p takes the ideal image at
/// map(p). Inverse of undistort_image up to resampling.
GrayImage distort_image(const GrayImage& ideal, const DistortionMap& map);

/// One calibration file per plane.
struct CalibrationRecord {
  Plane plane = Plane::A;
  DistortionMap map;
  double rms_px = 0.0;
  std::optional<Vec3> sical_source_mm;
};

std::string format_calibration(const CalibrationRecord& rec);
/// The map's image size is not stored in the file and must be supplied.
/// Throws ParseError with the line number.
CalibrationRecord parse_calibration(std::string_view text, int width, int height);

}  // namespace fluororeg

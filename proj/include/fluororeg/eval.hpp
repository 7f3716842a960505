#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fluororeg/image.hpp"
#include "fluororeg/manifest.hpp"
#include "fluororeg/registration.hpp"

namespace fluororeg {

/// Linear interpolation between order statistics at rank p/100 * (n-1).
/// Throws InvalidParams for an empty sample or p outside [0, 100].
double percentile(std::vector<double> values, double p);

enum class Series { TargetRobot, AutoReg, Manual };
const char* series_name(Series s);

/// The estimate a record holds for a series, if any.
std::optional<RigidPose> series_pose(const TrialRecord& r, Series s);

struct PercentileTable {
  std::string series;  // target-robot | auto-reg | manual
  std::string metric;  // inplane_l1 | geodesic
  std::vector<double> values;  // values[k] is percentile k + 1

  bool non_decreasing() const;
};

/// One table per (series, metric) for every series present in at least one
/// record, errors measured against the true pose.
std::vector<PercentileTable> error_percentiles(const std::vector<TrialRecord>& records, const DualPlaneRig& rig);

/// CSV `series,metric,percentile,value`, values printed with %.9f.
std::string percentiles_csv(const std::vector<PercentileTable>& tables);

struct MaeSummary {
  std::string series;
  double mae_mm = 0.0;
  double mae_deg = 0.0;
  std::size_t count = 0;
  double frac_below_1mm_1deg = 0.0;  // share with both errors below 1
};

std::vector<MaeSummary> mae_summary(const std::vector<TrialRecord>& records, const DualPlaneRig& rig);
std::string mae_csv(const std::vector<MaeSummary>& rows);

struct RepeatabilityReport {
  Eigen::MatrixXd ncc;  // symmetric, unit diagonal
  double min_ncc = 1.0;
  bool pass = false;
  double gate = 0.985;
};

/// Pairwise NCC of >= 2 equal-size images. Throws InvalidParams,
/// DimensionMismatch, ConstantImage.
RepeatabilityReport repeatability_report(const std::vector<GrayImage>& images, double gate = 0.985);
std::string repeatability_csv(const RepeatabilityReport& report);

}  // namespace fluororeg

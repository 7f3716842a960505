#include "fluororeg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fluororeg/error.hpp"

namespace fluororeg {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) fail(ErrorKind::InvalidParams, "percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) fail(ErrorKind::InvalidParams, "percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

const char* series_name(Series s) {
  switch (s) {
    case Series::TargetRobot: return "target-robot";
    case Series::AutoReg: return "auto-reg";
    case Series::Manual: return "manual";
  }
  return "unknown";
}

std::optional<RigidPose> series_pose(const TrialRecord& r, Series s) {
  switch (s) {
    case Series::TargetRobot: return r.target_pose;
    case Series::AutoReg: return r.auto_pose;
    case Series::Manual: return r.manual_pose;
  }
  return std::nullopt;
}

bool PercentileTable::non_decreasing() const { return std::is_sorted(values.begin(), values.end()); }

namespace {

struct SeriesErrors {
  Series series;
  std::vector<double> l1, geo;
};

std::vector<SeriesErrors> collect(const std::vector<TrialRecord>& records, const DualPlaneRig& rig) {
  std::vector<SeriesErrors> out;
  for (Series s : {Series::TargetRobot, Series::AutoReg, Series::Manual}) {
    SeriesErrors e{s, {}, {}};
    for (const auto& r : records) {
      if (const auto est = series_pose(r, s)) {
        const PoseErrors pe = evaluate_errors(*est, r.true_pose, rig);
        e.l1.push_back(pe.inplane_l1);
        e.geo.push_back(pe.geodesic);
      }
    }
    if (!e.l1.empty()) out.push_back(std::move(e));
  }
  return out;
}

PercentileTable make_table(Series s, const char* metric, const std::vector<double>& v) {
  PercentileTable t{series_name(s), metric, {}};
  t.values.reserve(100);
  for (int p = 1; p <= 100; ++p) t.values.push_back(percentile(v, p));
  return t;
}

}  // namespace

std::vector<PercentileTable> error_percentiles(const std::vector<TrialRecord>& records, const DualPlaneRig& rig) {
  std::vector<PercentileTable> tables;
  for (const auto& e : collect(records, rig)) {
    tables.push_back(make_table(e.series, "inplane_l1", e.l1));
    tables.push_back(make_table(e.series, "geodesic", e.geo));
  }
  return tables;
}

std::string percentiles_csv(const std::vector<PercentileTable>& tables) {
  std::string out = "series,metric,percentile,value\n";
  char buf[160];
  for (const auto& t : tables) {
    for (std::size_t k = 0; k < t.values.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.9f\n", t.series.c_str(), t.metric.c_str(), k + 1, t.values[k]);
      out += buf;
    }
  }
  return out;
}

std::vector<MaeSummary> mae_summary(const std::vector<TrialRecord>& records, const DualPlaneRig& rig) {
  std::vector<MaeSummary> rows;
  for (const auto& e : collect(records, rig)) {
    MaeSummary m;
    m.series = series_name(e.series);
    m.count = e.l1.size();
    std::size_t good = 0;
    for (std::size_t i = 0; i < e.l1.size(); ++i) {
      m.mae_mm += std::abs(e.l1[i]);
      m.mae_deg += std::abs(e.geo[i]);
      if (e.l1[i] < 1.0 && e.geo[i] < 1.0) ++good;
    }
    m.mae_mm /= static_cast<double>(m.count);
    m.mae_deg /= static_cast<double>(m.count);
    m.frac_below_1mm_1deg = static_cast<double>(good) / static_cast<double>(m.count);
    rows.push_back(m);
  }
  return rows;
}

std::string mae_csv(const std::vector<MaeSummary>& rows) {
  std::string out = "series,mae_mm,mae_deg,count,frac_below_1mm_1deg\n";
  char buf[200];
  for (const auto& m : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.9f,%.9f,%zu,%.9f\n", m.series.c_str(), m.mae_mm, m.mae_deg, m.count,
                  m.frac_below_1mm_1deg);
    out += buf;
  }
  return out;
}

RepeatabilityReport repeatability_report(const std::vector<GrayImage>& images, double gate) {
  if (images.size() < 2) fail(ErrorKind::InvalidParams, "repeatability needs at least 2 images");
  const auto n = static_cast<Eigen::Index>(images.size());
  RepeatabilityReport rep;
  rep.gate = gate;
  rep.ncc = Eigen::MatrixXd::Identity(n, n);
  rep.min_ncc = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = ncc(images[static_cast<std::size_t>(i)], images[static_cast<std::size_t>(j)]);
      rep.ncc(i, j) = rep.ncc(j, i) = v;
      rep.min_ncc = std::min(rep.min_ncc, v);
    }
  }
  rep.pass = rep.min_ncc >= gate;
  return rep;
}

std::string repeatability_csv(const RepeatabilityReport& report) {
  std::string out = "i,j,ncc\n";
  char buf[96];
  for (Eigen::Index i = 0; i < report.ncc.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < report.ncc.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%ld,%ld,%.9f\n", static_cast<long>(i), static_cast<long>(j), report.ncc(i, j));
      out += buf;
    }
  }
  std::snprintf(buf, sizeof(buf), "min,,%.9f\npass,,%d\n", report.min_ncc, report.pass ? 1 : 0);
  out += buf;
  return out;
}

}  // namespace fluororeg

#include <doctest.h>

#include <cmath>
#include <random>

#include "fluororeg/error.hpp"
#include "fluororeg/sical.hpp"
#include "fluororeg/synthgen.hpp"
#include "support/checks.hpp"

using namespace fluororeg;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPitch = 360.0 / 1664.0;

// 0.2 inside a disc on a 1.0 background, boundary pixels 8x8 supersampled.
GrayImage disc_image(int w, int h, const Vec2& c, double r) {
  GrayImage img(w, h, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = (Vec2(x, y) - c).norm();
      if (d < r - 1.0) {
        img.at(x, y) = 0.2;
      } else if (d < r + 1.0) {
        int in = 0;
        for (int sy = 0; sy < 8; ++sy)
          for (int sx = 0; sx < 8; ++sx) in += (Vec2(x - 0.4375 + sx / 8.0, y - 0.4375 + sy / 8.0) - c).norm() < r;
        img.at(x, y) = 1.0 - 0.8 * in / 64.0;
      }
    }
  }
  return img;
}

}  // namespace

TEST_CASE("circle fit on exact points") {
  std::vector<Vec2> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(Vec2(12, -7) + 30.0 * Vec2(std::cos(i * kPi / 20), std::sin(i * kPi / 20)));
  const ShadowFit f = fit_circle(pts);
  CHECK((f.center - Vec2(12, -7)).norm() < 1e-9);
  CHECK(std::abs(f.radius - 30.0) < 1e-9);
  CHECK(f.rms < 1e-9);
  CHECK_FALSE(f.ellipse_warning);

  // an arc only still works
  std::vector<Vec2> arc(pts.begin(), pts.begin() + 6);
  CHECK(std::abs(fit_circle(arc).radius - 30.0) < 1e-6);

  CHECK_THROWS_WITH_AS(fit_circle({Vec2(0, 0), Vec2(1, 0)}), doctest::Contains("DegenerateConfiguration"), Error);
  CHECK_THROWS_AS(fit_circle({Vec2(0, 0), Vec2(1, 1), Vec2(2, 2), Vec2(3, 3)}), Error);
}

TEST_CASE("circle fit flags ellipses") {
  std::vector<Vec2> pts;
  for (int i = 0; i < 360; ++i) pts.push_back(Vec2(50 * std::cos(i * kPi / 180), 47 * std::sin(i * kPi / 180)));
  CHECK(fit_circle(pts).ellipse_warning);
}

TEST_CASE("centered disc") {
  const Vec2 c(831.5, 799.5);
  const GrayImage img = disc_image(1664, 1600, c, 600.0);
  const ShadowFit f = fit_plate_shadow(img);
  CHECK(std::abs(f.radius - 600.0) < 0.1);
  CHECK((f.center - c).norm() < 0.1);
  CHECK(f.edge_points > 1000);
  CHECK_FALSE(f.ellipse_warning);
}

TEST_CASE("shadow errors") {
  CHECK_THROWS_WITH_AS(fit_plate_shadow(GrayImage(200, 150, 1.0)), doctest::Contains("NoShadowFound"), Error);
  const GrayImage clipped = disc_image(200, 150, Vec2(10, 75), 40.0);
  CHECK_THROWS_WITH_AS(fit_plate_shadow(clipped), doctest::Contains("PartialShadow"), Error);
  ShadowConfig cfg;
  cfg.min_area_px = 100000;
  CHECK_THROWS_AS(fit_plate_shadow(disc_image(200, 150, Vec2(100, 75), 40.0), cfg), Error);
}

TEST_CASE("solve_source examples") {
  PlatePhantomSpec spec;  // 200 mm plate, 500 mm standoff
  const Vec2 principal(831.5, 799.5);
  ShadowFit fit;
  fit.center = principal;
  fit.radius = 100.0 * 1850.0 / 1350.0 / kPitch;
  SicalResult r = solve_source(fit, spec, kPitch, principal);
  CHECK(std::abs(r.source.z() - 1850.0) < 1e-9);
  CHECK(r.source.head<2>().norm() < 1e-12);
  CHECK(std::abs(r.magnification - 1850.0 / 1350.0) < 1e-12);

  // shadow center 1 mm off along -u: source sits 1350/500 mm the other way
  fit.center = principal + Vec2(-1.0 / kPitch, 0.0);
  r = solve_source(fit, spec, kPitch, principal);
  CHECK(std::abs(r.source.x() - 2.7) < 1e-9);
  CHECK(std::abs(r.source.y()) < 1e-12);

  fit.radius = 100.0 / kPitch;
  CHECK_THROWS_WITH_AS(solve_source(fit, spec, kPitch, principal), doctest::Contains("MagnificationTooSmall"), Error);
  fit.radius = 90.0 / kPitch;
  CHECK_THROWS_AS(solve_source(fit, spec, kPitch, principal), Error);
  spec.standoff = 0.0;
  CHECK_THROWS_WITH_AS(solve_source(fit, spec, kPitch, principal), doctest::Contains("InvalidParams"), Error);
}

TEST_CASE("ray-traced plate shadow recovers the source") {
  PlatePhantomSpec spec;
  const Vec3 source(6.0, -4.0, 1860.0);
  const GrayImage img = plate_shadow_image(spec, source, kPitch, 1664, 1600);
  const SicalResult r = solve_source(fit_plate_shadow(img), spec, kPitch, Vec2(831.5, 799.5));
  CHECK(std::abs(r.source.z() - source.z()) <= 1.0);
  CHECK((r.source.head<2>() - source.head<2>()).norm() <= 0.2);
}

TEST_CASE("round trip gate on a few sources") {
  const auto s = checks::sical_round_trip(4, 41);
  CHECK(s.worst_h_noiseless <= 1.0);
  CHECK(s.worst_xy_noiseless <= 0.2);
  CHECK(s.median_h_noisy <= 5.0);
  CHECK(s.median_xy_noisy <= 1.0);
}

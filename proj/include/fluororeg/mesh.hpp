#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluororeg/geometry.hpp"

namespace fluororeg {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  std::array<Vec3, 8> corners() const;
};

/// Triangle mesh in mm. Faces are index triples into `vertices`.
struct TriMesh {
  std::string name;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  /// Every undirected edge is shared by exactly two faces with opposite
  /// orientation. Required for thickness rendering.
  bool watertight = false;

  Aabb bounds() const;
  /// Signed volume by the divergence theorem (positive for outward faces).
  double volume() const;
};

/// Welds vertices closer than 1e-6 mm, drops faces with area below 1e-12 mm^2
/// or repeated indices, and records the watertight flag. Throws EmptyMesh.
TriMesh finalize_mesh(std::string name, const std::vector<Vec3>& vertices,
                      const std::vector<std::array<std::uint32_t, 3>>& faces);

enum class MeshFormat { StlBinary, Obj };

/// Throws ParseError (with byte offset for STL, line for OBJ) or EmptyMesh.
TriMesh load_mesh(std::span<const std::uint8_t> bytes, MeshFormat format, std::string name = {});
/// Format chosen by extension (.stl / .obj).
TriMesh load_mesh_file(const std::filesystem::path& path);

std::vector<std::uint8_t> to_stl_binary(const TriMesh& mesh);
/// ASCII OBJ with 17 significant digits (lossless round trip).
std::string to_obj(const TriMesh& mesh);

enum class PhantomKind { Sphere, Box, CondylePair, TrayWithWings };

struct SphereParams {
  double radius = 20.0;
  int subdivisions = 3;  // icosahedron refinement levels
};

struct BoxParams {
  double size_x = 10.0, size_y = 20.0, size_z = 30.0;
};

/// Femur-like: two disjoint capsule lobes whose axes run anterior-posterior
/// (object z), separated medio-laterally (object x), plus an optional fixation
/// peg. Asymmetry lengthens and thickens the medial lobe.
struct CondyleParams {
  double lobe_radius = 11.0;
  double lobe_length = 34.0;  // cylinder part, mm
  double separation = 42.0;   // axis-to-axis, mm
  double toe_in_deg = 6.0;    // lobes converge anteriorly
  double asymmetry = 0.15;    // fractional size difference between lobes
  bool peg = true;
  int segments = 20;
};

enum class WingShape { None, Straight, Round };

/// Tibia-like: asymmetric base plate over a keel, optional wings on the keel.
/// Parts are separate closed shells with a small gap so parity stays valid.
struct TrayParams {
  double plate_width = 72.0;  // x
  double plate_depth = 48.0;  // z
  double plate_thickness = 5.0;
  double asymmetry = 0.2;  // lateral half narrower than medial
  double keel_length = 36.0;
  double keel_radius = 7.0;
  WingShape wings = WingShape::Round;
  double wing_span = 14.0;
  double gap = 0.3;
  int segments = 24;
};

struct PhantomSpec {
  PhantomKind kind = PhantomKind::CondylePair;
  SphereParams sphere;
  BoxParams box;
  CondyleParams condyle;
  TrayParams tray;
};

/// Watertight procedural phantom. Throws InvalidParams.
TriMesh make_phantom(const PhantomSpec& spec);
TriMesh make_sphere(const SphereParams& p);
TriMesh make_box(const BoxParams& p);
TriMesh make_condyle_pair(const CondyleParams& p);
TriMesh make_tray_with_wings(const TrayParams& p);

std::string_view to_string(PhantomKind kind);
/// Throws InvalidParams for an unknown name.
PhantomKind phantom_kind_from_string(std::string_view name);

}  // namespace fluororeg

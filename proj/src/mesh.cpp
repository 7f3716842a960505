#include "fluororeg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_map>

#include "fluororeg/error.hpp"
#include "fluororeg/fileio.hpp"

namespace fluororeg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kWeldTol = 1e-6;
constexpr double kMinArea = 1e-12;

using Face = std::array<std::uint32_t, 3>;

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.x) * 73856093u;
    h ^= static_cast<std::size_t>(k.y) * 19349663u;
    h ^= static_cast<std::size_t>(k.z) * 83492791u;
    return h;
  }
};

CellKey cell_of(const Vec3& p) {
  return {static_cast<long long>(std::floor(p.x() / kWeldTol)), static_cast<long long>(std::floor(p.y() / kWeldTol)),
          static_cast<long long>(std::floor(p.z() / kWeldTol))};
}

bool compute_watertight(const std::vector<Face>& faces) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const Face& f : faces) {
    for (int e = 0; e < 3; ++e) ++directed[{f[e], f[(e + 1) % 3]}];
  }
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    const auto it = directed.find({edge.second, edge.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return !faces.empty();
}

}  // namespace

std::array<Vec3, 8> Aabb::corners() const {
  std::array<Vec3, 8> c;
  for (int i = 0; i < 8; ++i) {
    c[i] = Vec3((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  return c;
}

Aabb TriMesh::bounds() const {
  Aabb b;
  for (const Vec3& v : vertices) b.extend(v);
  return b;
}

double TriMesh::volume() const {
  double v = 0.0;
  for (const Face& f : faces) v += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
  return v / 6.0;
}

TriMesh finalize_mesh(std::string name, const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
  std::vector<Vec3> welded;
  std::vector<std::uint32_t> remap(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3& p = vertices[i];
    const CellKey c = cell_of(p);
    std::uint32_t found = UINT32_MAX;
    for (long long dx = -1; dx <= 1 && found == UINT32_MAX; ++dx) {
      for (long long dy = -1; dy <= 1 && found == UINT32_MAX; ++dy) {
        for (long long dz = -1; dz <= 1 && found == UINT32_MAX; ++dz) {
          const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid.end()) continue;
          for (std::uint32_t j : it->second) {
            if ((welded[j] - p).norm() <= kWeldTol) {
              found = j;
              break;
            }
          }
        }
      }
    }
    if (found == UINT32_MAX) {
      found = static_cast<std::uint32_t>(welded.size());
      welded.push_back(p);
      grid[c].push_back(found);
    }
    remap[i] = found;
  }

  std::vector<Face> kept;
  kept.reserve(faces.size());
  for (const Face& f : faces) {
    for (std::uint32_t idx : f) {
      if (idx >= vertices.size()) fail(ErrorKind::InvalidParams, "face index out of range");
    }
    const Face g{remap[f[0]], remap[f[1]], remap[f[2]]};
    if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) continue;
    const double area = 0.5 * (welded[g[1]] - welded[g[0]]).cross(welded[g[2]] - welded[g[0]]).norm();
    if (!(area >= kMinArea)) continue;
    kept.push_back(g);
  }
  if (kept.empty()) fail(ErrorKind::EmptyMesh, "mesh '" + name + "' has no valid faces");

  // Compact away vertices no face references.
  std::vector<std::uint32_t> compact(welded.size(), UINT32_MAX);
  TriMesh mesh;
  mesh.name = std::move(name);
  for (Face& f : kept) {
    for (std::uint32_t& idx : f) {
      if (compact[idx] == UINT32_MAX) {
        compact[idx] = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(welded[idx]);
      }
      idx = compact[idx];
    }
  }
  mesh.faces = std::move(kept);
  mesh.watertight = compute_watertight(mesh.faces);
  return mesh;
}

namespace {

TriMesh parse_stl_binary(std::span<const std::uint8_t> bytes, std::string name) {
  if (bytes.size() < 84) throw ParseError("STL shorter than its 84-byte header", static_cast<long long>(bytes.size()), -1);
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, 4);
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  verts.reserve(3ull * count);
  faces.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t off = 84 + 50ull * i;
    if (off + 50 > bytes.size()) throw ParseError("STL truncated inside facet " + std::to_string(i), static_cast<long long>(off), -1);
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, bytes.data() + off + 12 + 12 * k, 12);
      verts.emplace_back(xyz[0], xyz[1], xyz[2]);
    }
    faces.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  if (count == 0) fail(ErrorKind::EmptyMesh, "STL has no facets");
  return finalize_mesh(std::move(name), verts, faces);
}

TriMesh parse_obj(std::span<const std::uint8_t> bytes, std::string name) {
  const std::string text(bytes.begin(), bytes.end());
  std::istringstream in(text);
  std::string line;
  long long line_no = 0;
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ParseError("malformed vertex", -1, line_no);
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ls >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        char* end = nullptr;
        const long idx = std::strtol(head.c_str(), &end, 10);
        if (head.empty() || *end != '\0' || idx == 0) throw ParseError("malformed face index '" + tok + "'", -1, line_no);
        const long resolved = idx > 0 ? idx - 1 : static_cast<long>(verts.size()) + idx;
        if (resolved < 0 || resolved >= static_cast<long>(verts.size())) {
          throw ParseError("face index out of range", -1, line_no);
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (poly.size() < 3) throw ParseError("face with fewer than 3 vertices", -1, line_no);
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (faces.empty()) fail(ErrorKind::EmptyMesh, "OBJ has no faces");
  return finalize_mesh(std::move(name), verts, faces);
}

}  // namespace

TriMesh load_mesh(std::span<const std::uint8_t> bytes, MeshFormat format, std::string name) {
  return format == MeshFormat::StlBinary ? parse_stl_binary(bytes, std::move(name)) : parse_obj(bytes, std::move(name));
}

TriMesh load_mesh_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  MeshFormat fmt;
  if (ext == ".stl") {
    fmt = MeshFormat::StlBinary;
  } else if (ext == ".obj") {
    fmt = MeshFormat::Obj;
  } else {
    fail(ErrorKind::InvalidParams, "unknown mesh extension '" + ext + "'");
  }
  const auto bytes = read_file_bytes(path);
  return load_mesh(bytes, fmt, path.stem().string());
}

std::vector<std::uint8_t> to_stl_binary(const TriMesh& mesh) {
  std::vector<std::uint8_t> out(84 + 50 * mesh.faces.size(), 0);
  const std::string header = "fluororeg " + mesh.name;
  std::memcpy(out.data(), header.data(), std::min<std::size_t>(header.size(), 80));
  const auto count = static_cast<std::uint32_t>(mesh.faces.size());
  std::memcpy(out.data() + 80, &count, 4);
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const Face& f = mesh.faces[i];
    const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).normalized();
    float buf[12] = {static_cast<float>(n.x()), static_cast<float>(n.y()), static_cast<float>(n.z())};
    for (int k = 0; k < 3; ++k) {
      for (int a = 0; a < 3; ++a) buf[3 + 3 * k + a] = static_cast<float>(mesh.vertices[f[k]][a]);
    }
    std::memcpy(out.data() + 84 + 50 * i, buf, sizeof(buf));
  }
  return out;
}

std::string to_obj(const TriMesh& mesh) {
  std::string out = "# " + mesh.name + "\n";
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const Face& f : mesh.faces) {
    std::snprintf(buf, sizeof(buf), "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Procedural phantoms

namespace {

/// Accumulates closed shells; each shell is flipped if it came out inside-out.
class ShellBuilder {
 public:
  std::uint32_t add_vertex(const Vec3& p) {
    verts_.push_back(p);
    return static_cast<std::uint32_t>(verts_.size() - 1);
  }
  void begin_shell() { shell_start_ = faces_.size(); }
  void add_face(std::uint32_t a, std::uint32_t b, std::uint32_t c) { faces_.push_back({a, b, c}); }
  void end_shell() {
    double vol = 0.0;
    for (std::size_t i = shell_start_; i < faces_.size(); ++i) {
      const Face& f = faces_[i];
      vol += verts_[f[0]].dot(verts_[f[1]].cross(verts_[f[2]]));
    }
    if (vol < 0.0) {
      for (std::size_t i = shell_start_; i < faces_.size(); ++i) std::swap(faces_[i][1], faces_[i][2]);
    }
  }

  /// Surface of revolution about local z. profile = (rho, z) from the bottom
  /// pole (rho = 0) to the top pole (rho = 0).
  void lathe(const std::vector<Vec2>& profile, int segments, const Mat3& rot, const Vec3& center) {
    begin_shell();
    const auto bottom = add_vertex(center + rot * Vec3(0, 0, profile.front().y()));
    std::vector<std::vector<std::uint32_t>> rings;
    for (std::size_t k = 1; k + 1 < profile.size(); ++k) {
      std::vector<std::uint32_t> ring;
      for (int j = 0; j < segments; ++j) {
        const double phi = 2.0 * kPi * j / segments;
        ring.push_back(add_vertex(center + rot * Vec3(profile[k].x() * std::cos(phi), profile[k].x() * std::sin(phi), profile[k].y())));
      }
      rings.push_back(std::move(ring));
    }
    const auto top = add_vertex(center + rot * Vec3(0, 0, profile.back().y()));
    for (int j = 0; j < segments; ++j) {
      const int jn = (j + 1) % segments;
      add_face(bottom, rings.front()[jn], rings.front()[j]);
      for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
        add_face(rings[k][j], rings[k][jn], rings[k + 1][jn]);
        add_face(rings[k][j], rings[k + 1][jn], rings[k + 1][j]);
      }
      add_face(top, rings.back()[j], rings.back()[jn]);
    }
    end_shell();
  }

  /// Prism from a polygon star-shaped about its vertex centroid. The polygon
  /// lives in the (axis_a, axis_b) plane; extrusion spans [c0, c1] along axis_c.
  void extrude(const std::vector<Vec2>& poly, const Vec3& axis_a, const Vec3& axis_b, const Vec3& axis_c, double c0,
               double c1, const Vec3& origin) {
    begin_shell();
    Vec2 centroid = Vec2::Zero();
    for (const Vec2& p : poly) centroid += p;
    centroid /= static_cast<double>(poly.size());
    auto at = [&](const Vec2& p, double c) { return origin + p.x() * axis_a + p.y() * axis_b + c * axis_c; };
    const auto bc = add_vertex(at(centroid, c0));
    const auto tc = add_vertex(at(centroid, c1));
    std::vector<std::uint32_t> lo, hi;
    for (const Vec2& p : poly) {
      lo.push_back(add_vertex(at(p, c0)));
      hi.push_back(add_vertex(at(p, c1)));
    }
    const std::size_t n = poly.size();
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jn = (j + 1) % n;
      add_face(bc, lo[jn], lo[j]);
      add_face(tc, hi[j], hi[jn]);
      add_face(lo[j], lo[jn], hi[jn]);
      add_face(lo[j], hi[jn], hi[j]);
    }
    end_shell();
  }

  TriMesh finish(std::string name) { return finalize_mesh(std::move(name), verts_, faces_); }

 private:
  std::vector<Vec3> verts_;
  std::vector<Face> faces_;
  std::size_t shell_start_ = 0;
};

std::vector<Vec2> capsule_profile(double radius, double length, int rings_per_cap) {
  std::vector<Vec2> prof;
  for (int k = 0; k <= rings_per_cap; ++k) {
    const double a = -0.5 * kPi + 0.5 * kPi * k / rings_per_cap;
    prof.emplace_back(radius * std::cos(a), -0.5 * length + radius * std::sin(a));
  }
  for (int k = 0; k <= rings_per_cap; ++k) {
    const double a = 0.5 * kPi * k / rings_per_cap;
    prof.emplace_back(radius * std::cos(a), 0.5 * length + radius * std::sin(a));
  }
  prof.front().x() = 0.0;
  prof.back().x() = 0.0;
  return prof;
}

std::vector<Vec2> cylinder_profile(double radius, double length) {
  return {Vec2(0, -0.5 * length), Vec2(radius, -0.5 * length), Vec2(radius, 0.5 * length), Vec2(0, 0.5 * length)};
}

/// Rotation taking local +z onto `dir`.
Mat3 frame_along(const Vec3& dir) { return Quat::FromTwoVectors(Vec3::UnitZ(), dir.normalized()).toRotationMatrix(); }

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorKind::InvalidParams, what);
}

}  // namespace

TriMesh make_sphere(const SphereParams& p) {
  require(p.radius > 0.0, "sphere radius must be positive");
  require(p.subdivisions >= 0 && p.subdivisions <= 7, "sphere subdivisions must lie in [0, 7]");
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                         {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  for (Vec3& x : v) x.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                         {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < p.subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& t : f) {
      const auto a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (Vec3& x : v) x *= p.radius;
  TriMesh m = finalize_mesh("sphere", v, f);
  if (m.volume() < 0.0) {
    for (auto& face : m.faces) std::swap(face[1], face[2]);
  }
  return m;
}

TriMesh make_box(const BoxParams& p) {
  require(p.size_x > 0.0 && p.size_y > 0.0 && p.size_z > 0.0, "box dimensions must be positive");
  ShellBuilder b;
  const std::vector<Vec2> rect = {{-0.5 * p.size_x, -0.5 * p.size_y}, {0.5 * p.size_x, -0.5 * p.size_y},
                                  {0.5 * p.size_x, 0.5 * p.size_y}, {-0.5 * p.size_x, 0.5 * p.size_y}};
  // Direct 8-vertex construction keeps the canonical 12-triangle box.
  b.begin_shell();
  std::array<std::uint32_t, 8> c{};
  for (int i = 0; i < 8; ++i) {
    c[i] = b.add_vertex(Vec3((i & 1) ? 0.5 * p.size_x : -0.5 * p.size_x, (i & 2) ? 0.5 * p.size_y : -0.5 * p.size_y,
                             (i & 4) ? 0.5 * p.size_z : -0.5 * p.size_z));
  }
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    b.add_face(c[q[0]], c[q[1]], c[q[2]]);
    b.add_face(c[q[0]], c[q[2]], c[q[3]]);
  }
  b.end_shell();
  (void)rect;
  return b.finish("box");
}

TriMesh make_condyle_pair(const CondyleParams& p) {
  require(p.lobe_radius > 0.0 && p.lobe_length >= 0.0, "lobe dimensions must be positive");
  require(p.separation > 2.5 * p.lobe_radius, "lobes would overlap");
  require(p.asymmetry >= 0.0 && p.asymmetry < 0.5, "asymmetry must lie in [0, 0.5)");
  require(p.segments >= 6, "need at least 6 segments");
  ShellBuilder b;
  const int rings = std::max(3, p.segments / 4);
  const double half_toe = 0.5 * p.toe_in_deg * kPi / 180.0;
  const double medial_r = p.lobe_radius * (1.0 + 0.5 * p.asymmetry);
  const double lateral_r = p.lobe_radius * (1.0 - 0.5 * p.asymmetry);
  const double medial_len = p.lobe_length * (1.0 + p.asymmetry);
  const double lateral_len = p.lobe_length * (1.0 - p.asymmetry);
  // Medial lobe at +x, lateral at -x; both axes tilt toward the midline at +z.
  const Vec3 medial_dir(-std::sin(half_toe), 0.0, std::cos(half_toe));
  const Vec3 lateral_dir(std::sin(half_toe), 0.0, std::cos(half_toe));
  b.lathe(capsule_profile(medial_r, medial_len, rings), p.segments, frame_along(medial_dir), Vec3(0.5 * p.separation, 0, 0));
  b.lathe(capsule_profile(lateral_r, lateral_len, rings), p.segments, frame_along(lateral_dir),
          Vec3(-0.5 * p.separation, 0, 2.0));
  if (p.peg) {
    const double peg_len = 12.0;
    b.lathe(cylinder_profile(3.5, peg_len), p.segments, frame_along(Vec3::UnitY()),
            Vec3(0.5 * p.separation, medial_r + 1.0 + 0.5 * peg_len, 6.0));
  }
  return b.finish("condyle_pair");
}

TriMesh make_tray_with_wings(const TrayParams& p) {
  require(p.plate_width > 0.0 && p.plate_depth > 0.0 && p.plate_thickness > 0.0, "plate dimensions must be positive");
  require(p.keel_length > 0.0 && p.keel_radius > 0.0, "keel dimensions must be positive");
  require(p.asymmetry >= 0.0 && p.asymmetry < 0.9, "asymmetry must lie in [0, 0.9)");
  require(p.gap > 0.0, "gap must be positive");
  require(p.segments >= 8, "need at least 8 segments");
  ShellBuilder b;
  // Plate outline in the x-z plane: medial half (x > 0) is full size, the
  // lateral half is narrowed by the asymmetry factor.
  std::vector<Vec2> outline;
  const int n = 2 * p.segments;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    const double cx = std::cos(a), sz = std::sin(a);
    const double half_w = 0.5 * p.plate_width * (cx >= 0.0 ? 1.0 : 1.0 - p.asymmetry);
    // Superellipse-ish outline, flattened posteriorly.
    const double r = std::pow(std::pow(std::abs(cx), 3.0) + std::pow(std::abs(sz), 3.0), -1.0 / 3.0);
    double z = 0.5 * p.plate_depth * sz * r;
    if (z < -0.35 * p.plate_depth) z = -0.35 * p.plate_depth;
    outline.emplace_back(half_w * cx * r, z);
  }
  b.extrude(outline, Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY(), 0.0, p.plate_thickness, Vec3::Zero());

  const double keel_top = -p.gap;
  const Vec3 keel_center(0.0, keel_top - 0.5 * p.keel_length, 0.0);
  b.lathe(cylinder_profile(p.keel_radius, p.keel_length), p.segments, frame_along(Vec3::UnitY()), keel_center);

  if (p.wings != WingShape::None) {
    const double wing_h = 0.6 * p.keel_length;
    const double wing_t = 2.0;
    for (int side : {-1, 1}) {
      const double x_in = p.keel_radius + p.gap;
      const double x_out = x_in + p.wing_span;
      std::vector<Vec2> prof;  // (x, y) in the x-y plane
      if (p.wings == WingShape::Straight) {
        prof = {{x_in, keel_top}, {x_out, keel_top}, {x_out, keel_top - 0.35 * wing_h}, {x_in, keel_top - wing_h}};
      } else {
        prof.emplace_back(x_in, keel_top);
        for (int k = 0; k <= 8; ++k) {
          const double a = 0.5 * kPi * k / 8.0;
          prof.emplace_back(x_in + p.wing_span * std::cos(a), keel_top - wing_h * std::sin(a));
        }
      }
      for (Vec2& q : prof) q.x() *= side;
      if (side < 0) std::reverse(prof.begin(), prof.end());
      b.extrude(prof, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), -0.5 * wing_t, 0.5 * wing_t, Vec3::Zero());
    }
  }
  return b.finish(p.wings == WingShape::None ? "tray_no_wings" : "tray_with_wings");
}

TriMesh make_phantom(const PhantomSpec& spec) {
  switch (spec.kind) {
    case PhantomKind::Sphere: return make_sphere(spec.sphere);
    case PhantomKind::Box: return make_box(spec.box);
    case PhantomKind::CondylePair: return make_condyle_pair(spec.condyle);
    case PhantomKind::TrayWithWings: return make_tray_with_wings(spec.tray);
  }
  fail(ErrorKind::InvalidParams, "unknown phantom kind");
}

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::Sphere: return "sphere";
    case PhantomKind::Box: return "box";
    case PhantomKind::CondylePair: return "condyle_pair";
    case PhantomKind::TrayWithWings: return "tray_with_wings";
  }
  return "unknown";
}

PhantomKind phantom_kind_from_string(std::string_view name) {
  if (name == "sphere") return PhantomKind::Sphere;
  if (name == "box") return PhantomKind::Box;
  if (name == "condyle_pair") return PhantomKind::CondylePair;
  if (name == "tray_with_wings") return PhantomKind::TrayWithWings;
  fail(ErrorKind::InvalidParams, "unknown phantom kind '" + std::string(name) + "'");
}

}  // namespace fluororeg

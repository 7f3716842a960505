#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "fluororeg/error.hpp"
#include "fluororeg/mesh.hpp"

using namespace fluororeg;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Unit cube as 12 independent STL facets (36 unwelded vertices).
std::vector<std::uint8_t> cube_stl() {
  const int corners[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  const int tris[12][3] = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                           {2, 3, 7}, {2, 7, 6}, {1, 2, 6}, {1, 6, 5}, {0, 4, 7}, {0, 7, 3}};
  std::vector<std::uint8_t> out(80, 0);
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto put_f32 = [&](float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(u);
  };
  put_u32(12);
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) put_f32(0.0f);
    for (int v : t)
      for (int ax = 0; ax < 3; ++ax) put_f32(static_cast<float>(corners[v][ax]));
    out.push_back(0);
    out.push_back(0);
  }
  return out;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

int components(const TriMesh& m) {
  std::vector<int> parent(m.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& f : m.faces) {
    parent[find(f[1])] = find(f[0]);
    parent[find(f[2])] = find(f[0]);
  }
  int n = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) n += find(static_cast<int>(i)) == static_cast<int>(i);
  return n;
}

std::vector<Vec3> sorted_vertices(const TriMesh& m) {
  auto v = m.vertices;
  std::sort(v.begin(), v.end(), [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  return v;
}

}  // namespace

TEST_CASE("binary STL cube welds to 8 vertices") {
  const TriMesh m = load_mesh(cube_stl(), MeshFormat::StlBinary, "cube");
  CHECK(m.vertices.size() == 8);
  CHECK(m.faces.size() == 12);
  CHECK(m.watertight);
  CHECK(m.volume() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncated STL reports the byte offset") {
  auto bytes = cube_stl();
  bytes.resize(bytes.size() - 20);
  try {
    load_mesh(bytes, MeshFormat::StlBinary);
    FAIL("no exception");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == 84 + 11 * 50);
  }
  CHECK_THROWS_AS(load_mesh(std::vector<std::uint8_t>(10, 0), MeshFormat::StlBinary), ParseError);
}

TEST_CASE("OBJ and STL of the same cube agree") {
  const TriMesh stl = load_mesh(cube_stl(), MeshFormat::StlBinary);
  const TriMesh obj = load_mesh(bytes_of(to_obj(stl)), MeshFormat::Obj);
  CHECK(sorted_vertices(obj) == sorted_vertices(stl));
  CHECK(obj.faces.size() == stl.faces.size());

  // hand-written OBJ with quads and a comment
  const std::string text =
      "# cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
      "f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 3 4 8 7\nf 2 3 7 6\nf 1 5 8 4\n";
  const TriMesh quads = load_mesh(bytes_of(text), MeshFormat::Obj);
  CHECK(sorted_vertices(quads) == sorted_vertices(stl));
  CHECK(quads.faces.size() == 12);
  CHECK(quads.watertight);
  CHECK(quads.volume() == doctest::Approx(1.0));

  // STL writer round trip
  const TriMesh again = load_mesh(to_stl_binary(stl), MeshFormat::StlBinary);
  CHECK(sorted_vertices(again) == sorted_vertices(stl));
}

TEST_CASE("OBJ errors carry the line number") {
  try {
    load_mesh(bytes_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"), MeshFormat::Obj);
    FAIL("no exception");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  try {
    load_mesh(bytes_of("v 0 0 0\nv 1 x 0\n"), MeshFormat::Obj);
    FAIL("no exception");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_WITH_AS(load_mesh(bytes_of("v 0 0 0\n"), MeshFormat::Obj), doctest::Contains("EmptyMesh"), Error);
}

TEST_CASE("degenerate faces are dropped") {
  const std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}, {1e-8, 0, 0}};
  const TriMesh m = finalize_mesh("t", v, {{0, 1, 2}, {0, 1, 3}, {0, 0, 2}, {0, 4, 2}});
  // vertex 4 welds onto 0, so only the first face survives
  CHECK(m.faces.size() == 1);
  CHECK(m.vertices.size() == 3);
  CHECK_FALSE(m.watertight);
  CHECK_THROWS_WITH_AS(finalize_mesh("e", v, {{0, 1, 3}}), doctest::Contains("EmptyMesh"), Error);
}

TEST_CASE("phantoms") {
  const TriMesh sphere = make_sphere(SphereParams{20.0, 3});
  CHECK(sphere.watertight);
  CHECK(sphere.volume() == doctest::Approx(4.0 / 3.0 * kPi * 8000.0).epsilon(0.02));

  const TriMesh box = make_box(BoxParams{10, 20, 30});
  CHECK(box.watertight);
  CHECK(std::abs(box.volume() - 6000.0) < 1e-6);

  const TriMesh condyles = make_condyle_pair(CondyleParams{});
  CHECK(condyles.watertight);
  CHECK(condyles.volume() > 0.0);

  TrayParams tp;
  tp.wings = WingShape::None;
  const TriMesh plain = make_tray_with_wings(tp);
  tp.wings = WingShape::Round;
  const TriMesh round = make_tray_with_wings(tp);
  tp.wings = WingShape::Straight;
  const TriMesh straight = make_tray_with_wings(tp);
  CHECK(plain.watertight);
  CHECK(round.watertight);
  CHECK(straight.watertight);
  CHECK(components(plain) == 2);  // plate and keel only
  CHECK(components(round) > 2);
  CHECK(components(straight) > 2);
  CHECK(round.volume() > plain.volume());

  for (PhantomKind k : {PhantomKind::Sphere, PhantomKind::Box, PhantomKind::CondylePair, PhantomKind::TrayWithWings}) {
    CHECK(phantom_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(phantom_kind_from_string("femur"), Error);
  CHECK_THROWS_WITH_AS(make_sphere(SphereParams{-1.0, 2}), doctest::Contains("InvalidParams"), Error);
  CHECK_THROWS_AS(make_box(BoxParams{0, 1, 1}), Error);
}

TEST_CASE("asymmetry makes the condyles differ") {
  CondyleParams p;
  p.peg = false;
  p.asymmetry = 0.0;
  const TriMesh sym = make_condyle_pair(p);
  p.asymmetry = 0.3;
  const TriMesh asym = make_condyle_pair(p);
  CHECK(asym.volume() > sym.volume());
  const Aabb b = sym.bounds();
  CHECK(std::abs(b.lo.x() + b.hi.x()) < 1e-9);  // mirror symmetric in x
}

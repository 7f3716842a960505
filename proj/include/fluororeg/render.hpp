#pragma once

#include <memory>
#include <vector>

#include "fluororeg/geometry.hpp"
#include "fluororeg/image.hpp"
#include "fluororeg/mesh.hpp"
#include "fluororeg/simd/kernels.hpp"

namespace fluororeg {

/// Immutable ray-query structure over a mesh in its own (object) frame.
/// With `use_bvh` false every query tests all triangles; results are
/// bit-identical to the BVH path.
class MeshAccel {
 public:
  explicit MeshAccel(const TriMesh& mesh, bool use_bvh = true);

  const TriMesh& mesh() const { return mesh_; }
  const Aabb& bounds() const { return bounds_; }
  bool uses_bvh() const { return use_bvh_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// True when the ray hits any triangle with tmin < t < tmax. `dir` must be
  /// unit length so t is a distance in mm.
  bool any_hit(const Vec3& origin, const Vec3& dir, double tmin, double tmax) const;
  /// All hit distances in (tmin, tmax), sorted, with hits closer than 1e-9
  /// merged into one.
  void all_hits(const Vec3& origin, const Vec3& dir, double tmin, double tmax, std::vector<double>& out) const;

 private:
  struct Node {
    double lo[3], hi[3];
    int left = -1, right = -1;  // children; -1 for leaves
    int block = -1;             // leaf TriBlock4 index
  };

  template <class Visit>
  void traverse(const simd::ShearedRay& ray, const Vec3& origin, const Vec3& dir, Visit&& visit) const;
  int build(std::vector<int>& tris, std::size_t begin, std::size_t end, const std::vector<Vec3>& centroids);
  void add_block(const std::vector<int>& tris, std::size_t begin, std::size_t end);

  TriMesh mesh_;
  Aabb bounds_;
  bool use_bvh_;
  std::vector<Node> nodes_;
  std::vector<simd::TriBlock4> blocks_;
};

enum class RenderMode { Silhouette, Thickness };

struct RenderConfig {
  RenderMode mode = RenderMode::Silhouette;
  double mu = 0.02;          // 1/mm, thickness mode
  double blur_sigma = 0.0;   // px at output resolution
  int supersample = 1;       // samples per axis, 1 or 2
  int downscale = 1;
  /// Silhouette only: pixels whose 3x3 neighbourhood of center samples is not
  /// uniform are replaced by their coverage over edge_samples^2 subsamples
  /// (0 = off).
  /// Requires supersample == 1.
  int edge_samples = 0;

  /// Throws InvalidConfig.
  void validate() const;
};

struct RenderStats {
  std::size_t rays = 0;
  std::size_t odd_parity_rays = 0;  // thickness mode only
};

/// Render restricted to the pixels the mesh can touch: `image` is the
/// sub-rectangle at (x0, y0) of the full output; every pixel outside it is 0.
struct RenderPatch {
  GrayImage image;
  int x0 = 0, y0 = 0;
  int full_width = 0, full_height = 0;

  GrayImage expand() const;
};

/// Throws NotWatertight (thickness on an open mesh), InvalidConfig.
RenderPatch render_region(const MeshAccel& accel, const RigidPose& pose, const CameraModel& cam,
                          const RenderConfig& cfg, RenderStats* stats = nullptr);

/// Full-frame render at camera resolution / downscale.
GrayImage render(const MeshAccel& accel, const RigidPose& pose, const CameraModel& cam, const RenderConfig& cfg,
                 RenderStats* stats = nullptr);
GrayImage render(const TriMesh& mesh, const RigidPose& pose, const CameraModel& cam, const RenderConfig& cfg);

}  // namespace fluororeg

#include "fluororeg/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>

#include "fluororeg/error.hpp"
#include "fluororeg/parallel.hpp"

namespace fluororeg {

namespace {

constexpr double kMergeTol = 1e-9;
constexpr double kBoxPad = 1e-6;
constexpr std::size_t kLeafSize = 4;

}  // namespace

MeshAccel::MeshAccel(const TriMesh& mesh, bool use_bvh) : mesh_(mesh), bounds_(mesh.bounds()), use_bvh_(use_bvh) {
  if (mesh_.faces.empty()) fail(ErrorKind::EmptyMesh, "cannot build a ray query structure over an empty mesh");
  std::vector<int> tris(mesh_.faces.size());
  std::vector<Vec3> centroids(mesh_.faces.size());
  for (std::size_t i = 0; i < tris.size(); ++i) {
    tris[i] = static_cast<int>(i);
    const auto& f = mesh_.faces[i];
    centroids[i] = (mesh_.vertices[f[0]] + mesh_.vertices[f[1]] + mesh_.vertices[f[2]]) / 3.0;
  }
  if (use_bvh_) {
    nodes_.reserve(2 * tris.size() / kLeafSize + 1);
    build(tris, 0, tris.size(), centroids);
  } else {
    for (std::size_t i = 0; i < tris.size(); i += kLeafSize) add_block(tris, i, std::min(tris.size(), i + kLeafSize));
  }
}

void MeshAccel::add_block(const std::vector<int>& tris, std::size_t begin, std::size_t end) {
  simd::TriBlock4 b{};
  for (std::size_t lane = 0; begin + lane < end; ++lane) {
    const auto& f = mesh_.faces[tris[begin + lane]];
    for (int k = 0; k < 3; ++k) {
      for (int a = 0; a < 3; ++a) b.v[k][a][lane] = mesh_.vertices[f[k]][a];
    }
  }
  blocks_.push_back(b);
}

int MeshAccel::build(std::vector<int>& tris, std::size_t begin, std::size_t end, const std::vector<Vec3>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (std::size_t i = begin; i < end; ++i) {
    for (std::uint32_t v : mesh_.faces[tris[i]]) box.extend(mesh_.vertices[v]);
    cbox.extend(centroids[tris[i]]);
  }
  for (int a = 0; a < 3; ++a) {
    nodes_[index].lo[a] = box.lo[a] - kBoxPad;
    nodes_[index].hi[a] = box.hi[a] + kBoxPad;
  }
  if (end - begin <= kLeafSize) {
    nodes_[index].block = static_cast<int>(blocks_.size());
    add_block(tris, begin, end);
    return index;
  }
  const Vec3 extent = cbox.hi - cbox.lo;
  int axis = 0;
  if (extent[1] > extent[axis]) axis = 1;
  if (extent[2] > extent[axis]) axis = 2;
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end, [&](int a, int b) {
    if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
    return a < b;
  });
  const int left = build(tris, begin, mid, centroids);
  const int right = build(tris, mid, end, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

template <class Visit>
void MeshAccel::traverse(const simd::ShearedRay& ray, const Vec3& origin, const Vec3& dir, Visit&& visit) const {
  if (!use_bvh_) {
    for (const auto& b : blocks_) {
      if (!visit(b)) return;
    }
    return;
  }
  const double inv[3] = {1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]};
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    double tn = ray.tmin, tf = ray.tmax;
    for (int a = 0; a < 3; ++a) {
      double a0 = (n.lo[a] - origin[a]) * inv[a];
      double a1 = (n.hi[a] - origin[a]) * inv[a];
      if (a0 > a1) std::swap(a0, a1);
      if (a0 > tn) tn = a0;
      if (a1 < tf) tf = a1;
    }
    if (!(tn <= tf)) continue;
    if (n.block >= 0) {
      if (!visit(blocks_[n.block])) return;
    } else {
      stack[top++] = n.right;
      stack[top++] = n.left;
    }
  }
}

bool MeshAccel::any_hit(const Vec3& origin, const Vec3& dir, double tmin, double tmax) const {
  const simd::ShearedRay ray = simd::make_sheared_ray(origin.data(), dir.data(), tmin, tmax);
  const auto& k = simd::active_kernels();
  bool hit = false;
  traverse(ray, origin, dir, [&](const simd::TriBlock4& b) {
    double t[4];
    hit = k.intersect4(b, ray, t) != 0;
    return !hit;
  });
  return hit;
}

void MeshAccel::all_hits(const Vec3& origin, const Vec3& dir, double tmin, double tmax, std::vector<double>& out) const {
  out.clear();
  const simd::ShearedRay ray = simd::make_sheared_ray(origin.data(), dir.data(), tmin, tmax);
  const auto& k = simd::active_kernels();
  traverse(ray, origin, dir, [&](const simd::TriBlock4& b) {
    double t[4];
    const unsigned mask = k.intersect4(b, ray, t);
    for (int lane = 0; lane < 4; ++lane) {
      if (mask & (1u << lane)) out.push_back(t[lane]);
    }
    return true;
  });
  std::sort(out.begin(), out.end());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (kept == 0 || out[i] - out[kept - 1] >= kMergeTol) out[kept++] = out[i];
  }
  out.resize(kept);
}

void RenderConfig::validate() const {
  if (mode == RenderMode::Thickness && !(mu > 0.0)) fail(ErrorKind::InvalidConfig, "thickness mode needs mu > 0");
  if (!(blur_sigma >= 0.0)) fail(ErrorKind::InvalidConfig, "blur_sigma must be non-negative");
  if (supersample != 1 && supersample != 2) fail(ErrorKind::InvalidConfig, "supersample must be 1 or 2");
  if (downscale < 1) fail(ErrorKind::InvalidConfig, "downscale must be >= 1");
  if (edge_samples < 0 || edge_samples > 32) fail(ErrorKind::InvalidConfig, "edge_samples must lie in [0, 32]");
  if (edge_samples > 0 && (mode != RenderMode::Silhouette || supersample != 1)) {
    fail(ErrorKind::InvalidConfig, "edge_samples needs silhouette mode with supersample 1");
  }
}

GrayImage RenderPatch::expand() const {
  GrayImage full(full_width, full_height);
  for (int y = 0; y < image.height(); ++y) {
    std::copy(image.row(y), image.row(y) + image.width(), full.row(y0 + y) + x0);
  }
  return full;
}

namespace {

struct PixelRect {
  int x0, y0, x1, y1;  // half-open
};

PixelRect footprint(const MeshAccel& accel, const RigidPose& pose, const CameraModel& cam, int pad) {
  const PixelRect full{0, 0, cam.width, cam.height};
  double umin = std::numeric_limits<double>::infinity(), umax = -umin, vmin = umin, vmax = -umin;
  try {
    for (const Vec3& c : accel.bounds().corners()) {
      const Vec2 px = project(cam, pose.apply(c));
      umin = std::min(umin, px.x());
      umax = std::max(umax, px.x());
      vmin = std::min(vmin, px.y());
      vmax = std::max(vmax, px.y());
    }
  } catch (const Error&) {
    return full;
  }
  if (!(std::isfinite(umin) && std::isfinite(umax) && std::isfinite(vmin) && std::isfinite(vmax))) return full;
  // Pixel i spans detector coordinates [i, i + 1).
  auto clampi = [](double v, int lo, int hi) {
    return static_cast<int>(std::clamp(v, static_cast<double>(lo), static_cast<double>(hi)));
  };
  PixelRect r;
  r.x0 = clampi(std::floor(umin) - pad, 0, cam.width);
  r.x1 = clampi(std::ceil(umax) + pad, 0, cam.width);
  r.y0 = clampi(std::floor(vmin) - pad, 0, cam.height);
  r.y1 = clampi(std::ceil(vmax) + pad, 0, cam.height);
  if (r.x1 <= r.x0 || r.y1 <= r.y0) return {0, 0, 0, 0};
  return r;
}

}  // namespace

RenderPatch render_region(const MeshAccel& accel, const RigidPose& pose, const CameraModel& cam,
                          const RenderConfig& cfg, RenderStats* stats) {
  cfg.validate();
  if (cfg.mode == RenderMode::Thickness && !accel.mesh().watertight) {
    fail(ErrorKind::NotWatertight, "thickness rendering needs a watertight mesh ('" + accel.mesh().name + "')");
  }
  const CameraModel out_cam = cam.downscaled(cfg.downscale);
  const int blur_radius = cfg.blur_sigma > 0.0 ? static_cast<int>(std::ceil(3.0 * cfg.blur_sigma)) : 0;
  const PixelRect rect = footprint(accel, pose, out_cam, blur_radius + 2);

  RenderPatch patch;
  patch.full_width = out_cam.width;
  patch.full_height = out_cam.height;
  patch.x0 = rect.x0;
  patch.y0 = rect.y0;
  const int w = rect.x1 - rect.x0, h = rect.y1 - rect.y0;
  patch.image = GrayImage(w, h);
  if (w == 0 || h == 0) return patch;

  const Mat3 rt = pose.rotation_matrix().transpose();
  const Vec3 local_source = rt * (out_cam.source - pose.translation());
  const int s = cfg.supersample;
  const double inv_samples = 1.0 / (s * s);
  std::vector<std::size_t> odd_rows(static_cast<std::size_t>(h), 0);

  auto silhouette_hit = [&](double u, double v) {
    const Vec3 to_pixel = out_cam.detector_point(Vec2(u, v)) - out_cam.source;
    const double length = to_pixel.norm();
    return accel.any_hit(local_source, rt * (to_pixel / length), 0.0, length);
  };

  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    std::vector<double> hits;
    double* dst = patch.image.row(static_cast<int>(row));
    const int j = rect.y0 + static_cast<int>(row);
    for (int i = rect.x0; i < rect.x1; ++i) {
      double acc = 0.0;
      for (int b = 0; b < s; ++b) {
        for (int a = 0; a < s; ++a) {
          const double u = i + (a + 0.5) / s, v = j + (b + 0.5) / s;
          if (cfg.mode == RenderMode::Silhouette) {
            if (silhouette_hit(u, v)) acc += 1.0;
          } else {
            const Vec3 to_pixel = out_cam.detector_point(Vec2(u, v)) - out_cam.source;
            const double length = to_pixel.norm();
            accel.all_hits(local_source, rt * (to_pixel / length), 0.0, length, hits);
            if (hits.size() % 2 != 0) {
              ++odd_rows[row];
              hits.pop_back();
            }
            double chord = 0.0;
            for (std::size_t k = 0; k + 1 < hits.size(); k += 2) chord += hits[k + 1] - hits[k];
            acc += 1.0 - std::exp(-cfg.mu * chord);
          }
        }
      }
      dst[i - rect.x0] = acc * inv_samples;
    }
  });

  std::size_t extra_rays = 0;
  if (cfg.edge_samples > 0) {
    const GrayImage centers = patch.image;
    // rank-1 lattice with a golden-ratio generator: no orientation lines up
    // a whole row of samples with an edge
    const int n = cfg.edge_samples * cfg.edge_samples;
    int gen = std::max(1, static_cast<int>(std::lround(n * 0.6180339887498949)));
    while (std::gcd(gen, n) != 1) ++gen;
    std::vector<std::size_t> row_rays(static_cast<std::size_t>(h), 0);
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      const int j = rect.y0 + y;
      for (int x = 0; x < w; ++x) {
        const double c = centers.at(x, y);
        bool edge = false;
        for (int dy = -1; dy <= 1 && !edge; ++dy) {
          for (int dx = -1; dx <= 1 && !edge; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx >= 0 && ny >= 0 && nx < w && ny < h && centers.at(nx, ny) != c) edge = true;
          }
        }
        if (!edge) continue;
        int inside = 0;
        for (int k = 0; k < n; ++k) {
          const double u = (k + 0.5) / n;
          const double v = static_cast<double>((static_cast<long>(k) * gen) % n) / n + 0.5 / n;
          if (silhouette_hit(rect.x0 + x + u, j + v)) ++inside;
        }
        patch.image.at(x, y) = static_cast<double>(inside) / n;
        row_rays[row] += static_cast<std::size_t>(n);
      }
    });
    for (std::size_t r : row_rays) extra_rays += r;
  }

  if (cfg.blur_sigma > 0.0) {
    BlurBorders borders;
    borders.left = rect.x0 == 0;
    borders.right = rect.x1 == out_cam.width;
    borders.top = rect.y0 == 0;
    borders.bottom = rect.y1 == out_cam.height;
    patch.image = gaussian_blur(patch.image, cfg.blur_sigma, borders);
  }
  if (stats != nullptr) {
    stats->rays += static_cast<std::size_t>(w) * h * s * s + extra_rays;
    for (std::size_t c : odd_rows) stats->odd_parity_rays += c;
  }
  return patch;
}

GrayImage render(const MeshAccel& accel, const RigidPose& pose, const CameraModel& cam, const RenderConfig& cfg,
                 RenderStats* stats) {
  return render_region(accel, pose, cam, cfg, stats).expand();
}

GrayImage render(const TriMesh& mesh, const RigidPose& pose, const CameraModel& cam, const RenderConfig& cfg) {
  return render(MeshAccel(mesh), pose, cam, cfg);
}

}  // namespace fluororeg

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fluororeg/geometry.hpp"

namespace fluororeg {

/// Row-major scalar image, nominal intensity range [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const double* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y) * width_; }
  double* row(int y) { return pixels_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Zero-mean normalized cross-correlation over the full image, clamped to
/// [-1, 1]. Throws DimensionMismatch or ConstantImage.
double ncc(const GrayImage& a, const GrayImage& b);

/// Precomputed statistics of a fixed NCC reference image, for scoring many
/// images that are zero outside a small rectangle.
struct NccReference {
  const GrayImage* image = nullptr;
  double mean = 0.0;
  double centered_ss = 0.0;  // sum of (b - mean)^2
};

/// Throws ConstantImage for a constant reference.
NccReference make_ncc_reference(const GrayImage& image);

/// NCC between `reference` and the full-size image that equals `patch` at
/// offset (x0, y0) and zero elsewhere. Equals ncc() on the expanded image.
double ncc_patch(const NccReference& reference, const GrayImage& patch, int x0, int y0);

/// Which borders replicate the edge pixel (true) or read as zero (false).
struct BlurBorders {
  bool left = true, right = true, top = true, bottom = true;
};

/// Separable Gaussian, radius ceil(3 sigma), normalized taps, edge clamp.
/// sigma == 0 returns the input unchanged.
GrayImage gaussian_blur(const GrayImage& img, double sigma, BlurBorders borders = {});

/// Normalized Gaussian taps for the given sigma (2 * ceil(3 sigma) + 1 values).
std::vector<double> gaussian_taps(double sigma);

/// Bilinear interpolation in image-index coordinates; 0 outside
/// [0, w-1] x [0, h-1].
double bilinear_sample(const GrayImage& img, double x, double y);
inline double bilinear_sample(const GrayImage& img, const Vec2& xy) { return bilinear_sample(img, xy.x(), xy.y()); }

enum class Polarity { Bright, Dark };

struct BlobConfig {
  double threshold = 0.5;  // absolute intensity
  double min_area = 1.0;   // px^2
  double max_area = 1e12;
  Polarity polarity = Polarity::Bright;
};

struct Blob {
  Vec2 centroid;  // image-index coordinates
  double area = 0.0;
};

/// Threshold, 8-connected components, area filter, centroid weighted by
/// |intensity - threshold|. Sorted by (y, x).
std::vector<Blob> detect_blobs(const GrayImage& img, const BlobConfig& cfg);

/// Binary PGM (P5), maxval 65535, big-endian samples.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
/// Accepts maxval 65535 (16-bit) or <= 255 (8-bit). Throws ParseError.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

/// 8-bit grayscale PNG of clamp(v, 0, 1) * 255 rounded.
std::vector<std::uint8_t> encode_png(const GrayImage& img);

}  // namespace fluororeg

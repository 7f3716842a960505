#include "fluororeg/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "fluororeg/error.hpp"
#include "fluororeg/fileio.hpp"
#include "fluororeg/simd/kernels.hpp"

namespace fluororeg {

GrayImage::GrayImage(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) fail(ErrorKind::InvalidParams, "image dimensions must be non-negative");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0 || pixels_.size() != static_cast<std::size_t>(width) * height) {
    fail(ErrorKind::DimensionMismatch, "pixel buffer does not match image dimensions");
  }
}

namespace {

bool is_constant(std::span<const double> px) {
  if (px.empty()) return true;
  const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  return *lo == *hi;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

double ncc(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    fail(ErrorKind::DimensionMismatch, "NCC inputs differ in size");
  }
  if (a.empty()) fail(ErrorKind::DimensionMismatch, "NCC needs at least one pixel");
  if (is_constant(a.pixels()) || is_constant(b.pixels())) fail(ErrorKind::ConstantImage, "NCC input has zero variance");
  const auto& k = simd::active_kernels();
  const auto n = a.size();
  const double ma = k.sum(a.pixels().data(), n) / static_cast<double>(n);
  const double mb = k.sum(b.pixels().data(), n) / static_cast<double>(n);
  const simd::Moments m = k.centered_moments(a.pixels().data(), b.pixels().data(), n, ma, mb);
  if (!(m.saa > 0.0) || !(m.sbb > 0.0)) fail(ErrorKind::ConstantImage, "NCC input has zero variance");
  return clamp_unit(m.sab / std::sqrt(m.saa * m.sbb));
}

NccReference make_ncc_reference(const GrayImage& image) {
  if (image.empty()) fail(ErrorKind::DimensionMismatch, "NCC reference is empty");
  if (is_constant(image.pixels())) fail(ErrorKind::ConstantImage, "NCC reference has zero variance");
  const auto& k = simd::active_kernels();
  NccReference ref;
  ref.image = &image;
  ref.mean = k.sum(image.pixels().data(), image.size()) / static_cast<double>(image.size());
  ref.centered_ss = k.centered_moments(image.pixels().data(), image.pixels().data(), image.size(), ref.mean, ref.mean).saa;
  return ref;
}

double ncc_patch(const NccReference& reference, const GrayImage& patch, int x0, int y0) {
  const GrayImage& b = *reference.image;
  if (x0 < 0 || y0 < 0 || x0 + patch.width() > b.width() || y0 + patch.height() > b.height()) {
    fail(ErrorKind::DimensionMismatch, "patch exceeds the reference image");
  }
  const double total = static_cast<double>(b.size());
  const double inside = static_cast<double>(patch.size());
  if (is_constant(patch.pixels()) && (patch.empty() || patch.pixels()[0] == 0.0 || inside == total)) {
    fail(ErrorKind::ConstantImage, "rendered image has zero variance");
  }
  const auto& k = simd::active_kernels();
  const double ma = k.sum(patch.pixels().data(), patch.size()) / total;
  simd::Moments roi;
  double sum_b = 0.0;
  for (int y = 0; y < patch.height(); ++y) {
    const double* brow = b.row(y0 + y) + x0;
    const simd::Moments m = k.centered_moments(patch.row(y), brow, static_cast<std::size_t>(patch.width()), ma, reference.mean);
    roi.sab += m.sab;
    roi.saa += m.saa;
    sum_b += k.sum(brow, static_cast<std::size_t>(patch.width()));
  }
  // Pixels outside the patch are zero: each contributes ma^2 to saa and
  // -ma * (b - mean_b) to sab; the latter sums to ma * sum_roi(b - mean_b).
  const double saa = roi.saa + (total - inside) * ma * ma;
  const double sab = roi.sab + ma * (sum_b - inside * reference.mean);
  if (!(saa > 0.0)) fail(ErrorKind::ConstantImage, "rendered image has zero variance");
  return clamp_unit(sab / std::sqrt(saa * reference.centered_ss));
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma >= 0.0)) fail(ErrorKind::InvalidParams, "blur sigma must be non-negative");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += w[i + radius];
  }
  for (double& x : w) x /= total;
  return w;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma, BlurBorders borders) {
  if (!(sigma >= 0.0)) fail(ErrorKind::InvalidParams, "blur sigma must be non-negative");
  if (sigma == 0.0 || img.empty()) return img;
  const std::vector<double> w = gaussian_taps(sigma);
  const int radius = static_cast<int>(w.size() / 2);
  const int width = img.width(), height = img.height();
  const auto& k = simd::active_kernels();

  GrayImage tmp(width, height);
  std::vector<double> padded(static_cast<std::size_t>(width) + 2 * radius);
  for (int y = 0; y < height; ++y) {
    const double* src = img.row(y);
    for (int i = 0; i < radius; ++i) {
      padded[i] = borders.left ? src[0] : 0.0;
      padded[radius + width + i] = borders.right ? src[width - 1] : 0.0;
    }
    std::memcpy(padded.data() + radius, src, sizeof(double) * width);
    k.convolve_row(padded.data(), tmp.row(y), static_cast<std::size_t>(width), w.data(), w.size());
  }

  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    double* dst = out.row(y);
    for (int t = 0; t < static_cast<int>(w.size()); ++t) {
      int sy = y + t - radius;
      if (sy < 0) {
        if (!borders.top) continue;
        sy = 0;
      } else if (sy >= height) {
        if (!borders.bottom) continue;
        sy = height - 1;
      }
      k.axpy(dst, tmp.row(sy), w[t], static_cast<std::size_t>(width));
    }
  }
  return out;
}

double bilinear_sample(const GrayImage& img, double x, double y) {
  if (img.empty()) return 0.0;
  if (!(x >= 0.0 && y >= 0.0 && x <= img.width() - 1 && y <= img.height() - 1)) return 0.0;
  const int x0 = std::min(static_cast<int>(x), img.width() - 1);
  const int y0 = std::min(static_cast<int>(y), img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  if (fx == 0.0 && fy == 0.0) return img.at(x0, y0);
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

std::vector<Blob> detect_blobs(const GrayImage& img, const BlobConfig& cfg) {
  const int width = img.width(), height = img.height();
  auto on = [&](int x, int y) {
    const double v = img.at(x, y);
    return cfg.polarity == Polarity::Bright ? v > cfg.threshold : v < cfg.threshold;
  };
  std::vector<std::uint8_t> visited(img.size(), 0);
  std::vector<int> stack;
  std::vector<Blob> blobs;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * width + x;
      if (visited[idx] || !on(x, y)) continue;
      visited[idx] = 1;
      stack.assign(1, static_cast<int>(idx));
      double area = 0.0, sw = 0.0, sx = 0.0, sy = 0.0;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % width, py = p / width;
        const double wgt = std::abs(img.at(px, py) - cfg.threshold);
        area += 1.0;
        sw += wgt;
        sx += wgt * px;
        sy += wgt * py;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx, ny = py + dy;
            if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * width + nx;
            if (visited[nidx] || !on(nx, ny)) continue;
            visited[nidx] = 1;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
      if (area < cfg.min_area || area > cfg.max_area || !(sw > 0.0)) continue;
      blobs.push_back({Vec2(sx / sw, sy / sw), area});
    }
  }
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.centroid.y() != b.centroid.y()) return a.centroid.y() < b.centroid.y();
    return a.centroid.x() < b.centroid.x();
  });
  return blobs;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + 2 * img.size());
  for (double v : img.pixels()) {
    const double c = std::clamp(v, 0.0, 1.0);
    const auto s = static_cast<std::uint16_t>(std::floor(c * 65535.0 + 0.5));
    out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xFF));
  }
  return out;
}

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    long long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1LL << 31)) throw ParseError(std::string("PGM ") + what + " too large", static_cast<long long>(start), -1);
      ++pos;
    }
    if (pos == start) throw ParseError(std::string("PGM header is missing ") + what, static_cast<long long>(pos), -1);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("not a binary PGM (P5)", 0, -1);
  pos = 2;
  const long long width = read_int("width");
  const long long height = read_int("height");
  const long long maxval = read_int("maxval");
  if (maxval <= 0 || maxval > 65535) throw ParseError("PGM maxval out of range", static_cast<long long>(pos), -1);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ParseError("PGM header not terminated", static_cast<long long>(pos), -1);
  ++pos;
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count * bpp) throw ParseError("PGM pixel data truncated", static_cast<long long>(bytes.size()), -1);
  std::vector<double> px(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned s = bpp == 2 ? (static_cast<unsigned>(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    px[i] = static_cast<double>(s) / static_cast<double>(maxval);
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(px));
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) { write_file_atomic(path, encode_pgm(img)); }

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_pgm(bytes);
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_noop_flush(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail(ErrorKind::IoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::IoError, "png_create_info_struct failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::IoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_noop_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    const double* src = img.row(y);
    for (int x = 0; x < img.width(); ++x) {
      row[x] = static_cast<std::uint8_t>(std::floor(std::clamp(src[x], 0.0, 1.0) * 255.0 + 0.5));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace fluororeg

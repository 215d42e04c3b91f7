#include "faps/image.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace faps {

namespace {

std::atomic<std::uint64_t> g_warp_calls{0};

double tap(const ImageBuffer& img, int x, int y, int c) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return 0.0;
  return img.at(x, y, c);
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw std::invalid_argument("image channels must be 1 or 3");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

ImageBuffer warp_affine(const ImageBuffer& img, const SimilarityTransform& t, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0)
    throw std::invalid_argument("warp_affine: output size must be positive");
  g_warp_calls.fetch_add(1, std::memory_order_relaxed);

  const SimilarityTransform inv = t.inverse();
  ImageBuffer out(out_w, out_h, img.channels());
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double sx = inv.a * x - inv.b * y + inv.tx;
      const double sy = inv.b * x + inv.a * y + inv.ty;
      const double xf = std::floor(sx);
      const double yf = std::floor(sy);
      const int x0 = static_cast<int>(xf);
      const int y0 = static_cast<int>(yf);
      const double fx = sx - xf;
      const double fy = sy - yf;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = (1.0 - fx) * (1.0 - fy) * tap(img, x0, y0, c) +
                          fx * (1.0 - fy) * tap(img, x0 + 1, y0, c) +
                          (1.0 - fx) * fy * tap(img, x0, y0 + 1, c) +
                          fx * fy * tap(img, x0 + 1, y0 + 1, c);
      }
    }
  }
  return out;
}

ImageBuffer crop_resize(const ImageBuffer& img, const CropBox& box, int out_size) {
  if (out_size <= 0) throw std::invalid_argument("crop_resize: output size must be positive");
  if (box.side <= 0.0) throw std::invalid_argument("crop_resize: box side must be positive");
  if (box.left < 0.0 || box.top < 0.0 || box.left + box.side > img.width() ||
      box.top + box.side > img.height())
    throw std::invalid_argument("crop_resize: box out of image bounds");
  const double k = out_size / box.side;
  return warp_affine(img, {k, 0.0, -box.left * k, -box.top * k}, out_size, out_size);
}

ImageBuffer align_direct(const ImageBuffer& img, const LandmarkSet& landmarks,
                         const AlignmentPolicy& p, const BaseTemplate& base) {
  const SimilarityTransform t = estimate_similarity(landmarks, derive_template_landmarks(p, base));
  return warp_affine(img, t, base.output_size, base.output_size);
}

ImageBuffer warp_to_canvas(const ImageBuffer& img, const LandmarkSet& landmarks,
                           const BaseTemplate& base) {
  const SimilarityTransform t0 = estimate_similarity(landmarks, base.landmarks);
  return warp_affine(img, t0, base.canvas, base.canvas);
}

ImageBuffer crop_policy(const ImageBuffer& canvas_img, const AlignmentPolicy& p,
                        const BaseTemplate& base) {
  if (canvas_img.width() != base.canvas || canvas_img.height() != base.canvas)
    throw std::invalid_argument("crop_policy: image is not the base canvas");
  return crop_resize(canvas_img, policy_to_box(p, base.canvas), base.output_size);
}

ImageBuffer align_via_canvas(const ImageBuffer& img, const LandmarkSet& landmarks,
                             const AlignmentPolicy& p, const BaseTemplate& base) {
  return crop_policy(warp_to_canvas(img, landmarks, base), p, base);
}

std::uint64_t warp_call_count() { return g_warp_calls.load(std::memory_order_relaxed); }
void reset_warp_call_count() { g_warp_calls.store(0, std::memory_order_relaxed); }

namespace {

// Next header token, skipping whitespace and '#' comment lines.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  while (ch != EOF && !std::isspace(ch) && ch != '#') {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (ch == '#') in.unget();
  if (tok.empty()) throw std::runtime_error("pnm: truncated header");
  return tok;
}

int pnm_int(std::istream& in, const char* what) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("pnm: malformed ") + what + " field '" + tok + "'");
  }
}

}  // namespace

ImageBuffer read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pnm: cannot open " + path.string());

  const std::string magic = pnm_token(in);
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else throw std::runtime_error("pnm: unsupported magic '" + magic + "' in " + path.string());

  const int width = pnm_int(in, "width");
  const int height = pnm_int(in, "height");
  const int maxval = pnm_int(in, "maxval");
  if (width <= 0 || height <= 0) throw std::runtime_error("pnm: non-positive dimensions");
  if (maxval != 255) throw std::runtime_error("pnm: unsupported maxval " + std::to_string(maxval));
  // The single whitespace byte after maxval was already consumed by the
  // token reader; binary payload starts here.

  ImageBuffer img(width, height, channels);
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count)
    throw std::runtime_error("pnm: truncated pixel payload in " + path.string());
  for (std::size_t i = 0; i < count; ++i) img.data()[i] = static_cast<double>(raw[i]);
  return img;
}

void write_pnm(const ImageBuffer& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pnm: cannot open " + path.string() + " for writing");
  out << (img.channels() == 1 ? "P5" : "P6") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.data().size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    // round half away from zero, clamp to 8 bits
    const long long q = std::llround(img.data()[i]);
    raw[i] = static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pnm: write failed for " + path.string());
}

}  // namespace faps

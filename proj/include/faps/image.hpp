#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "faps/affine.hpp"
#include "faps/geometry.hpp"

namespace faps {

/// Row-major intensity buffer, 1 (gray) or 3 (RGB) channels. Values are real
/// doubles internally; quantization to 8 bits happens only at PNM I/O.
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_;
  int height_;
  int channels_;
  std::vector<double> data_;
};

/// Inverse-mapping warp: each output pixel center (integer coordinates) is
/// pulled through t^-1 and sampled bilinearly; samples outside the source
/// fill with 0. Throws on a non-positive output size.
ImageBuffer warp_affine(const ImageBuffer& img, const SimilarityTransform& t, int out_w, int out_h);

/// Crop + resize in a single resampling pass (one warp_affine with scale
/// out_size/box.side). Throws if the box leaves the image.
ImageBuffer crop_resize(const ImageBuffer& img, const CropBox& box, int out_size);

/// One-warp path: solve directly to policy p's template and resample once.
ImageBuffer align_direct(const ImageBuffer& img, const LandmarkSet& landmarks,
                         const AlignmentPolicy& p, const BaseTemplate& base);

/// Production path pieces: warp once onto the base canvas, then serve any
/// number of policies by cropping that canvas.
ImageBuffer warp_to_canvas(const ImageBuffer& img, const LandmarkSet& landmarks,
                           const BaseTemplate& base);
ImageBuffer crop_policy(const ImageBuffer& canvas_img, const AlignmentPolicy& p,
                        const BaseTemplate& base);

/// warp_to_canvas + crop_policy in one call.
ImageBuffer align_via_canvas(const ImageBuffer& img, const LandmarkSet& landmarks,
                             const AlignmentPolicy& p, const BaseTemplate& base);

// Test hook: process-wide count of warp_affine invocations.
std::uint64_t warp_call_count();
void reset_warp_call_count();

/// Binary PNM: P5 (gray) and P6 (RGB), maxval 255 only. Header comments are
/// tolerated on read. Writing quantizes round-half-away-from-zero and clamps
/// to [0, 255]; integral buffers round-trip bit-exactly.
ImageBuffer read_pnm(const std::filesystem::path& path);
void write_pnm(const ImageBuffer& img, const std::filesystem::path& path);

}  // namespace faps

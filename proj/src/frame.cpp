#include "vqp/frame.hpp"

#include <cmath>
#include <stdexcept>

namespace vqp {

void validate_frame(const Frame& f) {
  if (f.width < kMinFrameDim || f.height < kMinFrameDim) {
    throw std::invalid_argument("frame dimensions must be at least " +
                                std::to_string(kMinFrameDim) + "x" +
                                std::to_string(kMinFrameDim) + ", got " +
                                std::to_string(f.width) + "x" + std::to_string(f.height));
  }
  if (f.luma.size() != static_cast<size_t>(f.width) * f.height) {
    throw std::invalid_argument("frame buffer size does not match geometry");
  }
  for (double v : f.luma) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("frame sample outside [0,1] or non-finite");
    }
  }
}

void validate_clip(const Clip& c) {
  if (c.frames.size() < 2) {
    throw std::invalid_argument("clip must hold at least 2 frames");
  }
  if (c.distortion_level < 0 || c.distortion_level > 5) {
    throw std::invalid_argument("distortion level must be in 0..5");
  }
  const Frame& first = c.frames.front();
  for (const Frame& f : c.frames) {
    validate_frame(f);
    if (!same_geometry(first, f)) {
      throw std::invalid_argument("all frames in a clip must share dimensions");
    }
  }
}

bool same_geometry(const Frame& a, const Frame& b) {
  return a.width == b.width && a.height == b.height;
}

}  // namespace vqp

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vqp {

// Single luma raster, row-major, samples in [0,1].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> luma;

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), luma(static_cast<size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return luma[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return luma[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return luma.size(); }
};

// A clip is an ordered run of frames from one content at one ladder level.
// Level 0 marks the pristine reference.
struct Clip {
  int content_id = 0;
  int distortion_level = 0;
  std::vector<Frame> frames;
  std::optional<double> mos_surrogate;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
};

constexpr int kMinFrameDim = 16;

// Throws std::invalid_argument with a diagnostic on any violated invariant.
void validate_frame(const Frame& f);
void validate_clip(const Clip& c);

// True when both frames have the same geometry.
bool same_geometry(const Frame& a, const Frame& b);

}  // namespace vqp

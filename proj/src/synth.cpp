#include "vqp/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "vqp/rng.hpp"
#include "vqp/util.hpp"

namespace vqp::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Below this step quantization is a no-op; keeps the step->0 limit exact.
constexpr double kQuantIdentityStep = 1e-9;

struct Sprite {
  double cx, cy;      // initial center
  double vx, vy;      // pixels per frame
  double half_w, half_h;
  double value;
  bool disc;
};

}  // namespace

const LadderLevel& LadderSpec::level(int lv) const {
  if (lv < 1 || lv > 5) {
    throw std::invalid_argument("ladder level must be in 1..5, got " + std::to_string(lv));
  }
  return levels[static_cast<size_t>(lv - 1)];
}

LadderSpec LadderSpec::default_spec() {
  LadderSpec s;
  s.levels = {{{0.5, 1.0 / 64.0, 0.002},
               {0.8, 1.0 / 48.0, 0.004},
               {1.2, 1.0 / 32.0, 0.008},
               {1.8, 1.0 / 24.0, 0.012},
               {2.5, 1.0 / 16.0, 0.020}}};
  return s;
}

GeneratorParams GeneratorParams::source_domain() { return GeneratorParams{}; }

GeneratorParams GeneratorParams::target_domain() {
  GeneratorParams p;
  p.sprite_count = 6;
  p.hud_height_frac = 0.16;
  p.hud_high = 1.0;
  p.hud_low = 0.0;
  p.texture_amp = 0.18;
  LadderSpec harsher = LadderSpec::default_spec();
  for (auto& lv : harsher.levels) {
    lv.blur_sigma *= 1.3;
    lv.noise_sigma *= 1.5;
  }
  p.ladder = harsher;
  return p;
}

std::vector<Clip> generate_contents(uint64_t seed, int n_contents, int frames_per_clip,
                                    int width, int height, const GeneratorParams& params,
                                    int first_content_id) {
  if (n_contents < 1) throw std::invalid_argument("n_contents must be >= 1");
  if (frames_per_clip < 2) throw std::invalid_argument("frames_per_clip must be >= 2");
  if (width < kMinFrameDim || height < kMinFrameDim) {
    throw std::invalid_argument("clip dimensions must be at least 16x16, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }

  std::vector<Clip> clips(static_cast<size_t>(n_contents));
  for (int c = 0; c < n_contents; ++c) {
    const int content_id = first_content_id + c;
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(content_id), Rng::tag("content"));

    // Per-content layout parameters.
    const double grad_angle = rng.uniform(0.0, 2.0 * kPi);
    const double gx = std::cos(grad_angle), gy = std::sin(grad_angle);
    struct Wave {
      double u, v, phase, speed, amp;
    };
    std::array<Wave, 2> waves;
    for (auto& w : waves) {
      w.u = rng.uniform(2.0, 6.0);
      w.v = rng.uniform(2.0, 6.0);
      w.phase = rng.uniform(0.0, 2.0 * kPi);
      w.speed = rng.uniform(0.25, 0.8);
      w.amp = params.texture_amp * rng.uniform(0.6, 1.0);
    }

    std::vector<Sprite> sprites(static_cast<size_t>(params.sprite_count));
    for (auto& s : sprites) {
      s.cx = rng.uniform(0.0, width);
      s.cy = rng.uniform(0.0, height);
      s.vx = rng.uniform(-3.0, 3.0);
      s.vy = rng.uniform(-3.0, 3.0);
      s.half_w = rng.uniform(3.0, 7.0);
      s.half_h = rng.uniform(3.0, 7.0);
      s.value = rng.uniform01() < 0.5 ? rng.uniform(0.02, 0.15) : rng.uniform(0.85, 0.98);
      s.disc = rng.uniform01() < 0.5;
    }

    const int hud_rows = std::max(2, static_cast<int>(params.hud_height_frac * height));

    Clip& clip = clips[static_cast<size_t>(c)];
    clip.content_id = content_id;
    clip.distortion_level = 0;
    clip.frames.reserve(static_cast<size_t>(frames_per_clip));

    for (int f = 0; f < frames_per_clip; ++f) {
      Frame frame(width, height);
      for (int y = 0; y < height; ++y) {
        const double ny = static_cast<double>(y) / height;
        for (int x = 0; x < width; ++x) {
          const double nx = static_cast<double>(x) / width;
          double v = 0.45 + 0.25 * (gx * (nx - 0.5) + gy * (ny - 0.5));
          for (const auto& w : waves) {
            v += w.amp * std::sin(2.0 * kPi * (w.u * nx + w.v * ny) + w.phase + w.speed * f);
          }
          frame.at(x, y) = v;
        }
      }
      // Hard-edged sprites, positions wrap around the raster.
      for (const auto& s : sprites) {
        double cx = std::fmod(s.cx + s.vx * f, static_cast<double>(width));
        double cy = std::fmod(s.cy + s.vy * f, static_cast<double>(height));
        if (cx < 0) cx += width;
        if (cy < 0) cy += height;
        const int x0 = std::max(0, static_cast<int>(cx - s.half_w));
        const int x1 = std::min(width - 1, static_cast<int>(cx + s.half_w));
        const int y0 = std::max(0, static_cast<int>(cy - s.half_h));
        const int y1 = std::min(height - 1, static_cast<int>(cy + s.half_h));
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            if (s.disc) {
              const double dx = (x - cx) / s.half_w, dy = (y - cy) / s.half_h;
              if (dx * dx + dy * dy > 1.0) continue;
            }
            frame.at(x, y) = s.value;
          }
        }
      }
      // Static high-contrast overlay band (HUD surrogate).
      for (int y = 0; y < hud_rows; ++y) {
        for (int x = 0; x < width; ++x) {
          frame.at(x, y) = (((x / 4) + (y / 2)) % 2 == 0) ? params.hud_high : params.hud_low;
        }
      }
      for (double& v : frame.luma) v = clamp01(v);
      clip.frames.push_back(std::move(frame));
    }
  }
  return clips;
}

Frame gaussian_blur(const Frame& f, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("blur sigma must be >= 0");
  if (sigma == 0.0) return f;

  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const int W = f.width, H = f.height;
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };

  // Separable, replicated borders.
  Frame tmp(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<size_t>(i + radius)] * f.at(clampi(x + i, 0, W - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  Frame out(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<size_t>(i + radius)] * tmp.at(x, clampi(y + i, 0, H - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

Frame quantize(const Frame& f, double step) {
  if (step <= 0.0 || step > 1.0) throw std::invalid_argument("quant step must be in (0,1]");
  if (step <= kQuantIdentityStep) return f;
  Frame out = f;
  for (double& v : out.luma) v = std::round(v / step) * step;
  return out;
}

Clip distort(const Clip& reference, int level, const LadderSpec& ladder, uint64_t seed) {
  if (reference.distortion_level != 0) {
    throw std::invalid_argument("distort expects a pristine reference clip (level 0)");
  }
  const LadderLevel& lv = ladder.level(level);  // rejects level out of 1..5

  Clip out;
  out.content_id = reference.content_id;
  out.distortion_level = level;
  out.frames.reserve(reference.frames.size());
  for (size_t fi = 0; fi < reference.frames.size(); ++fi) {
    Frame frame = gaussian_blur(reference.frames[fi], lv.blur_sigma);
    frame = quantize(frame, lv.quant_step);
    if (lv.noise_sigma > 0.0) {
      Rng rng = Rng::stream(seed, static_cast<uint64_t>(reference.content_id),
                            static_cast<uint64_t>(level), static_cast<uint64_t>(fi),
                            Rng::tag("noise"));
      for (double& v : frame.luma) v += rng.normal(0.0, lv.noise_sigma);
    }
    for (double& v : frame.luma) v = clamp01(v);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace vqp::synth

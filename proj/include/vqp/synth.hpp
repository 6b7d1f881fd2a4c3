#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vqp/frame.hpp"

namespace vqp::synth {

struct LadderLevel {
  double blur_sigma = 0.0;   // Gaussian blur stddev, pixels
  double quant_step = 1e-12; // uniform quantization step in (0,1]
  double noise_sigma = 0.0;  // additive Gaussian noise stddev
};

// Five-level parametric distortion ladder; severity grows with the level.
struct LadderSpec {
  std::array<LadderLevel, 5> levels;

  const LadderLevel& level(int lv) const;  // lv in 1..5
  static LadderSpec default_spec();
};

// Content synthesis knobs. Two presets model a source domain and a shifted
// target domain (denser sprites, stronger overlay band, harsher ladder).
struct GeneratorParams {
  int sprite_count = 3;
  double hud_height_frac = 0.08;
  double hud_high = 0.95;
  double hud_low = 0.10;
  double texture_amp = 0.12;
  LadderSpec ladder = LadderSpec::default_spec();

  static GeneratorParams source_domain();
  static GeneratorParams target_domain();
};

// Pristine clips: moving sinusoid texture over a smooth gradient, hard-edged
// moving sprites, and a static high-contrast overlay band. Deterministic in
// (seed, content index); content ids are first_content_id..+n_contents-1.
std::vector<Clip> generate_contents(uint64_t seed, int n_contents, int frames_per_clip,
                                    int width, int height,
                                    const GeneratorParams& params = GeneratorParams::source_domain(),
                                    int first_content_id = 0);

// Blur -> quantize -> noise -> clamp, per frame. The noise stream is derived
// from (seed, content_id, level, frame), so clips can be distorted in any
// order or in parallel without changing results.
Clip distort(const Clip& reference, int level, const LadderSpec& ladder, uint64_t seed);

// Building blocks, exposed for tests.
Frame gaussian_blur(const Frame& f, double sigma);
Frame quantize(const Frame& f, double step);

}  // namespace vqp::synth

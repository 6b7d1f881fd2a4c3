#pragma once

#include <string>
#include <vector>

#include "vqp/frame.hpp"

namespace vqp::fr {

// Proxy tasks used as supervision targets. All of them land in a regressible
// range: ssim/ms_ssim near [0,1], psnr_norm in [0,1].
enum class Task { Ssim, MsSsim, PsnrNorm };

const char* task_name(Task t);
Task parse_task(const std::string& name);
std::vector<Task> parse_task_list(const std::string& csv);  // "ssim,ms_ssim,..."

constexpr double kPsnrCapDb = 100.0;
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

// Peak-signal-to-noise ratio in dB with peak 1.0, capped at cap_db so that
// identical frames stay finite.
double psnr(const Frame& ref, const Frame& dist, double cap_db = kPsnrCapDb);

// psnr mapped linearly onto [0,1]: clamp(psnr/100, 0, 1).
double psnr_norm(const Frame& ref, const Frame& dist);

// Mean of the local SSIM map over the valid (non-padded) region, 11x11
// Gaussian window with sigma 1.5, K1=0.01, K2=0.03, dynamic range 1.
double ssim(const Frame& ref, const Frame& dist);

// Multi-scale SSIM, up to 5 scales with the standard exponents; frames too
// small for 5 scales use the largest feasible count with renormalized
// exponents. Downsampling is 2x2 mean pooling.
double ms_ssim(const Frame& ref, const Frame& dist);

// Number of scales ms_ssim will use for this geometry (0 if infeasible).
int ms_ssim_scale_count(int width, int height);

extern const double kMsSsimExponents[5];

// Per-frame and clip-mean targets for one (reference, distorted) pair.
struct ProxyScores {
  std::vector<std::string> task_names;
  std::vector<std::vector<double>> per_frame;  // [frame][task]
  std::vector<double> clip_mean;               // [task]
  int ms_ssim_scales = 0;                      // 0 when ms_ssim not requested
};

ProxyScores compute_proxy_targets(const Clip& ref_clip, const Clip& dist_clip,
                                  const std::vector<Task>& tasks);

// Harness convention: clip-mean MS-SSIM rescaled from [0,1] onto [1,5].
double mos_surrogate_from_ms_ssim(double clip_mean_ms_ssim);

}  // namespace vqp::fr

#include "vqp/fr_metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "vqp/util.hpp"

namespace vqp::fr {

const double kMsSsimExponents[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

const char* task_name(Task t) {
  switch (t) {
    case Task::Ssim: return "ssim";
    case Task::MsSsim: return "ms_ssim";
    case Task::PsnrNorm: return "psnr_norm";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "ssim") return Task::Ssim;
  if (name == "ms_ssim") return Task::MsSsim;
  if (name == "psnr_norm") return Task::PsnrNorm;
  throw std::invalid_argument("unknown task '" + name + "' (expected ssim, ms_ssim, psnr_norm)");
}

std::vector<Task> parse_task_list(const std::string& csv) {
  std::vector<Task> tasks;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) tasks.push_back(parse_task(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) tasks.push_back(parse_task(cur));
  if (tasks.empty()) throw std::invalid_argument("task list is empty");
  return tasks;
}

namespace {

void require_same_geometry(const Frame& a, const Frame& b) {
  if (!same_geometry(a, b)) {
    throw std::invalid_argument("frame dimension mismatch: " + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) +
                                "x" + std::to_string(b.height));
  }
}

std::vector<double> ssim_window_1d() {
  std::vector<double> w(kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    w[static_cast<size_t>(i + r)] = std::exp(-0.5 * (i * i) / (kSsimSigma * kSsimSigma));
    sum += w[static_cast<size_t>(i + r)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable Gaussian filtering of the five product planes, valid region only.
// Returns the means of the local luminance and contrast*structure terms plus
// the mean full SSIM, which is what both ssim() and ms_ssim() consume.
struct SsimTerms {
  double mean_ssim = 0.0;
  double mean_cs = 0.0;
};

SsimTerms ssim_terms(const Frame& x, const Frame& y) {
  const int W = x.width, H = x.height;
  const int r = kSsimWindow / 2;
  if (W < kSsimWindow || H < kSsimWindow) {
    throw std::invalid_argument("frame smaller than the 11x11 SSIM window");
  }
  static const std::vector<double> win = ssim_window_1d();

  const double C1 = (kSsimK1 * kSsimK1);  // L = 1
  const double C2 = (kSsimK2 * kSsimK2);

  const int Wv = W - 2 * r;  // horizontal-valid width
  // Horizontal pass over the 5 planes.
  std::vector<double> hx(static_cast<size_t>(Wv) * H), hy(hx.size()), hxx(hx.size()),
      hyy(hx.size()), hxy(hx.size());
  for (int row = 0; row < H; ++row) {
    const double* px = &x.luma[static_cast<size_t>(row) * W];
    const double* py = &y.luma[static_cast<size_t>(row) * W];
    for (int col = 0; col < Wv; ++col) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < kSsimWindow; ++i) {
        const double w = win[static_cast<size_t>(i)];
        const double a = px[col + i], b = py[col + i];
        sx += w * a;
        sy += w * b;
        sxx += w * a * a;
        syy += w * b * b;
        sxy += w * a * b;
      }
      const size_t o = static_cast<size_t>(row) * Wv + col;
      hx[o] = sx;
      hy[o] = sy;
      hxx[o] = sxx;
      hyy[o] = syy;
      hxy[o] = sxy;
    }
  }

  // Vertical pass and SSIM accumulation over the valid map.
  const int Hv = H - 2 * r;
  double acc_ssim = 0.0, acc_cs = 0.0;
  for (int row = 0; row < Hv; ++row) {
    for (int col = 0; col < Wv; ++col) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int i = 0; i < kSsimWindow; ++i) {
        const double w = win[static_cast<size_t>(i)];
        const size_t o = static_cast<size_t>(row + i) * Wv + col;
        mx += w * hx[o];
        my += w * hy[o];
        mxx += w * hxx[o];
        myy += w * hyy[o];
        mxy += w * hxy[o];
      }
      const double vx = mxx - mx * mx;
      const double vy = myy - my * my;
      const double cov = mxy - mx * my;
      const double lum = (2.0 * mx * my + C1) / (mx * mx + my * my + C1);
      const double cs = (2.0 * cov + C2) / (vx + vy + C2);
      acc_ssim += lum * cs;
      acc_cs += cs;
    }
  }
  const double n = static_cast<double>(Wv) * Hv;
  return {acc_ssim / n, acc_cs / n};
}

Frame downsample2x2(const Frame& f) {
  Frame out(f.width / 2, f.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(x, y) = 0.25 * (f.at(2 * x, 2 * y) + f.at(2 * x + 1, 2 * y) +
                             f.at(2 * x, 2 * y + 1) + f.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

}  // namespace

double psnr(const Frame& ref, const Frame& dist, double cap_db) {
  require_same_geometry(ref, dist);
  double se = 0.0;
  for (size_t i = 0; i < ref.luma.size(); ++i) {
    const double d = ref.luma[i] - dist.luma[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(ref.luma.size());
  if (mse <= 0.0) return cap_db;
  return std::min(cap_db, 10.0 * std::log10(1.0 / mse));
}

double psnr_norm(const Frame& ref, const Frame& dist) {
  return clamp01(psnr(ref, dist) / 100.0);
}

double ssim(const Frame& ref, const Frame& dist) {
  require_same_geometry(ref, dist);
  return ssim_terms(ref, dist).mean_ssim;
}

int ms_ssim_scale_count(int width, int height) {
  int scales = 0;
  int dim = std::min(width, height);
  while (scales < 5 && dim >= kSsimWindow) {
    ++scales;
    dim /= 2;
  }
  return scales;
}

double ms_ssim(const Frame& ref, const Frame& dist) {
  require_same_geometry(ref, dist);
  const int scales = ms_ssim_scale_count(ref.width, ref.height);
  if (scales < 2) {
    throw std::invalid_argument("frame too small for ms_ssim (needs at least 2 dyadic scales)");
  }

  double wsum = 0.0;
  for (int j = 0; j < scales; ++j) wsum += kMsSsimExponents[j];

  Frame a = ref, b = dist;
  double result = 1.0;
  for (int j = 0; j < scales; ++j) {
    const double w = kMsSsimExponents[j] / wsum;
    const SsimTerms t = ssim_terms(a, b);
    // Anticorrelated windows can push the means negative; clamp before the
    // fractional exponent.
    const double base = (j == scales - 1) ? std::max(t.mean_ssim, 0.0) : std::max(t.mean_cs, 0.0);
    result *= std::pow(base, w);
    if (j + 1 < scales) {
      a = downsample2x2(a);
      b = downsample2x2(b);
    }
  }
  return result;
}

ProxyScores compute_proxy_targets(const Clip& ref_clip, const Clip& dist_clip,
                                  const std::vector<Task>& tasks) {
  if (tasks.empty()) throw std::invalid_argument("no tasks requested");
  if (ref_clip.content_id != dist_clip.content_id) {
    throw std::invalid_argument("clips have different content ids");
  }
  if (ref_clip.frames.size() != dist_clip.frames.size()) {
    throw std::invalid_argument("clips have different frame counts");
  }
  if (ref_clip.frames.empty()) throw std::invalid_argument("clips are empty");

  ProxyScores out;
  for (Task t : tasks) out.task_names.emplace_back(task_name(t));
  for (Task t : tasks) {
    if (t == Task::MsSsim) {
      out.ms_ssim_scales = ms_ssim_scale_count(ref_clip.width(), ref_clip.height());
    }
  }

  const size_t n = ref_clip.frames.size();
  out.per_frame.resize(n);
  out.clip_mean.assign(tasks.size(), 0.0);
  for (size_t i = 0; i < n; ++i) {
    const Frame& rf = ref_clip.frames[i];
    const Frame& df = dist_clip.frames[i];
    require_same_geometry(rf, df);
    out.per_frame[i].resize(tasks.size());
    for (size_t t = 0; t < tasks.size(); ++t) {
      double v = 0.0;
      switch (tasks[t]) {
        case Task::Ssim: v = ssim(rf, df); break;
        case Task::MsSsim: v = ms_ssim(rf, df); break;
        case Task::PsnrNorm: v = psnr_norm(rf, df); break;
      }
      out.per_frame[i][t] = v;
      out.clip_mean[t] += v;
    }
  }
  for (double& m : out.clip_mean) m /= static_cast<double>(n);
  return out;
}

double mos_surrogate_from_ms_ssim(double clip_mean_ms_ssim) {
  return 1.0 + 4.0 * clamp01(clip_mean_ms_ssim);
}

}  // namespace vqp::fr

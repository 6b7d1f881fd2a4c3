#include "vqp/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vqp::corr {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

bool is_constant(const std::vector<double>& v) {
  for (double x : v)
    if (x != v.front()) return false;
  return true;
}

}  // namespace

std::vector<double> ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of ranks i+1..j+1
    for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

std::optional<double> srcc(const std::vector<double>& pred, const std::vector<double>& labels) {
  if (pred.size() != labels.size() || pred.size() < 3) return std::nullopt;
  return pearson(ranks(pred), ranks(labels));
}

std::optional<double> krcc(const std::vector<double>& pred, const std::vector<double>& labels) {
  const size_t n = pred.size();
  if (labels.size() != n || n < 3) return std::nullopt;
  // tau-b: concordant minus discordant over the geometric mean of untied
  // pair counts. O(n^2) is fine at clip scale.
  long long conc = 0, disc = 0, tie_x = 0, tie_y = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dx = pred[i] - pred[j], dy = labels[i] - labels[j];
      if (dx == 0.0 && dy == 0.0) {
        ++tie_x;
        ++tie_y;
      } else if (dx == 0.0) {
        ++tie_x;
      } else if (dy == 0.0) {
        ++tie_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++conc;
      } else {
        ++disc;
      }
    }
  }
  long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
  double denom = std::sqrt(static_cast<double>(n0 - tie_x) * static_cast<double>(n0 - tie_y));
  if (denom <= 0.0) return std::nullopt;
  return std::clamp(static_cast<double>(conc - disc) / denom, -1.0, 1.0);
}

double logistic_apply(const std::array<double, 4>& beta, double s) {
  double x = beta[1] * (s - beta[2]);
  return beta[0] * (0.5 - 1.0 / (1.0 + std::exp(x))) + beta[3];
}

namespace {

double sse(const std::array<double, 4>& beta, const std::vector<double>& pred,
           const std::vector<double>& labels) {
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = logistic_apply(beta, pred[i]) - labels[i];
    s += d * d;
  }
  return s;
}

LogisticFit linear_fallback(const std::vector<double>& pred, const std::vector<double>& labels) {
  LogisticFit fit;
  fit.fallback_linear = true;
  double mp = mean_of(pred), ml = mean_of(labels);
  double spp = 0.0, spl = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    spl += (pred[i] - mp) * (labels[i] - ml);
  }
  double slope = spp > 0.0 ? spl / spp : 0.0;
  double icept = ml - slope * mp;
  fit.beta = {0.0, 0.0, 0.0, icept};  // not a logistic; recorded for provenance
  fit.mapped.resize(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) fit.mapped[i] = slope * pred[i] + icept;
  return fit;
}

}  // namespace

LogisticFit logistic_fit(const std::vector<double>& pred, const std::vector<double>& labels) {
  if (pred.size() != labels.size() || pred.size() < 5) {
    throw std::invalid_argument("logistic_fit needs at least 5 paired samples");
  }
  if (is_constant(labels)) {
    throw std::invalid_argument("logistic_fit: labels are constant");
  }
  const double pred_sd = stddev_of(pred);
  const double label_lo = *std::min_element(labels.begin(), labels.end());
  const double label_hi = *std::max_element(labels.begin(), labels.end());
  if (pred_sd == 0.0) {
    // Constant predictions carry no information; best constant map.
    LogisticFit fit;
    fit.beta = {0.0, 0.0, pred.front(), mean_of(labels)};
    fit.mapped.assign(pred.size(), mean_of(labels));
    return fit;
  }

  auto r = pearson(pred, labels);
  const double sign = (r && *r < 0.0) ? -1.0 : 1.0;
  // All init quantities are built from pred moments and label range, so an
  // affine change of pred reparameterizes the simplex without changing any
  // objective value along the search path.
  std::array<double, 4> b0 = {label_hi - label_lo, sign / pred_sd, mean_of(pred),
                              0.5 * (label_lo + label_hi)};
  std::array<double, 4> step = {0.25 * (label_hi - label_lo), 0.25 * std::abs(b0[1]),
                                0.5 * pred_sd, 0.25 * (label_hi - label_lo)};

  // Nelder-Mead with the textbook coefficients.
  constexpr int kMaxIter = 500;
  constexpr double kAlpha = 1.0, kGamma = 2.0, kRho = 0.5, kSigma = 0.5;
  std::array<std::array<double, 4>, 5> simplex;
  std::array<double, 5> fv;
  simplex[0] = b0;
  for (int i = 0; i < 4; ++i) {
    simplex[i + 1] = b0;
    simplex[i + 1][i] += step[i];
  }
  bool bad = false;
  for (int i = 0; i < 5; ++i) {
    fv[i] = sse(simplex[i], pred, labels);
    bad = bad || !std::isfinite(fv[i]);
  }
  if (bad) return linear_fallback(pred, labels);

  std::array<int, 5> order = {0, 1, 2, 3, 4};
  for (int iter = 0; iter < kMaxIter; ++iter) {
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    if (fv[order[4]] - fv[order[0]] <= 1e-12 * (1.0 + std::abs(fv[order[0]]))) break;

    std::array<double, 4> centroid = {0, 0, 0, 0};
    for (int k = 0; k < 4; ++k)
      for (int d = 0; d < 4; ++d) centroid[d] += simplex[order[k]][d] / 4.0;
    const int worst = order[4];

    auto blend = [&](double coef) {
      std::array<double, 4> p;
      for (int d = 0; d < 4; ++d) p[d] = centroid[d] + coef * (centroid[d] - simplex[worst][d]);
      return p;
    };

    auto refl = blend(kAlpha);
    double f_refl = sse(refl, pred, labels);
    if (!std::isfinite(f_refl)) return linear_fallback(pred, labels);
    if (f_refl < fv[order[0]]) {
      auto exp_p = blend(kGamma);
      double f_exp = sse(exp_p, pred, labels);
      if (std::isfinite(f_exp) && f_exp < f_refl) {
        simplex[worst] = exp_p;
        fv[worst] = f_exp;
      } else {
        simplex[worst] = refl;
        fv[worst] = f_refl;
      }
    } else if (f_refl < fv[order[3]]) {
      simplex[worst] = refl;
      fv[worst] = f_refl;
    } else {
      // Outside contraction when the reflection at least beat the worst
      // point, inside contraction otherwise; shrink if neither helps.
      bool outside = f_refl < fv[worst];
      auto contr = blend(outside ? kRho : -kRho);
      double f_contr = sse(contr, pred, labels);
      bool accept = std::isfinite(f_contr) &&
                    (outside ? f_contr <= f_refl : f_contr < fv[worst]);
      if (accept) {
        simplex[worst] = contr;
        fv[worst] = f_contr;
      } else {
        for (int k = 1; k < 5; ++k) {
          int i = order[k];
          for (int d = 0; d < 4; ++d) {
            simplex[i][d] = simplex[order[0]][d] + kSigma * (simplex[i][d] - simplex[order[0]][d]);
          }
          fv[i] = sse(simplex[i], pred, labels);
          if (!std::isfinite(fv[i])) return linear_fallback(pred, labels);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i < 5; ++i)
    if (fv[i] < fv[best]) best = i;
  LogisticFit fit;
  fit.beta = simplex[best];
  fit.mapped.resize(pred.size());
  bool finite = true;
  for (size_t i = 0; i < pred.size(); ++i) {
    fit.mapped[i] = logistic_apply(fit.beta, pred[i]);
    finite = finite && std::isfinite(fit.mapped[i]);
  }
  if (!finite) return linear_fallback(pred, labels);
  return fit;
}

PlccRmse plcc_rmse(const std::vector<double>& mapped, const std::vector<double>& labels) {
  if (mapped.size() != labels.size() || mapped.empty()) {
    throw std::invalid_argument("plcc_rmse: size mismatch");
  }
  PlccRmse out;
  out.plcc = pearson(mapped, labels);
  double s = 0.0;
  for (size_t i = 0; i < mapped.size(); ++i) {
    double d = mapped[i] - labels[i];
    s += d * d;
  }
  out.rmse = std::sqrt(s / static_cast<double>(mapped.size()));
  return out;
}

CorrelationReport evaluate_predictions(const std::vector<double>& pred,
                                       const std::vector<double>& labels) {
  if (pred.size() != labels.size()) {
    throw std::invalid_argument("evaluate_predictions: size mismatch");
  }
  CorrelationReport rep;
  rep.n = pred.size();
  if (rep.n >= 3) {
    rep.srcc = srcc(pred, labels);
    rep.krcc = krcc(pred, labels);
  }
  if (rep.n >= 5 && !is_constant(labels)) {
    LogisticFit fit = logistic_fit(pred, labels);
    rep.logistic_params = fit.beta;
    rep.logistic_fallback = fit.fallback_linear;
    PlccRmse pr = plcc_rmse(fit.mapped, labels);
    rep.plcc = pr.plcc;
    rep.rmse = pr.rmse;
  }
  return rep;
}

std::optional<double> median_defined(const std::vector<std::optional<double>>& values) {
  std::vector<double> defined;
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  if (defined.empty()) return std::nullopt;
  std::sort(defined.begin(), defined.end());
  size_t n = defined.size();
  if (n % 2 == 1) return defined[n / 2];
  return 0.5 * (defined[n / 2 - 1] + defined[n / 2]);
}

}  // namespace vqp::corr

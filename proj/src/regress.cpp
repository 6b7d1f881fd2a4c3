#include "vqp/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "vqp/correlation.hpp"
#include "vqp/rng.hpp"

namespace vqp::regress {

namespace {

void validate_matrix(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  if (x.size() < 2) throw std::invalid_argument("regression needs at least 2 samples");
  if (x.size() != y.size()) throw std::invalid_argument("feature/label count mismatch");
  const size_t d = x.front().size();
  if (d == 0) throw std::invalid_argument("empty feature vectors");
  for (const auto& row : x) {
    if (row.size() != d) throw std::invalid_argument("inconsistent feature dimension");
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  }
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite label");
}

// LL^T factorization + solve; a must be symmetric positive-definite.
std::vector<double> cholesky_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const size_t n = a.size();
  for (size_t j = 0; j < n; ++j) {
    double diag = a[j][j];
    for (size_t k = 0; k < j; ++k) diag -= a[j][k] * a[j][k];
    if (diag <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
    a[j][j] = std::sqrt(diag);
    for (size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (size_t i = 0; i < n; ++i) {  // L z = b
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a[i][k] * b[k];
    b[i] = s / a[i][i];
  }
  for (size_t i = n; i-- > 0;) {  // L^T w = z
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a[k][i] * b[k];
    b[i] = s / a[i][i];
  }
  return b;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& x) {
  const size_t n = x.size();
  const size_t d = x.front().size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (const auto& row : x)
    for (size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  for (size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
  for (size_t j = 0; j < d; ++j) {
    double v = 0.0;
    for (const auto& row : x) v += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
    double sd = std::sqrt(v / static_cast<double>(n));
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("standardizer dimension mismatch");
  std::vector<double> z(x.size());
  for (size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
  return z;
}

double RidgeModel::predict(const std::vector<double>& x) const {
  std::vector<double> z = stz.apply(x);
  double s = intercept;
  for (size_t j = 0; j < z.size(); ++j) s += weights[j] * z[j];
  return s;
}

RidgeModel ridge_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                     double lambda) {
  validate_matrix(x, y);
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
  const size_t n = x.size();
  const size_t d = x.front().size();

  RidgeModel m;
  m.lambda = lambda;
  m.stz = Standardizer::fit(x);
  double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  m.intercept = ymean;
  m.constant_labels = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });

  std::vector<std::vector<double>> z(n);
  for (size_t i = 0; i < n; ++i) z[i] = m.stz.apply(x[i]);

  std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) {
      b[j] += z[i][j] * (y[i] - ymean);
      for (size_t k = j; k < d; ++k) a[j][k] += z[i][j] * z[i][k];
    }
  }
  for (size_t j = 0; j < d; ++j) {
    a[j][j] += lambda;
    for (size_t k = 0; k < j; ++k) a[j][k] = a[k][j];
  }
  m.weights = cholesky_solve(std::move(a), std::move(b));
  return m;
}

double SvrModel::predict(const std::vector<double>& x) const {
  std::vector<double> z = stz.apply(x);
  double s = bias;
  for (size_t i = 0; i < support.size(); ++i) {
    s += dual_coef[i] * std::exp(-gamma * sq_dist(support[i], z));
  }
  return s;
}

SvrModel svr_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                 double C, double gamma, double epsilon, double tol, long long max_iter) {
  validate_matrix(x, y);
  if (!(C > 0.0) || !(gamma > 0.0) || epsilon < 0.0) {
    throw std::invalid_argument("svr needs C > 0, gamma > 0, epsilon >= 0");
  }
  const size_t n = x.size();

  SvrModel m;
  m.gamma = gamma;
  m.epsilon = epsilon;
  m.C = C;
  m.stz = Standardizer::fit(x);
  std::vector<std::vector<double>> z(n);
  for (size_t i = 0; i < n; ++i) z[i] = m.stz.apply(x[i]);

  std::vector<std::vector<double>> kmat(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    kmat[i][i] = 1.0;
    for (size_t j = i + 1; j < n; ++j) {
      double k = std::exp(-gamma * sq_dist(z[i], z[j]));
      kmat[i][j] = k;
      kmat[j][i] = k;
    }
  }

  // 2n box variables: v[t] = alpha_t for t < n (sign +1), alpha*_{t-n} for
  // t >= n (sign -1). grad = Qv + p with Q_tu = s_t s_u K, p = [eps - y;
  // eps + y]. Working pair = maximal KKT violation; stop at m - M <= tol.
  const size_t nn = 2 * n;
  auto sign_of = [n](size_t t) { return t < n ? 1.0 : -1.0; };
  auto base = [n](size_t t) { return t < n ? t : t - n; };
  std::vector<double> v(nn, 0.0), grad(nn);
  for (size_t t = 0; t < nn; ++t) grad[t] = epsilon - sign_of(t) * y[base(t)];

  double m_val = 0.0, big_m_val = 0.0;
  auto select_pair = [&](size_t& i_out, size_t& j_out) {
    double best_up = -std::numeric_limits<double>::infinity();
    double best_low = std::numeric_limits<double>::infinity();
    size_t iu = nn, jl = nn;
    for (size_t t = 0; t < nn; ++t) {
      double s = sign_of(t);
      double score = -s * grad[t];
      bool in_up = (s > 0.0) ? (v[t] < C) : (v[t] > 0.0);
      bool in_low = (s > 0.0) ? (v[t] > 0.0) : (v[t] < C);
      if (in_up && score > best_up) {
        best_up = score;
        iu = t;
      }
      if (in_low && score < best_low) {
        best_low = score;
        jl = t;
      }
    }
    m_val = best_up;
    big_m_val = best_low;
    i_out = iu;
    j_out = jl;
  };

  long long iter = 0;
  for (; iter < max_iter; ++iter) {
    size_t i, j;
    select_pair(i, j);
    if (i == nn || j == nn || m_val - big_m_val <= tol) break;

    const size_t bi = base(i), bj = base(j);
    const double si = sign_of(i), sj = sign_of(j);
    double curv = kmat[bi][bi] + kmat[bj][bj] - 2.0 * kmat[bi][bj];
    if (curv <= 1e-12) curv = 1e-12;
    double step = (m_val - big_m_val) / curv;
    double cap_i = (si > 0.0) ? C - v[i] : v[i];
    double cap_j = (sj > 0.0) ? v[j] : C - v[j];
    step = std::min(step, std::min(cap_i, cap_j));

    v[i] += step * si;
    v[j] -= step * sj;
    for (size_t t = 0; t < nn; ++t) {
      grad[t] += sign_of(t) * step * (kmat[base(t)][bi] - kmat[base(t)][bj]);
    }
  }
  m.converged = iter < max_iter;
  {
    size_t i, j;
    select_pair(i, j);  // refresh m/M at the final iterate
    m.kkt_residual = m_val - big_m_val;
    m.bias = 0.5 * (m_val + big_m_val);
  }

  // dual value: -(1/2 v'Qv + p'v), with v'Qv = v'(grad - p).
  double vq = 0.0, pv = 0.0;
  for (size_t t = 0; t < nn; ++t) {
    double p_t = epsilon - sign_of(t) * y[base(t)];
    vq += v[t] * (grad[t] - p_t);
    pv += v[t] * p_t;
  }
  m.dual_objective = -(0.5 * vq + pv);

  for (size_t i = 0; i < n; ++i) {
    double u = v[i] - v[n + i];
    if (u != 0.0) {
      m.support.push_back(z[i]);
      m.dual_coef.push_back(u);
    }
  }
  return m;
}

double default_epsilon(const std::vector<double>& labels) {
  double mean = std::accumulate(labels.begin(), labels.end(), 0.0) /
                static_cast<double>(labels.size());
  double var = 0.0;
  for (double v : labels) var += (v - mean) * (v - mean);
  return 0.1 * std::sqrt(var / static_cast<double>(labels.size()));
}

double scale_gamma(const std::vector<std::vector<double>>& x) {
  const size_t d = x.front().size();
  double mean = 0.0, count = static_cast<double>(x.size() * d);
  for (const auto& row : x)
    for (double v : row) mean += v;
  mean /= count;
  double var = 0.0;
  for (const auto& row : x)
    for (double v : row) var += (v - mean) * (v - mean);
  var /= count;
  if (var <= 0.0) return 1.0 / static_cast<double>(d);
  return 1.0 / (static_cast<double>(d) * var);
}

std::vector<double> default_c_grid() { return {0.1, 1.0, 10.0, 100.0}; }

std::vector<double> default_gamma_grid(const std::vector<std::vector<double>>& x) {
  return {scale_gamma(x), 0.01, 0.1, 1.0};
}

GridSearchResult grid_search_cv(const std::vector<FeatureVector>& data,
                                std::vector<double> c_grid, std::vector<double> gamma_grid,
                                uint64_t seed) {
  if (data.size() < 2) throw std::invalid_argument("grid_search_cv needs at least 2 samples");
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& f : data) {
    if (!f.label) throw std::invalid_argument("grid_search_cv: unlabeled feature vector");
    x.push_back(f.values);
    y.push_back(*f.label);
  }
  validate_matrix(x, y);
  if (c_grid.empty()) c_grid = default_c_grid();
  if (gamma_grid.empty()) gamma_grid = default_gamma_grid(x);
  std::sort(c_grid.begin(), c_grid.end());
  std::sort(gamma_grid.begin(), gamma_grid.end());

  std::vector<int> contents;
  for (const auto& f : data) contents.push_back(f.content_id);
  std::sort(contents.begin(), contents.end());
  contents.erase(std::unique(contents.begin(), contents.end()), contents.end());

  GridSearchResult res;
  res.folds = static_cast<int>(std::min<size_t>(5, contents.size()));
  res.reduced_folds = contents.size() < 5;

  Rng rng = Rng::stream(seed, Rng::tag("cv"));
  rng.shuffle(contents);
  std::map<int, int> fold_of;
  for (size_t i = 0; i < contents.size(); ++i) {
    fold_of[contents[i]] = static_cast<int>(i % static_cast<size_t>(res.folds));
  }

  const double epsilon = default_epsilon(y);
  double best_score = -std::numeric_limits<double>::infinity();
  res.c = c_grid.front();
  res.gamma = gamma_grid.front();

  for (double c : c_grid) {
    for (double g : gamma_grid) {
      std::vector<std::optional<double>> fold_srcc;
      for (int fold = 0; fold < res.folds; ++fold) {
        std::vector<std::vector<double>> xt;
        std::vector<double> yt;
        std::vector<std::vector<double>> xv;
        std::vector<double> yv;
        for (size_t i = 0; i < data.size(); ++i) {
          if (fold_of[data[i].content_id] == fold) {
            xv.push_back(x[i]);
            yv.push_back(y[i]);
          } else {
            xt.push_back(x[i]);
            yt.push_back(y[i]);
          }
        }
        if (xt.size() < 2 || xv.size() < 3) {
          fold_srcc.push_back(std::nullopt);
          continue;
        }
        SvrModel mdl = svr_fit(xt, yt, c, g, epsilon);
        std::vector<double> pred;
        pred.reserve(xv.size());
        for (const auto& row : xv) pred.push_back(mdl.predict(row));
        fold_srcc.push_back(corr::srcc(pred, yv));
      }
      double sum = 0.0;
      int defined = 0;
      for (const auto& s : fold_srcc) {
        if (s) {
          sum += *s;
          ++defined;
        }
      }
      GridCell cell;
      cell.c = c;
      cell.gamma = g;
      if (defined > 0) cell.mean_srcc = sum / defined;
      res.table.push_back(cell);
      if (cell.mean_srcc && *cell.mean_srcc > best_score) {
        best_score = *cell.mean_srcc;
        res.c = c;
        res.gamma = g;
        res.best_mean_srcc = cell.mean_srcc;
      }
    }
  }

  res.epsilon = epsilon;
  res.model = svr_fit(x, y, res.c, res.gamma, epsilon);
  return res;
}

}  // namespace vqp::regress

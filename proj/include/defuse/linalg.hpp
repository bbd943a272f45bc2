// Small fixed-size vector/matrix algebra plus the dense symmetric
// eigensolvers used by the MDS embedding.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "defuse/common.hpp"

namespace defuse {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double squared_norm() const { return x * x + y * y; }
  double norm() const { return std::sqrt(squared_norm()); }
};

struct Mat2 {
  double a11 = 1.0, a12 = 0.0;
  double a21 = 0.0, a22 = 1.0;

  static Mat2 identity() { return {}; }

  double det() const { return a11 * a22 - a12 * a21; }

  Mat2 inverse() const {
    double d = det();
    Mat2 r;
    r.a11 = a22 / d;
    r.a12 = -a12 / d;
    r.a21 = -a21 / d;
    r.a22 = a11 / d;
    return r;
  }

  Mat2 operator*(const Mat2& o) const {
    Mat2 r;
    r.a11 = a11 * o.a11 + a12 * o.a21;
    r.a12 = a11 * o.a12 + a12 * o.a22;
    r.a21 = a21 * o.a11 + a22 * o.a21;
    r.a22 = a21 * o.a12 + a22 * o.a22;
    return r;
  }

  Vec2 operator*(Vec2 v) const {
    return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y};
  }
};

using Vec3 = std::array<double, 3>;

struct Mat3 {
  // row-major
  std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static Mat3 identity() { return {}; }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
        r.m[i][j] = s;
      }
    return r;
  }

  Vec3 operator*(const Vec3& v) const {
    Vec3 r;
    for (int i = 0; i < 3; ++i)
      r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return r;
  }
};

/// Dense square matrix of doubles, row-major.
class SquareMatrix {
public:
  SquareMatrix() = default;
  explicit SquareMatrix(int n, double fill = 0.0)
      : n_(n), v_(static_cast<std::size_t>(n) * n, fill) {}

  int size() const { return n_; }
  double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

private:
  int n_ = 0;
  std::vector<double> v_;
};

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix. Returns
/// eigenvalues in descending order with matching eigenvector columns.
/// Intended for the m-by-m Rayleigh-Ritz systems (m <= a few dozen).
inline void jacobi_eigen(SquareMatrix a, std::vector<double>& eigenvalues,
                         SquareMatrix& eigenvectors) {
  int n = a.size();
  eigenvectors = SquareMatrix(n, 0.0);
  for (int i = 0; i < n; ++i) eigenvectors(i, i) = 1.0;
  eigenvalues.assign(n, 0.0);
  if (n == 0) return;

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::fabs(a(i, j)));
  if (scale == 0.0) return;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::fabs(a(i, j)));
    if (off < 1e-15 * scale) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = eigenvectors(k, p), vkq = eigenvectors(k, q);
          eigenvectors(k, p) = c * vkp - s * vkq;
          eigenvectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = a(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return diag[l] > diag[r]; });
  SquareMatrix sorted(n, 0.0);
  for (int j = 0; j < n; ++j) {
    eigenvalues[j] = diag[order[j]];
    for (int i = 0; i < n; ++i) sorted(i, j) = eigenvectors(i, order[j]);
  }
  eigenvectors = std::move(sorted);
}

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

/// Top eigenpairs of a symmetric matrix by algebraic value: subspace
/// iteration on b + cI with Rayleigh-Ritz restarts. The shift c is an
/// estimate of max(0, -lambda_min), which keeps the algebraically largest
/// eigenvalues dominant in magnitude without inflating the convergence
/// ratio (c stays 0 for positive semidefinite input). Stops on eigenpair
/// residuals. Deterministic start basis.
inline std::vector<EigenPair> top_eigenpairs(const SquareMatrix& b, int want,
                                             int max_iters = 600) {
  int n = b.size();
  want = std::min(want, n);
  std::vector<EigenPair> out;
  if (n == 0 || want <= 0) return out;

  double gershgorin = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::fabs(b(i, j));
    gershgorin = std::max(gershgorin, row);
  }
  if (gershgorin == 0.0) {
    for (int k = 0; k < want; ++k) {
      EigenPair p;
      p.vector.assign(n, 0.0);
      p.vector[k] = 1.0;
      out.push_back(std::move(p));
    }
    return out;
  }

  SplitMix64 rng(0x5eedba11u);

  // estimate lambda_min by power iteration on (g I - b), whose dominant
  // eigenvalue is g - lambda_min
  double lambda_min = 0.0;
  {
    std::vector<double> v(n), w(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    for (int it = 0; it < 60; ++it) {
      for (int i = 0; i < n; ++i) {
        double s = gershgorin * v[i];
        for (int j = 0; j < n; ++j) s -= b(i, j) * v[j];
        w[i] = s;
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-300) break;
      for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    double mu = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = gershgorin * v[i];
      for (int j = 0; j < n; ++j) s -= b(i, j) * v[j];
      mu += v[i] * s;
    }
    lambda_min = gershgorin - mu;
  }
  double shift = std::max(0.0, -lambda_min) * 1.1 + 1e-12 * gershgorin;

  int m = std::min(n, std::max(want + 2, 4));
  std::vector<std::vector<double>> x(m, std::vector<double>(n));
  for (auto& col : x)
    for (double& v : col) v = rng.uniform(-1.0, 1.0);

  auto orthonormalize = [&](std::vector<std::vector<double>>& cols) {
    int replace = 0;
    for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
      for (int i = 0; i < j; ++i) {
        double d = 0.0;
        for (int k = 0; k < n; ++k) d += cols[i][k] * cols[j][k];
        for (int k = 0; k < n; ++k) cols[j][k] -= d * cols[i][k];
      }
      double norm = 0.0;
      for (double v : cols[j]) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-150) {
        std::fill(cols[j].begin(), cols[j].end(), 0.0);
        cols[j][replace++ % n] = 1.0;
        --j;
        continue;
      }
      for (double& v : cols[j]) v /= norm;
    }
  };

  auto apply_shifted = [&](const std::vector<double>& in, std::vector<double>& outv) {
    for (int i = 0; i < n; ++i) {
      double s = shift * in[i];
      for (int j = 0; j < n; ++j) s += b(i, j) * in[j];
      outv[i] = s;
    }
  };

  // Rayleigh-Ritz on span(x): rotates x to Ritz vectors, returns Ritz values
  std::vector<std::vector<double>> bx(m, std::vector<double>(n));
  auto rayleigh_ritz = [&](std::vector<double>& theta) {
    for (int j = 0; j < m; ++j) apply_shifted(x[j], bx[j]);
    SquareMatrix s(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        double v = 0.0;
        for (int k = 0; k < n; ++k) v += x[i][k] * bx[j][k];
        s(i, j) = v;
        s(j, i) = v;
      }
    SquareMatrix w;
    jacobi_eigen(s, theta, w);
    std::vector<std::vector<double>> rotated(m, std::vector<double>(n, 0.0));
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j) {
        double wjk = w(j, k);
        for (int i = 0; i < n; ++i) rotated[k][i] += x[j][i] * wjk;
      }
    x.swap(rotated);
  };

  orthonormalize(x);
  std::vector<std::vector<double>> y(m, std::vector<double>(n));
  std::vector<double> theta(m, 0.0);
  double scale = gershgorin + shift;
  for (int iter = 0; iter < max_iters; ++iter) {
    for (int j = 0; j < m; ++j) apply_shifted(x[j], y[j]);
    x.swap(y);
    orthonormalize(x);
    if (iter % 10 == 9 || iter == max_iters - 1) {
      rayleigh_ritz(theta);
      // residual check on the wanted pairs
      double worst = 0.0;
      std::vector<double> r(n);
      for (int k = 0; k < want; ++k) {
        apply_shifted(x[k], r);
        double res = 0.0;
        for (int i = 0; i < n; ++i) {
          double d = r[i] - theta[k] * x[k][i];
          res += d * d;
        }
        worst = std::max(worst, std::sqrt(res));
      }
      if (worst < 1e-11 * std::max(scale, 1.0)) break;
    }
  }

  for (int k = 0; k < want; ++k) {
    EigenPair p;
    p.value = theta[k] - shift;
    p.vector = x[k];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace defuse

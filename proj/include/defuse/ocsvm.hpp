// Geodesic RBF kernel and the one-class SVM dual solver.
//
// Two formulations are shipped. `scholkopf` is the standard nu-OCSVM dual
//     min 1/2 a'Ka   s.t. 0 <= a_i <= 1/(nu n), sum a_i = 1
// with the offset rho recovered from the KKT conditions. `paper_eq8` keeps
// nu as a fixed margin offset, which drops the equality constraint:
//     min 1/2 a'Ka - nu sum a_i   s.t. 0 <= a_i <= 1/(Co n).
// Both decompose into analytic working-set updates; the coupled dual moves
// mass between a maximal violating pair, the box-only dual optimizes one
// coordinate at a time.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "defuse/linalg.hpp"

namespace defuse {

struct KernelMatrix {
  SquareMatrix k;
  double sigma = 1.0;

  int size() const { return k.size(); }
};

/// Kernel bandwidth: twice the mean geodesic distance from each vertex to its
/// nearest (geodesic) neighbor. Vertices with no finite neighbor are skipped.
inline double sigma_heuristic(const SquareMatrix& d) {
  int n = d.size();
  if (n < 2) throw DataError("sigma heuristic needs at least 2 correspondences");
  double sum = 0.0;
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    double nearest = kInf;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double v = d(i, j);
      if (std::isfinite(v) && v < nearest) nearest = v;
    }
    if (std::isfinite(nearest)) {
      sum += nearest;
      ++counted;
    }
  }
  if (counted == 0)
    throw DataError("degenerate kernel: no correspondence has a finite neighbor");
  return 2.0 * sum / counted;
}

/// K(i,j) = exp(-d(i,j)^2 / sigma^2); infinite distances map to exactly 0 and
/// the diagonal to exactly 1. Built from the upper triangle and mirrored, so
/// the result is exactly symmetric.
inline KernelMatrix build_kernel(const SquareMatrix& d, double sigma) {
  if (!(sigma > 0.0)) throw ParamError("sigma must be > 0");
  int n = d.size();
  KernelMatrix km;
  km.sigma = sigma;
  km.k = SquareMatrix(n, 0.0);
  double inv_s2 = 1.0 / (sigma * sigma);
  parallel_for(n, [&](int i) {
    km.k(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      double v = d(i, j);
      km.k(i, j) = v == 0.0 ? 1.0 : std::exp(-v * v * inv_s2);
    }
  });
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) km.k(j, i) = km.k(i, j);
  return km;
}

/// Resolves the bandwidth for a pipeline run: the heuristic with the zero-
/// sigma guard (degenerate clusters fall back to sigma = 1, where every d=0
/// kernel entry stays 1 regardless).
inline double resolve_sigma(const SquareMatrix& d) {
  if (d.size() < 2) return 1.0;
  double sigma = sigma_heuristic(d);
  if (sigma < 1e-12) {
    warn("sigma heuristic returned ~0; substituting sigma = 1");
    return 1.0;
  }
  return sigma;
}

enum class OcsvmFormulation { scholkopf, paper_eq8 };

inline std::string to_string(OcsvmFormulation f) {
  return f == OcsvmFormulation::scholkopf ? "scholkopf" : "paper-eq8";
}

struct OcsvmSolution {
  std::vector<double> alpha;
  double rho = 0.0;   // score offset: KKT rho for scholkopf, nu for paper_eq8
  std::vector<double> scores;
  OcsvmFormulation formulation = OcsvmFormulation::scholkopf;
  double co = 1.0;
  double nu = 0.5;
  double kkt_residual = 0.0;
  long pair_updates = 0;

  double dual_objective(const KernelMatrix& km) const {
    int n = km.size();
    double quad = 0.0, lin = 0.0;
    for (int i = 0; i < n; ++i) {
      double gi = 0.0;
      for (int j = 0; j < n; ++j) gi += km.k(i, j) * alpha[j];
      quad += alpha[i] * gi;
      lin += alpha[i];
    }
    double obj = 0.5 * quad;
    if (formulation == OcsvmFormulation::paper_eq8) obj -= nu * lin;
    return obj;
  }
};

namespace ocsvm_detail {

inline constexpr double kKktTolerance = 1e-6;
inline constexpr long kUpdateBudget = 1'000'000;

// min 1/2 a'Ka with sum a = 1, 0 <= a <= c: maximal-violating-pair SMO.
inline void solve_scholkopf(const SquareMatrix& k, double c, OcsvmSolution& sol) {
  int n = k.size();
  std::vector<double>& a = sol.alpha;
  a.assign(n, 0.0);
  // LibSVM-style start: fill the first floor(1/c) coefficients at the bound.
  double remaining = 1.0;
  for (int i = 0; i < n && remaining > 0.0; ++i) {
    a[i] = std::min(c, remaining);
    remaining -= a[i];
  }
  std::vector<double> g(n, 0.0);  // g = K a
  for (int j = 0; j < n; ++j) {
    if (a[j] == 0.0) continue;
    for (int i = 0; i < n; ++i) g[i] += k(i, j) * a[j];
  }

  double bound_eps = 1e-12 * c;
  long updates = 0;
  while (true) {
    int up = -1, low = -1;
    double g_up = 0.0, g_low = 0.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] < c - bound_eps && (up < 0 || g[i] < g_up)) {
        up = i;
        g_up = g[i];
      }
      if (a[i] > bound_eps && (low < 0 || g[i] > g_low)) {
        low = i;
        g_low = g[i];
      }
    }
    double violation = (up < 0 || low < 0) ? 0.0 : g_low - g_up;
    sol.kkt_residual = std::max(0.0, violation);
    if (violation <= kKktTolerance) break;
    if (updates >= kUpdateBudget)
      throw ConvergenceError("one-class SVM failed to reach KKT tolerance " +
                                 std::to_string(kKktTolerance) + " within " +
                                 std::to_string(kUpdateBudget) +
                                 " pair updates (residual " +
                                 std::to_string(violation) + ")",
                             violation);
    double quad = k(up, up) + k(low, low) - 2.0 * k(up, low);
    double step = quad > 1e-300 ? violation / quad : kInf;
    step = std::min(step, std::min(c - a[up], a[low]));
    a[up] += step;
    a[low] -= step;
    if (a[up] > c - bound_eps) a[up] = c;
    if (a[low] < bound_eps) a[low] = 0.0;
    for (int i = 0; i < n; ++i) g[i] += step * (k(i, up) - k(i, low));
    ++updates;
  }
  sol.pair_updates = updates;

  // rho: median of g over strictly interior coefficients; if none are
  // interior, the midpoint of the KKT-feasible interval.
  std::vector<double> interior;
  double lo = -kInf, hi = kInf;
  for (int i = 0; i < n; ++i) {
    if (a[i] > bound_eps && a[i] < c - bound_eps)
      interior.push_back(g[i]);
    else if (a[i] >= c - bound_eps)
      lo = std::max(lo, g[i]);
    else
      hi = std::min(hi, g[i]);
  }
  if (!interior.empty()) {
    std::sort(interior.begin(), interior.end());
    std::size_t mid = interior.size() / 2;
    sol.rho = interior.size() % 2 == 1
                  ? interior[mid]
                  : 0.5 * (interior[mid - 1] + interior[mid]);
  } else {
    if (!std::isfinite(lo)) lo = hi;
    if (!std::isfinite(hi)) hi = lo;
    sol.rho = 0.5 * (lo + hi);
  }

  sol.scores.resize(n);
  for (int i = 0; i < n; ++i) sol.scores[i] = g[i] - sol.rho;
}

// min 1/2 a'Ka - nu sum a with 0 <= a <= c: greedy coordinate descent.
inline void solve_paper_eq8(const SquareMatrix& k, double c, double nu,
                            OcsvmSolution& sol) {
  int n = k.size();
  std::vector<double>& a = sol.alpha;
  a.assign(n, 0.0);
  std::vector<double> g(n, 0.0);  // g = K a

  double bound_eps = 1e-12 * c;
  long updates = 0;
  while (true) {
    int pick = -1;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double grad = g[i] - nu;
      double viol = 0.0;
      if (grad < 0.0 && a[i] < c - bound_eps) viol = -grad;
      if (grad > 0.0 && a[i] > bound_eps) viol = grad;
      if (viol > worst) {
        worst = viol;
        pick = i;
      }
    }
    sol.kkt_residual = worst;
    if (worst <= kKktTolerance) break;
    if (updates >= kUpdateBudget)
      throw ConvergenceError("one-class SVM (paper-eq8) failed to reach KKT tolerance within budget (residual " +
                                 std::to_string(worst) + ")",
                             worst);
    double kii = k(pick, pick);
    double target = kii > 1e-300
                        ? a[pick] - (g[pick] - nu) / kii
                        : (g[pick] - nu < 0.0 ? c : 0.0);
    double next = std::clamp(target, 0.0, c);
    double delta = next - a[pick];
    a[pick] = next;
    for (int i = 0; i < n; ++i) g[i] += delta * k(i, pick);
    ++updates;
  }
  sol.pair_updates = updates;
  sol.rho = nu;
  sol.scores.resize(n);
  for (int i = 0; i < n; ++i) sol.scores[i] = g[i] - nu;
}

}  // namespace ocsvm_detail

/// Solves the one-class SVM dual for the given kernel and scores every
/// correspondence (score_i = sum_j a_j K(i,j) - offset).
inline OcsvmSolution solve_ocsvm(const KernelMatrix& km, OcsvmFormulation formulation,
                                 double co, double nu) {
  if (!(nu > 0.0) || nu > 1.0) throw ParamError("nu must be in (0, 1]");
  if (!(co > 0.0)) throw ParamError("co must be > 0");
  int n = km.size();
  if (n < 1) throw ParamError("kernel is empty");

  OcsvmSolution sol;
  sol.formulation = formulation;
  sol.co = co;
  sol.nu = nu;
  if (formulation == OcsvmFormulation::scholkopf) {
    double c = 1.0 / (nu * n);
    ocsvm_detail::solve_scholkopf(km.k, c, sol);
  } else {
    double c = 1.0 / (co * n);
    ocsvm_detail::solve_paper_eq8(km.k, c, nu, sol);
  }
  return sol;
}

}  // namespace defuse

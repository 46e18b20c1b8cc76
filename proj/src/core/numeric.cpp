#include "numeric.hpp"

#include <algorithm>
#include <cmath>

namespace lm {

gl_rule::gl_rule(int n) : node(n), weight(n) {
  // Newton iteration on P_n(x) = 0 seeded with the Chebyshev estimate; the
  // recurrence also yields P_n' for both the update and the weight formula.
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    node[i] = -x;
    node[n - 1 - i] = x;
    weight[i] = weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

const gl_rule& gl16() {
  static const gl_rule rule(16);
  return rule;
}

const gl_rule& gl64() {
  static const gl_rule rule(64);
  return rule;
}

namespace {

double integrate_rec(const std::function<double(double)>& fn, double a, double b,
                     double whole, double rel_tol, double scale, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gl_panel(gl64(), fn, a, mid);
  const double right = gl_panel(gl64(), fn, mid, b);
  const double refined = left + right;
  const double tol = rel_tol * std::max({scale, std::abs(refined), 1e-12});
  if (std::abs(refined - whole) <= tol || depth >= 24) return refined;
  return integrate_rec(fn, a, mid, left, rel_tol, scale, depth + 1) +
         integrate_rec(fn, mid, b, right, rel_tol, scale, depth + 1);
}

}  // namespace

double integrate(const std::function<double(double)>& fn, double a, double b,
                 double rel_tol) {
  if (!(b > a)) return 0.0;
  const double whole = gl_panel(gl64(), fn, a, b);
  return integrate_rec(fn, a, b, whole, rel_tol, std::abs(whole), 0);
}

double integrate_pieces(const std::function<double(double)>& fn,
                        const std::vector<double>& breaks, double rel_tol) {
  // Callers assemble break lists from independent sources (support edges,
  // knees, presence cuts), so order them here rather than at every call site.
  std::vector<double> pts = breaks;
  std::sort(pts.begin(), pts.end());
  double acc = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    if (pts[i + 1] > pts[i]) acc += integrate(fn, pts[i], pts[i + 1], rel_tol);
  return acc;
}

double bisect(const std::function<double(double)>& g, double lo, double hi,
              double tol_x) {
  require(hi >= lo, errc::argument, "bisect: inverted bracket");
  double flo = g(lo);
  if (flo == 0.0) return lo;
  double fhi = g(hi);
  if (fhi == 0.0) return hi;
  require(std::signbit(flo) != std::signbit(fhi), errc::argument,
          "bisect: endpoints do not bracket a root");
  for (int it = 0; it < 200 && hi - lo > tol_x; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = g(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double central_diff(const std::function<double(double)>& fn, double x, double h,
                    double lo, double hi) {
  const double a = std::max(lo, x - h);
  const double b = std::min(hi, x + h);
  require(b > a, errc::argument, "central_diff: degenerate interval");
  return (fn(b) - fn(a)) / (b - a);
}

}  // namespace lm

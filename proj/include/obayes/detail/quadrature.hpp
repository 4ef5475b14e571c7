#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace obayes::detail {

/// Adaptive Simpson quadrature with absolute tolerance.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40) {
  auto simpson = [](double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
  };
  struct Rec {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  const double m0 = 0.5 * (a + b);
  double fa = f(a), fm = f(m0), fb = f(b);
  std::vector<Rec> stack;
  stack.push_back({a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), max_depth});
  double total = 0.0;
  while (!stack.empty()) {
    Rec r = stack.back();
    stack.pop_back();
    const double m = 0.5 * (r.a + r.b);
    const double lm = 0.5 * (r.a + m), rm = 0.5 * (m + r.b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(r.fa, flm, r.fm, m - r.a);
    const double right = simpson(r.fm, frm, r.fb, r.b - m);
    const double err = (left + right - r.whole) / 15.0;
    if (r.depth <= 0 || std::abs(err) <= tol) {
      total += left + right + err;
    } else {
      stack.push_back({r.a, m, r.fa, flm, r.fm, left, r.depth - 1});
      stack.push_back({m, r.b, r.fm, frm, r.fb, right, r.depth - 1});
    }
  }
  return total;
}

/// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
      // Chebyshev initial guess for the i-th root of P_n.
      double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                          (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (std::size_t j = 2; j <= n; ++j) {
          const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  /// Integrate f over [a, b].
  template <typename F>
  double integrate(F&& f, double a, double b) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      sum += weights[i] * f(mid + half * nodes[i]);
    return half * sum;
  }
};

}  // namespace obayes::detail

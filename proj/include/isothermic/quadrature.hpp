#ifndef ISOTHERMIC_QUADRATURE_HPP
#define ISOTHERMIC_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <vector>

namespace isothermic {

struct GaussLegendre {
  std::vector<double> x, w;  // nodes and weights on [-1, 1]

  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-16) break;
      }
      x[i] = t;
      w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }

  template <class F>
  auto integrate(F&& f, double a, double b) const -> decltype(f(a)) {
    const double h = 0.5 * (b - a), m = 0.5 * (b + a);
    decltype(f(a)) s = w[0] * f(m + h * x[0]);
    for (std::size_t i = 1; i < x.size(); ++i) s += w[i] * f(m + h * x[i]);
    return s * h;
  }
};

inline const GaussLegendre& gauss_legendre_32() {
  static const GaussLegendre g(32);
  return g;
}

}  // namespace isothermic

#endif

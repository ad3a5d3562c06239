#ifndef ISOTHERMIC_TESTS_SUPPORT_HPP
#define ISOTHERMIC_TESTS_SUPPORT_HPP

#include <array>
#include <random>

#include <isothermic/minkowski.hpp>

namespace testing_support {

using namespace isothermic;

inline std::mt19937_64& rng() {
  static std::mt19937_64 g(20240611ULL);
  return g;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

inline Vec random_vec(int dim, double s = 1.0) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = uniform(-s, s);
  return v;
}

// Random skew map scaled to the given Frobenius norm.
inline Mat random_skew(int dim, double norm) {
  Mat X = Mat::Zero(dim, dim);
  for (int k = 0; k < 3; ++k) X += wedge(random_vec(dim), random_vec(dim));
  return X * (norm / X.norm());
}

// Dense reference exponential: plain Taylor series with many terms, no scaling.
inline Mat dense_exp(const Mat& X, int terms = 120) {
  Mat E = Mat::Identity(X.rows(), X.cols()), T = E;
  for (int k = 1; k < terms; ++k) {
    T = T * X / double(k);
    E += T;
  }
  return E;
}

// Random v, w and x, y in the orthogonal complement of <v, w>; the wedges then commute.
inline std::array<Vec, 4> random_ppf_data(int dim, double re_norm, double im_norm) {
  for (;;) {
    Vec v = random_vec(dim), w = random_vec(dim);
    const double vv = inner(v, v), vw = inner(v, w), ww = inner(w, w);
    const double det = vv * ww - vw * vw;
    if (std::abs(det) < 0.05) continue;
    auto project = [&](Vec x) {
      const double a = inner(x, v), b = inner(x, w);
      const double cv = (ww * a - vw * b) / det, cw = (vv * b - vw * a) / det;
      return Vec(x - cv * v - cw * w);
    };
    Vec x = project(random_vec(dim)), y = project(random_vec(dim));
    const double sr = std::sqrt(re_norm / wedge(v, w).norm());
    const double si = std::sqrt(im_norm / wedge(x, y).norm());
    return {sr * v, sr * w, si * x, si * y};
  }
}

}  // namespace testing_support

#endif

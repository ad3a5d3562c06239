#ifndef ISOTHERMIC_MINKOWSKI_HPP
#define ISOTHERMIC_MINKOWSKI_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "errors.hpp"

namespace isothermic {

inline constexpr int max_dim = 16;

using cplx = std::complex<double>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, max_dim, max_dim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, max_dim, 1>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, max_dim, max_dim>;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, Eigen::ColMajor, max_dim, 1>;

// Basis layout of R^{n+2}_1: (o, iota, t_u, t_v, n_1, ..., n_{n-2}).
namespace idx {
inline constexpr int o = 0;
inline constexpr int iota = 1;
inline constexpr int tu = 2;
inline constexpr int tv = 3;
inline constexpr int normal(int i) { return 3 + i; }  // i = 1..n-2
}  // namespace idx

class MinkSpace {
 public:
  explicit MinkSpace(int n = 3) : n_(n) {
    if (n < 3 || n + 2 > max_dim)
      throw std::invalid_argument("MinkSpace: need 3 <= n <= " + std::to_string(max_dim - 2));
  }
  int n() const { return n_; }
  int dim() const { return n_ + 2; }

  Vec unit(int k) const {
    if (k < 0 || k >= dim()) throw std::invalid_argument("MinkSpace::unit: index out of range");
    Vec e = Vec::Zero(dim());
    e[k] = 1.0;
    return e;
  }
  Vec o() const { return unit(idx::o); }
  Vec iota() const { return unit(idx::iota); }
  Vec t_u() const { return unit(idx::tu); }
  Vec t_v() const { return unit(idx::tv); }
  Vec normal(int i) const {
    if (i < 1 || i > n_ - 2) throw std::invalid_argument("MinkSpace::normal: index out of range");
    return unit(idx::normal(i));
  }
  Mat gram() const;

 private:
  int n_;
};

inline Mat gram(int dim) {
  Mat G = Mat::Identity(dim, dim);
  G(0, 0) = 0.0;
  G(1, 1) = 0.0;
  G(0, 1) = -1.0;
  G(1, 0) = -1.0;
  return G;
}

inline Mat MinkSpace::gram() const { return isothermic::gram(dim()); }

namespace detail {
inline void check_same(long a, long b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}
}  // namespace detail

// G v, the covector of v.
template <class Derived>
auto lower(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, Eigen::Dynamic, 1, Eigen::ColMajor, max_dim, 1> r = v;
  r[0] = -v[1];
  r[1] = -v[0];
  return r;
}

template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1, Eigen::ColMajor, max_dim, 1>;
template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, max_dim, max_dim>;
template <class A, class B>
using common_scalar = std::common_type_t<typename A::Scalar, typename B::Scalar>;

// Minkowski inner product; complex arguments use the bilinear extension.
template <class A, class B>
common_scalar<A, B> inner(const Eigen::MatrixBase<A>& v, const Eigen::MatrixBase<B>& w) {
  detail::check_same(v.size(), w.size(), "inner");
  using S = common_scalar<A, B>;
  S s = -S(v[0]) * S(w[1]) - S(v[1]) * S(w[0]);
  for (int i = 2; i < v.size(); ++i) s += S(v[i]) * S(w[i]);
  return s;
}

inline double norm2(const Vec& v) { return inner(v, v); }

// x -> <v,x> w - <w,x> v
template <class A, class B>
MatT<common_scalar<A, B>> wedge(const Eigen::MatrixBase<A>& v, const Eigen::MatrixBase<B>& w) {
  detail::check_same(v.size(), w.size(), "wedge");
  using S = common_scalar<A, B>;
  const VecT<S> a = v.template cast<S>(), b = w.template cast<S>();
  return b * lower(a).transpose() - a * lower(b).transpose();
}

// x -> v <w,x>
template <class A, class B>
MatT<common_scalar<A, B>> outer_star(const Eigen::MatrixBase<A>& v, const Eigen::MatrixBase<B>& w) {
  using S = common_scalar<A, B>;
  const VecT<S> a = v.template cast<S>(), b = w.template cast<S>();
  return a * lower(b).transpose();
}

template <class Derived>
auto adjoint(const Eigen::MatrixBase<Derived>& A) {
  using S = typename Derived::Scalar;
  if (A.rows() != A.cols()) throw std::invalid_argument("adjoint: square map expected");
  const int d = static_cast<int>(A.rows());
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, max_dim, max_dim> T = A.transpose();
  // G T G with G swapping the first two coordinates and negating them.
  T.row(0).swap(T.row(1));
  T.col(0).swap(T.col(1));
  T.topRightCorner(2, d - 2) *= S(-1);
  T.bottomLeftCorner(d - 2, 2) *= S(-1);
  return T;
}

inline double skew_residual(const Mat& X) { return (X + adjoint(X)).norm(); }

inline double lorentz_residual(const Mat& A) {
  return (adjoint(A) * A - Mat::Identity(A.rows(), A.cols())).norm();
}

inline bool is_skew(const Mat& X, double tol = 1e-10) {
  return skew_residual(X) <= tol * std::max(1.0, X.norm());
}

// General matrix exponential by scaling and squaring of a 13-term Taylor polynomial.
template <class M>
M expm_taylor(const M& X) {
  const int d = static_cast<int>(X.rows());
  const double nrm = X.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  M Y = X / std::ldexp(1.0, s);
  M I = M::Identity(d, d);
  M E = I;
  for (int k = 13; k >= 1; --k) E = I + (Y * E) / static_cast<double>(k);
  for (int i = 0; i < s; ++i) E = E * E;
  return E;
}

inline Mat exp_skew(const Mat& X) {
  if (X.rows() != X.cols()) throw std::invalid_argument("exp_skew: square map expected");
  if (!is_skew(X)) throw std::invalid_argument("exp_skew: argument is not Minkowski-skew");
  return expm_taylor(X);
}

// Minkowski Gram-Schmidt on the columns: spacelike columns in basis order,
// then the (o, iota) columns re-paired as a null pair with <a,b> = -1.
inline Mat reorthonormalize(const Mat& A, double max_residual = 1e-3) {
  if (A.rows() != A.cols()) throw std::invalid_argument("reorthonormalize: square map expected");
  const int d = static_cast<int>(A.rows());
  const double res = lorentz_residual(A);
  if (!(res <= max_residual * std::max(1.0, A.squaredNorm())))
    throw std::invalid_argument("reorthonormalize: input too far from the Lorentz group");
  Mat B = A;
  for (int k = 2; k < d; ++k) {
    Vec c = B.col(k);
    for (int j = 2; j < k; ++j) {
      Vec e = B.col(j);
      c -= inner(c, e) * e;
    }
    const double q = inner(c, c);
    if (!(q > 0.5)) throw std::invalid_argument("reorthonormalize: pivot breakdown");
    B.col(k) = c / std::sqrt(q);
  }
  Vec p = B.col(0), q = B.col(1);
  for (int j = 2; j < d; ++j) {
    Vec e = B.col(j);
    p -= inner(p, e) * e;
    q -= inner(q, e) * e;
  }
  const double P = inner(p, p), Q = inner(q, q), X = inner(p, q);
  const double disc = X * X - P * Q;
  if (!(disc > 0.0) || X == 0.0) throw std::invalid_argument("reorthonormalize: pivot breakdown");
  const double den = X + std::copysign(std::sqrt(disc), X);
  const double alpha = -P / den, beta = -Q / den;
  Vec a = p + alpha * q, b = q + beta * p;
  const double c = inner(a, b);
  if (!(c < 0.0)) throw std::invalid_argument("reorthonormalize: pivot breakdown");
  const double sc = std::sqrt(-1.0 / c);
  B.col(0) = a * sc;
  B.col(1) = b * sc;
  return B;
}

// Projective point: any nonzero representative.
class ProjPoint {
 public:
  explicit ProjPoint(Vec rep) : rep_(std::move(rep)) {
    if (!(rep_.norm() > 0.0) || !rep_.allFinite())
      throw std::invalid_argument("ProjPoint: zero or non-finite representative");
  }
  const Vec& rep() const { return rep_; }
  Vec unit() const { return rep_ / rep_.norm(); }

 private:
  Vec rep_;
};

inline double proj_dist(const Vec& a, const Vec& b) {
  detail::check_same(a.size(), b.size(), "proj_dist");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("proj_dist: zero vector");
  Vec ah = a / na, bh = b / nb;
  return std::min((ah - bh).norm(), (ah + bh).norm());
}

inline double proj_dist(const ProjPoint& a, const ProjPoint& b) { return proj_dist(a.rep(), b.rep()); }

struct EigenPair {
  cplx value;
  CVec vector;
};

// Full complex spectrum, ordered by modulus then argument (ties within 1e-9 relative).
inline std::vector<EigenPair> eig(const Mat& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("eig: square map expected");
  const int d = static_cast<int>(A.rows());
  CMat Ac = A.cast<cplx>();
  Eigen::ComplexEigenSolver<CMat> es(Ac, true);
  if (es.info() != Eigen::Success) throw convergence_error("eig: QR iteration did not converge");
  const double an = std::max(A.norm(), 1e-300);
  std::vector<EigenPair> out;
  out.reserve(d);
  for (int k = 0; k < d; ++k) {
    CVec v = es.eigenvectors().col(k);
    v /= v.norm();
    int imax = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(v[i]) > std::abs(v[imax]) + 1e-12) imax = i;
    v *= std::conj(v[imax]) / std::abs(v[imax]);
    const cplx mu = es.eigenvalues()[k];
    if ((Ac * v - mu * v).norm() > 1e-9 * an)
      throw convergence_error("eig: eigenpair residual above tolerance");
    out.push_back({mu, v});
  }
  const double scale = std::max(1.0, an);
  auto before = [scale](const EigenPair& x, const EigenPair& y) {
    const double mx = std::abs(x.value), my = std::abs(y.value);
    if (std::abs(mx - my) > 1e-9 * scale) return mx < my;
    return std::arg(x.value) < std::arg(y.value) - 1e-9;
  };
  for (int i = 1; i < d; ++i)
    for (int j = i; j > 0 && before(out[j], out[j - 1]); --j) std::swap(out[j], out[j - 1]);
  return out;
}

inline std::vector<cplx> eigenvalues(const Mat& A) {
  std::vector<cplx> r;
  for (const auto& p : eig(A)) r.push_back(p.value);
  return r;
}

// Largest distance in a greedy pairing of two spectra given as multisets,
// measured relative to max(1, |expected|).
inline double spectrum_mismatch(std::vector<cplx> got, const std::vector<cplx>& expected) {
  if (got.size() != expected.size()) return INFINITY;
  double worst = 0.0;
  for (const cplx& e : expected) {
    std::size_t best = 0;
    double bd = INFINITY;
    for (std::size_t i = 0; i < got.size(); ++i) {
      const double dd = std::abs(got[i] - e);
      if (dd < bd) bd = dd, best = i;
    }
    worst = std::max(worst, bd / std::max(1.0, std::abs(e)));
    got.erase(got.begin() + static_cast<long>(best));
  }
  return worst;
}

}  // namespace isothermic

#endif

#ifndef ISOTHERMIC_IO_HPP
#define ISOTHERMIC_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "transforms.hpp"

namespace isothermic {

// nlohmann::json keeps object keys in a std::map, so dumps are key-ordered.
using json = nlohmann::json;

// ---------------------------------------------------------------------------------------------
// JSON encodings: complex as {"re", "im"}, vectors as arrays, matrices as row-major arrays of rows.

namespace detail {
inline double finite(double x) {
  if (!std::isfinite(x)) throw validation_error("export: non-finite value");
  return x;
}
}  // namespace detail

inline json to_json(double x) { return detail::finite(x); }
inline json to_json(const cplx& z) { return json{{"re", detail::finite(z.real())}, {"im", detail::finite(z.imag())}}; }

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(detail::finite(v[i]));
  return a;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(detail::finite(m(i, j)));
    a.push_back(std::move(row));
  }
  return a;
}

inline json to_json(const std::vector<cplx>& v) {
  json a = json::array();
  for (const cplx& z : v) a.push_back(to_json(z));
  return a;
}

inline cplx cplx_from_json(const json& j) { return {j.at("re").get<double>(), j.at("im").get<double>()}; }

inline Vec vec_from_json(const json& j) {
  Vec v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

inline Mat mat_from_json(const json& j) {
  const int rows = static_cast<int>(j.size()), cols = rows ? static_cast<int>(j.at(0).size()) : 0;
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols) throw validation_error("matrix: ragged rows");
    for (int k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------------------------
// Reports

inline json to_json(const PolarPoint& p) { return json{{"r", detail::finite(p.r)}, {"phi", detail::finite(p.phi)}}; }

inline json to_json(const ConvergenceReport& r) {
  json j;
  j["mode"] = r.mode;
  j["classification"] = to_string(r.classification);
  j["final_distance"] = r.final_distance;
  j["oscillation"] = r.oscillation;
  j["rate"] = r.rate;
  j["tol"] = r.tol;
  j["diagnostic"] = r.diagnostic;
  if (r.limit.size()) j["limit"] = to_json(r.limit);
  if (r.sphere.size()) j["sphere_basis"] = to_json(r.sphere);
  json rows = json::array();
  for (const ConvergenceRow& c : r.rows)
    rows.push_back(json{{"r", c.r}, {"distance", c.distance}, {"increment", c.increment}});
  j["rows"] = rows;
  return j;
}

inline json to_json(const LimitData& l) {
  json j = to_json(l.report);
  j["regime"] = to_string(l.regime);
  return j;
}

inline json to_json(const StructureReport& r) {
  json j;
  j["regime"] = r.regime;
  j["lambda"] = r.lambda;
  j["lambda_eff"] = r.lambda_eff;
  j["base"] = to_json(r.base);
  j["monodromy"] = to_json(r.monodromy);
  j["monodromy_error"] = r.monodromy_error;
  j["eigenvalues"] = to_json(r.eigenvalues);
  j["expected_eigenvalues"] = to_json(r.expected);
  json m = json::object();
  for (const Metric& x : r.metrics) m[x.name] = x.value;
  j["metrics"] = m;
  json v = json::object();
  for (const auto& [name, x] : r.vectors) v[name] = to_json(x);
  j["vectors"] = v;
  return j;
}

inline json to_json(const PushforwardVerdict& v) {
  json j;
  j["kind"] = v.kind == TransformKind::calapso ? "calapso" : "darboux";
  j["lambda"] = v.lambda;
  j["j"] = v.j;
  j["predicate"] = v.predicate;
  j["sampled"] = v.sampled;
  j["expected"] = v.expected ? json(*v.expected) : json(nullptr);
  j["predicate_residual"] = v.predicate_residual;
  j["sampled_residual"] = v.sampled_residual;
  j["tol"] = v.tol;
  j["agree"] = v.agree();
  j["witness"] = v.witness;
  return j;
}

inline json to_json(const ZeroCaseReport& z) {
  json j;
  j["calapso_spread"] = z.calapso_spread;
  j["darboux_spread"] = z.darboux_spread;
  j["monodromy_residual"] = z.monodromy_residual;
  j["fitted_order"] = z.fitted_order;
  json d = json::array();
  for (const auto& [r, n] : z.darboux_differential) d.push_back(json{{"r", r}, {"norm", n}});
  j["darboux_differential"] = d;
  return j;
}

inline json to_json(const LimitSetDarbouxStudy& s) {
  json j;
  j["init"] = to_json(s.init);
  j["alpha"] = to_json(s.alpha);
  j["beta"] = s.beta;
  j["period"] = s.period;
  j["separation"] = s.separation;
  j["direct_check"] = s.direct_check;
  j["residual_scale"] = s.residual_scale;
  auto seq = [](const std::vector<double>& r, const std::vector<double>& d, const std::vector<double>& e) {
    json a = json::array();
    for (std::size_t k = 0; k < r.size(); ++k) a.push_back(json{{"r", r[k]}, {"distance", d[k]}, {"residual", e[k]}});
    return a;
  };
  j["subsequence_a"] = json{{"limit", to_json(s.limit_a)}, {"rows", seq(s.radii_a, s.dist_a, s.residual_a)}};
  j["subsequence_b"] = json{{"limit", to_json(s.limit_b)}, {"rows", seq(s.radii_b, s.dist_b, s.residual_b)}};
  return j;
}

inline json samples_json(const std::vector<TransformSample>& s) {
  json a = json::array();
  for (const TransformSample& t : s) a.push_back(json{{"q", to_json(t.q)}, {"value", to_json(t.value)}});
  return a;
}

// ---------------------------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", detail::finite(x));
  return buf;
}

inline std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw validation_error("csv: row width does not match header");
    // NaN marks a missing entry and is written as an empty field
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << (std::isnan(row[i]) ? "" : format_double(row[i]));
    os << "\n";
  }
  return os.str();
}

inline CsvTable convergence_table(const ConvergenceReport& r) {
  CsvTable t{{"k", "r", "distance", "increment"}, {}};
  for (std::size_t k = 0; k < r.rows.size(); ++k)
    t.rows.push_back({static_cast<double>(k + 1), r.rows[k].r, r.rows[k].distance, r.rows[k].increment});
  return t;
}

// Grid samples with their affine images.
inline CsvTable sample_table(const std::vector<TransformSample>& s) {
  CsvTable t{{"r", "phi"}, {}};
  const int n = s.empty() ? 0 : static_cast<int>(s.front().value.size()) - 2;
  for (int i = 0; i < n; ++i) t.header.push_back("x" + std::to_string(i + 1));
  for (const TransformSample& x : s) {
    std::vector<double> row{x.q.r, x.q.phi};
    const Eigen::VectorXd a = affine_point(x.value);
    for (int i = 0; i < a.size(); ++i) row.push_back(a[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------------------------
// OBJ: one vertex per grid sample (affine chart), quads between neighbouring radii and angles.

inline std::string to_obj(const std::vector<TransformSample>& s, const GridSpec& grid,
                          const std::vector<std::string>& comments = {}) {
  if (static_cast<int>(s.size()) != grid.size()) throw validation_error("obj: sample count does not match the grid");
  std::ostringstream os;
  for (const std::string& c : comments) os << "# " << c << "\n";
  for (const TransformSample& x : s) {
    const Eigen::VectorXd a = affine_point(x.value);
    os << "v";
    for (int i = 0; i < 3; ++i) os << " " << format_double(i < a.size() ? a[i] : 0.0);
    os << "\n";
  }
  for (int i = 0; i + 1 < grid.nr; ++i)
    for (int j = 0; j + 1 < grid.nphi; ++j) {
      const int a = i * grid.nphi + j + 1;
      os << "f " << a << " " << a + grid.nphi << " " << a + grid.nphi + 1 << " " << a + 1 << "\n";
    }
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace isothermic

#endif

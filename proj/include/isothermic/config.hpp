#ifndef ISOTHERMIC_CONFIG_HPP
#define ISOTHERMIC_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "io.hpp"

namespace isothermic {

// A surface model together with its quadratic differential.
struct ModelConfig {
  SurfaceModel model;
  QuadDiff Q;
  json descriptor;
};

inline std::vector<std::string> preset_names() {
  return {"revolution-sech", "revolution-perturbed", "umbilic-sphere-fo", "umbilic-sphere-zero"};
}

namespace detail {

inline cplx read_cplx(const json& j, const char* key) {
  if (!j.contains(key)) return 0.0;
  const json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2) return {v.at(0).get<double>(), v.at(1).get<double>()};
  if (v.is_object()) return cplx_from_json(v);
  throw validation_error(std::string("model: Q.") + key + " must be a number, [re, im] or {\"re\", \"im\"}");
}

}  // namespace detail

// {"model": "revolution" | "umbilic-sphere", "profile": "sech" | "perturbed", "epsilon": 0.1,
//  "Q": {"c2": [1, 0], "c1": [0, 0], "hol": "z"}, "r0": 1.0, "n": 3}
inline ModelConfig model_from_json(const json& j) {
  try {
    if (!j.is_object()) throw validation_error("model: descriptor must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (k != "model" && k != "profile" && k != "epsilon" && k != "Q" && k != "r0" && k != "n")
        throw validation_error("model: unknown key '" + k + "'");
    const std::string kind = j.at("model").get<std::string>();
    const double r0 = j.value("r0", 1.0);
    const int n = j.value("n", 3);
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw validation_error("model: r0 must be positive");
    if (n < 3) throw validation_error("model: n must be at least 3");
    json Qj = j.value("Q", json::object());
    QuadDiff Q;
    Q.c2 = detail::read_cplx(Qj, "c2");
    Q.c1 = detail::read_cplx(Qj, "c1");
    if (Qj.contains("hol")) {
      const std::string h = Qj.at("hol").get<std::string>();
      if (h != "z") throw validation_error("model: Q.hol supports only \"z\"");
      Q.hol = [](cplx z) { return z; };
      Q.hol_name = h;
    }
    if (Q.pole_order() == 0 && !Q.hol) throw validation_error("model: Q vanishes identically");
    if (kind == "revolution") {
      const std::string prof = j.value("profile", "sech");
      Profile p;
      if (prof == "sech")
        p = Profile::sech();
      else if (prof == "perturbed")
        p = Profile::perturbed(j.value("epsilon", 0.1));
      else
        throw validation_error("model: unknown profile '" + prof + "'");
      return {SurfaceModel::revolution(p, n, r0), Q, j};
    }
    if (kind == "umbilic-sphere") return {SurfaceModel::umbilic_sphere(n, r0), Q, j};
    throw validation_error("model: unknown model '" + kind + "'");
  } catch (const json::exception& e) {
    throw validation_error(std::string("model: malformed descriptor: ") + e.what());
  }
}

inline json preset_descriptor(const std::string& name) {
  if (name == "revolution-sech")
    return json::parse(R"({"model": "revolution", "profile": "sech", "Q": {"c2": [1, 0], "c1": [0, 0]}, "r0": 1.0})");
  if (name == "revolution-perturbed")
    return json::parse(
        R"({"model": "revolution", "profile": "perturbed", "epsilon": 0.1, "Q": {"c2": [1, 0], "c1": [0, 0]}, "r0": 1.0})");
  if (name == "umbilic-sphere-fo")
    return json::parse(R"({"model": "umbilic-sphere", "Q": {"c2": [0, 0], "c1": [1, 0]}, "r0": 1.0})");
  if (name == "umbilic-sphere-zero") return json::parse(R"({"model": "umbilic-sphere", "Q": {"hol": "z"}, "r0": 1.0})");
  throw validation_error("model: unknown preset '" + name + "'");
}

// A preset name, an inline JSON object or the path of a JSON file.
inline ModelConfig load_model(const std::string& arg) {
  for (const std::string& p : preset_names())
    if (arg == p) return model_from_json(preset_descriptor(arg));
  std::string text = arg;
  if (arg.empty() || arg.front() != '{') {
    if (!std::filesystem::is_regular_file(arg)) throw validation_error("model: '" + arg + "' is neither a preset nor a file");
    std::ifstream f(arg);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("model: malformed JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace isothermic

#endif

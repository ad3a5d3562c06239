#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <isothermic/config.hpp>
#include <isothermic/io.hpp>
#include <isothermic/transforms.hpp>

using namespace isothermic;

namespace {

struct Options {
  std::string model = "revolution-sech";
  double lambda = 0.375;
  std::string base = "0.5,0";
  std::string grid = "6,12,6.283185307179586";
  int schedule = 40;
  double steps = 48.0;
  double tol = 1e-11;
  double rmin = 0.05;
  std::string out;
  std::string format;
  std::uint64_t seed = 1;
  std::string init = "random";
  int j = 1;
  std::string kind = "calapso";
  std::string transform = "calapso";
  std::string study = "point";
  double rotate = 0.0;
};

std::vector<double> split_numbers(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw validation_error(std::string(what) + ": cannot parse '" + s + "'");
    }
  }
  return v;
}

// Everything a command needs, checked once.
struct Context {
  Options opt;
  ModelConfig mc;
  PolarPoint base;
  GridSpec grid;
  TransformOptions topt;

  explicit Context(const Options& o) : opt(o), mc(load_model(o.model)) {
    const std::vector<double> b = split_numbers(o.base, "--base");
    if (b.size() != 2) throw validation_error("--base expects r,phi");
    base = {b[0], b[1]};
    const std::vector<double> g = split_numbers(o.grid, "--grid");
    if (g.size() != 3 || g[0] != std::floor(g[0]) || g[1] != std::floor(g[1]))
      throw validation_error("--grid expects nr,nphi,phimax with integer sizes");
    grid.nr = static_cast<int>(g[0]);
    grid.nphi = static_cast<int>(g[1]);
    grid.phimax = g[2];
    grid.rmin = o.rmin;
    grid.rmax = 0.95 * mc.model.r0();
    if (!(o.tol > 0.0)) throw validation_error("--tol must be positive");
    if (!(o.steps > 0.0)) throw validation_error("--steps must be positive");
    if (!(o.rmin > 0.0) || !(o.rmin < mc.model.r0())) throw validation_error("--rmin must satisfy 0 < rmin < r0");
    if (o.schedule < 3) throw validation_error("--schedule must be at least 3");
    grid.validate(mc.model.r0());
    check_base(mc.model, base);
    topt.integ.steps = o.steps;
    topt.integ.tol = o.tol;
    topt.schedule.max_terms = o.schedule;
    topt.schedule.min_terms = std::min(topt.schedule.min_terms, o.schedule);
  }

  json header(const std::string& command) const {
    json j;
    j["command"] = command;
    j["model"] = mc.descriptor;
    j["lambda"] = opt.lambda;
    j["base"] = to_json(base);
    j["seed"] = opt.seed;
    j["tol"] = opt.tol;
    return j;
  }

  std::vector<std::string> obj_header(const std::string& command) const {
    std::ostringstream s;
    s << command << " model=" << mc.descriptor.dump() << " lambda=" << format_double(opt.lambda)
      << " base=" << format_double(base.r) << "," << format_double(base.phi) << " seed=" << opt.seed;
    return {s.str()};
  }

  Vec init_point() const {
    const std::string& s = opt.init;
    const int n = mc.model.n();
    if (s == "random") return random_light_point(n, opt.seed);
    if (s == "limit") return calapso_limit(mc.model, mc.Q, opt.lambda, base, topt).report.limit;
    if (s == "w-plus" || s == "w-minus") {
      const StructureReport r = so_monodromy_structure(mc.model, mc.Q, opt.lambda, base, topt);
      if (regime(mc.Q, opt.lambda) != PoleRegime::so_spacelike)
        throw validation_error("--init w-plus/w-minus needs a second-order pole with 1 - 2 lambda < 0");
      return r.vector(s == "w-plus" ? "w_plus" : "w_minus");
    }
    if (s == "limit-set") return darboux_limit_set_study(mc.model, mc.Q, opt.lambda, base, 1, topt).init;
    const std::vector<double> v = split_numbers(s, "--init");
    if (static_cast<int>(v.size()) != mc.model.dim())
      throw validation_error("--init expects random, limit, w-plus, w-minus, limit-set or n+2 numbers");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size()));
  }
};

std::string pick_format(const Options& o, const std::string& fallback, std::initializer_list<const char*> allowed) {
  const std::string f = o.format.empty() ? fallback : o.format;
  for (const char* a : allowed)
    if (f == a) return f;
  throw validation_error("--format " + f + " is not available for this command");
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
}

int cmd_surface(const Options& o) {
  Context c(o);
  const std::string f = pick_format(o, "obj", {"obj", "csv", "json"});
  std::vector<TransformSample> s(c.grid.size());
  for (int k = 0; k < c.grid.size(); ++k) s[k] = {c.grid.point(k), c.mc.model.lift(c.grid.point(k).z())};
  if (f == "obj") return emit(o, to_obj(s, c.grid, c.obj_header("surface"))), 0;
  if (f == "csv") return emit(o, to_csv(sample_table(s))), 0;
  json j = c.header("surface");
  j["samples"] = samples_json(s);
  return emit(o, dump(j)), 0;
}

int cmd_omega_check(const Options& o) {
  Context c(o);
  const std::string f = pick_format(o, "json", {"json", "csv"});
  QuadDiff Q = c.mc.Q;
  if (o.rotate != 0.0) {
    const cplx e = std::polar(1.0, o.rotate);
    Q.c2 *= e;
    Q.c1 *= e;
    if (Q.hol) {
      auto h = Q.hol;
      Q.hol = [h, e](cplx z) { return e * h(z); };
    }
  }
  std::vector<PolarPoint> pts;
  for (int k = 0; k < c.grid.size(); ++k) pts.push_back(c.grid.point(k));
  const FactorizationReport fr = factorization_check(c.mc.model, Q, pts);
  // closedness relative to |Omega| / r, with a stencil scaled to the sample radius
  std::vector<double> closed(pts.size());
  const OmegaField om = omega(c.mc.model, Q);
  parallel_for(static_cast<int>(pts.size()), [&](int k) {
    const FormValue v = om.chart(pts[k]);
    const double scale = std::max(v.du.norm(), v.dv.norm()) / pts[k].r;
    closed[k] = closedness_residual(c.mc.model, Q, pts[k], 1e-3 * pts[k].r) / scale;
  });
  double cmax = 0.0;
  for (double x : closed) cmax = std::max(cmax, x);
  if (f == "csv") {
    CsvTable t{{"r", "phi", "imag_kappa", "closedness"}, {}};
    for (std::size_t k = 0; k < pts.size(); ++k) {
      double im = 0.0;
      for (const cplx& x : fr.kappa[k]) im = std::max(im, std::abs(x.imag()));
      t.rows.push_back({pts[k].r, pts[k].phi, im, closed[k]});
    }
    emit(o, to_csv(t));
  } else {
    json j = c.header("omega-check");
    j["rotation"] = o.rotate;
    j["isothermic"] = fr.isothermic;
    j["factorization_residual"] = fr.max_residual;
    j["factorization_scale"] = fr.scale;
    j["closedness_residual"] = cmax;
    j["samples"] = static_cast<int>(pts.size());
    emit(o, dump(j));
  }
  if (!fr.isothermic) {
    std::cerr << "omega-check: (f, Q) is not an isothermic pair, factorization residual "
              << format_double(fr.max_residual) << "\n";
    return 2;
  }
  return 0;
}

std::vector<std::string> limit_comments(const std::optional<LimitData>& l) {
  if (!l) return {};
  std::ostringstream s;
  s << "limit " << to_string(l->report.classification) << " regime=" << to_string(l->regime)
    << " final_distance=" << format_double(l->report.final_distance) << " oscillation=" << format_double(l->report.oscillation);
  std::vector<std::string> out{s.str()};
  if (l->report.limit.size()) {
    std::ostringstream p;
    p << "limit_point";
    for (int i = 0; i < l->report.limit.size(); ++i) p << " " << format_double(l->report.limit[i]);
    out.push_back(p.str());
  }
  return out;
}

template <class Result>
int emit_transform(const Context& c, const std::string& name, const Result& r) {
  const std::string f = pick_format(c.opt, "obj", {"obj", "csv", "json"});
  if (f == "obj") {
    std::vector<std::string> com = c.obj_header(name);
    for (auto& s : limit_comments(r.limit)) com.push_back(s);
    emit(c.opt, to_obj(r.samples, c.grid, com));
  } else if (f == "csv") {
    emit(c.opt, to_csv(sample_table(r.samples)));
  } else {
    json j = c.header(name);
    j["grid"] = json{{"nr", c.grid.nr}, {"nphi", c.grid.nphi}, {"phimax", c.grid.phimax}, {"rmin", c.grid.rmin},
                     {"rmax", c.grid.rmax}};
    j["samples"] = samples_json(r.samples);
    if (r.limit) j["limit"] = to_json(*r.limit);
    emit(c.opt, dump(j));
  }
  if (r.limit) std::cerr << name << ": limit " << to_string(r.limit->report.classification) << "\n";
  return 0;
}

int cmd_calapso(const Options& o) {
  Context c(o);
  return emit_transform(c, "calapso", calapso(c.mc.model, c.mc.Q, o.lambda, c.base, c.grid, c.topt));
}

int cmd_darboux(const Options& o) {
  Context c(o);
  if (o.lambda == 0.0) throw validation_error("darboux: lambda must be nonzero");
  const Vec init = c.init_point();
  DarbouxResult r = darboux(c.mc.model, c.mc.Q, o.lambda, c.base, init, c.grid, c.topt);
  return emit_transform(c, "darboux", r);
}

StructureReport regular_structure(const Context& c) {
  StructureReport r;
  r.regime = to_string(PoleRegime::regular);
  r.lambda = r.lambda_eff = c.opt.lambda;
  r.base = c.base;
  const Primitive P = monodromy(omega(c.mc.model, c.mc.Q).scaled(c.opt.lambda), c.base, c.topt.integ);
  r.monodromy = P.value;
  r.monodromy_error = P.error_estimate;
  r.eigenvalues = eigenvalues(P.value);
  r.expected.assign(c.mc.model.dim(), 1.0);
  r.metrics.push_back({"spectrum_mismatch", spectrum_mismatch(r.eigenvalues, r.expected)});
  r.metrics.push_back({"identity_residual", (P.value - Mat::Identity(P.value.rows(), P.value.cols())).norm()});
  return r;
}

int cmd_monodromy(const Options& o) {
  Context c(o);
  const std::string f = pick_format(o, "json", {"json", "csv"});
  const int order = c.mc.Q.pole_order();
  const StructureReport r = order == 2   ? so_monodromy_structure(c.mc.model, c.mc.Q, o.lambda, c.base, c.topt)
                            : order == 1 ? fo_monodromy_structure(c.mc.model, c.mc.Q, o.lambda, c.base, c.topt)
                                         : regular_structure(c);
  if (f == "csv") {
    CsvTable t{{"index", "re", "im"}, {}};
    for (std::size_t k = 0; k < r.eigenvalues.size(); ++k)
      t.rows.push_back({static_cast<double>(k), r.eigenvalues[k].real(), r.eigenvalues[k].imag()});
    return emit(o, to_csv(t)), 0;
  }
  json j = c.header("monodromy");
  j["report"] = to_json(r);
  return emit(o, dump(j)), 0;
}

int cmd_limits(const Options& o) {
  Context c(o);
  if (o.study == "limit-set") {
    const std::string f = pick_format(o, "json", {"json", "csv"});
    const LimitSetDarbouxStudy st = darboux_limit_set_study(c.mc.model, c.mc.Q, o.lambda, c.base, 3, c.topt);
    if (f == "csv") {
      CsvTable t{{"subsequence", "r", "distance", "residual"}, {}};
      for (std::size_t k = 0; k < st.radii_a.size(); ++k) t.rows.push_back({0.0, st.radii_a[k], st.dist_a[k], st.residual_a[k]});
      for (std::size_t k = 0; k < st.radii_b.size(); ++k) t.rows.push_back({1.0, st.radii_b[k], st.dist_b[k], st.residual_b[k]});
      return emit(o, to_csv(t)), 0;
    }
    json j = c.header("limits");
    j["study"] = "limit-set";
    j["report"] = to_json(st);
    return emit(o, dump(j)), 0;
  }
  if (o.study != "point") throw validation_error("--study expects point or limit-set");
  const std::string f = pick_format(o, "csv", {"csv", "json"});
  LimitData l;
  json extra;
  if (o.transform == "calapso") {
    l = calapso_limit(c.mc.model, c.mc.Q, o.lambda, c.base, c.topt);
  } else if (o.transform == "darboux") {
    if (o.lambda == 0.0) throw validation_error("darboux: lambda must be nonzero");
    const Vec init = c.init_point();
    l = darboux_limit(c.mc.model, c.mc.Q, o.lambda, c.base, init, c.topt);
    extra = to_json(init);
  } else {
    throw validation_error("--transform expects calapso or darboux");
  }
  if (f == "csv") return emit(o, to_csv(convergence_table(l.report))), 0;
  json j = c.header("limits");
  j["transform"] = o.transform;
  if (!extra.is_null()) j["init"] = extra;
  j["report"] = to_json(l);
  return emit(o, dump(j)), 0;
}

int cmd_pushforward(const Options& o) {
  Context c(o);
  pick_format(o, "json", {"json"});
  TransformKind kind;
  std::optional<Vec> init;
  if (o.kind == "calapso") {
    kind = TransformKind::calapso;
  } else if (o.kind == "darboux") {
    kind = TransformKind::darboux;
    init = c.init_point();
  } else {
    throw validation_error("--kind expects calapso or darboux");
  }
  const PushforwardVerdict v = pushforward_check(c.mc.model, c.mc.Q, o.lambda, o.j, kind, init, c.base, c.topt);
  json j = c.header("pushforward");
  if (init) j["init"] = to_json(*init);
  j["report"] = to_json(v);
  return emit(o, dump(j)), 0;
}

int cmd_zero_smoke(const Options& o) {
  Context c(o);
  const std::string f = pick_format(o, "json", {"json", "csv"});
  const ZeroCaseReport z = zero_case_smoke(c.mc.model, c.mc.Q, o.lambda, c.base, c.init_point(), c.topt);
  if (f == "csv") {
    CsvTable t{{"r", "differential_norm"}, {}};
    for (const auto& [r, n] : z.darboux_differential) t.rows.push_back({r, n});
    return emit(o, to_csv(t)), 0;
  }
  json j = c.header("zero-smoke");
  j["report"] = to_json(z);
  return emit(o, dump(j)), 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Darboux and Calapso transforms of meromorphically isothermic surfaces"};
  app.require_subcommand(1);
  Options o;
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> cmds;

  auto common = [&](CLI::App* s) {
    s->add_option("--model", o.model, "preset name, inline JSON descriptor or JSON file")->capture_default_str();
    s->add_option("--lambda", o.lambda, "spectral parameter")->capture_default_str();
    s->add_option("--base", o.base, "base point r,phi")->capture_default_str();
    s->add_option("--grid", o.grid, "nr,nphi,phimax")->capture_default_str();
    s->add_option("--schedule", o.schedule, "radial schedule length")->capture_default_str();
    s->add_option("--steps", o.steps, "RK4 steps per unit length before refinement")->capture_default_str();
    s->add_option("--tol", o.tol, "relative integration tolerance")->capture_default_str();
    s->add_option("--rmin", o.rmin, "smallest grid radius")->capture_default_str();
    s->add_option("--out", o.out, "output path (stdout when omitted)");
    s->add_option("--format", o.format, "obj, json or csv");
    s->add_option("--seed", o.seed, "seed for random initial points")->capture_default_str();
  };
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    CLI::App* s = app.add_subcommand(name, help);
    common(s);
    cmds.push_back({s, fn});
    return s;
  };
  add("surface", "sample the base surface", cmd_surface);
  add("omega-check", "factorization and closedness report", cmd_omega_check)
      ->add_option("--rotate-q", o.rotate, "multiply Q by exp(i angle) (negative control)");
  add("calapso", "Calapso transform on the grid", cmd_calapso);
  add("darboux", "Darboux transform on the grid", cmd_darboux)
      ->add_option("--init", o.init, "random, limit, w-plus, w-minus, limit-set or n+2 numbers")
      ->capture_default_str();
  CLI::App* mono = add("monodromy", "monodromy structure report", cmd_monodromy);
  (void)mono;
  CLI::App* lim = add("limits", "convergence tables towards the pole", cmd_limits);
  lim->add_option("--transform", o.transform, "calapso or darboux")->capture_default_str();
  lim->add_option("--init", o.init, "Darboux init")->capture_default_str();
  lim->add_option("--study", o.study, "point or limit-set")->capture_default_str();
  CLI::App* pf = add("pushforward", "pushforward verdict for the j-fold cover", cmd_pushforward);
  pf->add_option("--j", o.j, "cover index")->capture_default_str();
  pf->add_option("--kind", o.kind, "calapso or darboux")->capture_default_str();
  pf->add_option("--init", o.init, "Darboux init")->capture_default_str();
  add("zero-smoke", "transforms through a zero of Q", cmd_zero_smoke)
      ->add_option("--init", o.init, "Darboux init")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    for (auto& [s, fn] : cmds)
      if (s->parsed()) return fn(o);
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const convergence_error& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

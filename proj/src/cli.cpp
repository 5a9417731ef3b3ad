#include "rieszw/cli.hpp"

#include "rieszw/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

namespace rieszw {

namespace fs = std::filesystem;
using nlohmann::json;

double RunConfig::q() const { return 1.0 / (1.0 / p - exponents.alpha / n); }

const ExponentProfile& RunConfig::kernel() const {
  if (!has_exponents) throw ConfigError("exponents: missing required field");
  return exponents;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) config_error(join(path, k), "unknown field");
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "expected a finite number");
  return v;
}

double number(const json& obj, const std::string& path, const std::string& key, std::optional<double> fallback = {}) {
  if (const auto* v = find(obj, key)) return as_number(*v, join(path, key));
  if (!fallback) config_error(join(path, key), "missing required field");
  return *fallback;
}

int integer(const json& obj, const std::string& path, const std::string& key, std::optional<int> fallback = {}) {
  if (const auto* v = find(obj, key)) {
    if (!v->is_number_integer()) config_error(join(path, key), "expected an integer");
    return v->get<int>();
  }
  if (!fallback) config_error(join(path, key), "missing required field");
  return *fallback;
}

std::string text(const json& obj, const std::string& path, const std::string& key,
                 std::optional<std::string> fallback = {}) {
  if (const auto* v = find(obj, key)) {
    if (!v->is_string()) config_error(join(path, key), "expected a string");
    return v->get<std::string>();
  }
  if (!fallback) config_error(join(path, key), "missing required field");
  return *fallback;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], index_path(path, i)));
  return out;
}

Point point(const json& j, const std::string& path, int n) {
  const auto v = numbers(j, path);
  if (v.size() != static_cast<std::size_t>(n)) config_error(path, "expected " + std::to_string(n) + " coordinates");
  return make_point(v);
}

Ball ball(const json& j, const std::string& path, int n) {
  expect_object(j, path);
  allow_keys(j, path, {"center", "radius"});
  const auto* c = find(j, "center");
  if (!c) config_error(join(path, "center"), "missing required field");
  const double r = number(j, path, "radius");
  if (!(r > 0.0)) config_error(join(path, "radius"), "must be positive");
  return Ball(point(*c, join(path, "center"), n), r, n);
}

WeightSpec parse_weight(const json& j, const std::string& path, int n, const fs::path& base) {
  expect_object(j, path);
  allow_keys(j, path, {"kind", "a", "factors", "path", "power", "scale"});
  const std::string kind = text(j, path, "kind");
  std::optional<WeightSpec> w;
  if (kind == "constant") {
    w = WeightSpec::constant(n);
  } else if (kind == "power") {
    w = WeightSpec::power_weight(n, number(j, path, "a"));
  } else if (kind == "log_example") {
    w = WeightSpec::log_example(n);
  } else if (kind == "product") {
    const auto* f = find(j, "factors");
    const std::string fp = join(path, "factors");
    if (!f || !f->is_array() || f->empty()) config_error(fp, "expected a nonempty array");
    ProductPowerWeight pw;
    for (std::size_t i = 0; i < f->size(); ++i) {
      const auto& e = (*f)[i];
      const std::string ep = index_path(fp, i);
      expect_object(e, ep);
      allow_keys(e, ep, {"exponent", "center"});
      const auto* c = find(e, "center");
      pw.factors.push_back({number(e, ep, "exponent"), c ? point(*c, join(ep, "center"), n) : Point::Zero()});
    }
    w = WeightSpec(pw, n);
  } else if (kind == "tabulated") {
    fs::path p = text(j, path, "path");
    if (p.is_relative()) p = base / p;
    try {
      w = WeightSpec(load_tabulated_csv(p, n), n);
    } catch (const Error& e) {
      config_error(join(path, "path"), e.what());
    }
  } else {
    config_error(join(path, "kind"), "unknown weight kind '" + kind + "'");
  }
  const double power = number(j, path, "power", 1.0);
  const double scale = number(j, path, "scale", 1.0);
  if (!(scale > 0.0)) config_error(join(path, "scale"), "must be positive");
  WeightSpec out = *w;
  if (power != 1.0) out = out.pow(power);
  if (scale != 1.0) out = out.scaled(scale);
  return out;
}

MatrixFamily parse_matrices(const json& j, const std::string& path, int n) {
  expect_object(j, path);
  allow_keys(j, path, {"entries", "pairwise_invertible", "condition_cap"});
  const auto* e = find(j, "entries");
  const std::string ep = join(path, "entries");
  if (!e || !e->is_array() || e->empty()) config_error(ep, "expected a nonempty array of matrices");
  std::vector<std::vector<double>> entries;
  for (std::size_t i = 0; i < e->size(); ++i) {
    auto v = numbers((*e)[i], index_path(ep, i));
    if (v.size() != static_cast<std::size_t>(n * n)) {
      config_error(index_path(ep, i), "expected " + std::to_string(n * n) + " row-major entries");
    }
    entries.push_back(std::move(v));
  }
  bool pairwise = false;
  if (const auto* v = find(j, "pairwise_invertible")) {
    if (!v->is_boolean()) config_error(join(path, "pairwise_invertible"), "expected a boolean");
    pairwise = v->get<bool>();
  }
  const double cap = number(j, path, "condition_cap", MatrixFamily::kDefaultConditionCap);
  try {
    return MatrixFamily::from_entries(n, entries, pairwise, cap);
  } catch (const Error& err) {
    config_error(ep, err.what());
  }
}

ExponentProfile parse_exponents(const json& j, const std::string& path, int n, int m) {
  expect_object(j, path);
  allow_keys(j, path, {"alpha", "alphas"});
  const double alpha = number(j, path, "alpha");
  ExponentProfile e;
  const auto* a = find(j, "alphas");
  try {
    if (!a || (a->is_string() && a->get<std::string>() == "equal")) {
      e = ExponentProfile::equal_split(n, alpha, m);
    } else {
      e.n = n;
      e.alpha = alpha;
      e.alphas = numbers(*a, join(path, "alphas"));
      if (e.m() != m) config_error(join(path, "alphas"), "expected one exponent per matrix (" + std::to_string(m) + ")");
    }
    e.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& err) {
    config_error(join(path, a ? "alphas" : "alpha"), err.what());
  }
  return e;
}

QuadratureScheme parse_quadrature(const json& j, const std::string& path) {
  expect_object(j, path);
  allow_keys(j, path, {"resolution", "gauss_points", "policy", "tolerance", "max_refinements"});
  QuadratureScheme q;
  q.resolution = integer(j, path, "resolution", q.resolution);
  q.gauss_points = integer(j, path, "gauss_points", q.gauss_points);
  const std::string pol = text(j, path, "policy", "analytic_cell");
  if (pol == "analytic_cell") {
    q.policy = SingularityPolicy::AnalyticCell;
  } else if (pol == "exclude_and_refine") {
    q.policy = SingularityPolicy::ExcludeAndRefine;
  } else {
    config_error(join(path, "policy"), "expected 'analytic_cell' or 'exclude_and_refine'");
  }
  q.tolerance = number(j, path, "tolerance", q.tolerance);
  q.max_refinements = integer(j, path, "max_refinements", q.max_refinements);
  try {
    q.validate();
  } catch (const Error& err) {
    config_error(path, err.what());
  }
  return q;
}

SampledFunction parse_function(const json& j, const std::string& path, int n, const fs::path& base) {
  expect_object(j, path);
  const std::string kind = text(j, path, "kind");
  if (kind == "indicator") {
    allow_keys(j, path, {"kind", "center", "radius"});
    json b = j;
    b.erase("kind");
    return SampledFunction::indicator(ball(b, path, n));
  }
  if (kind == "csv") {
    allow_keys(j, path, {"kind", "path"});
    fs::path p = text(j, path, "path");
    if (p.is_relative()) p = base / p;
    try {
      return SampledFunction::from_csv(p, n);
    } catch (const Error& e) {
      config_error(join(path, "path"), e.what());
    }
  }
  config_error(join(path, "kind"), "expected 'indicator' or 'csv'");
}

WeightClass parse_class(const std::string& s, const std::string& path) {
  if (s == "A1") return WeightClass::A1;
  if (s == "Ap") return WeightClass::Ap;
  if (s == "Apq") return WeightClass::Apq;
  if (s == "RH") return WeightClass::RH;
  config_error(path, "expected one of A1, Ap, Apq, RH");
}

}  // namespace

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  expect_object(doc, "config");
  allow_keys(doc, "", {"schema_version", "n", "weight", "matrices", "exponents", "theorem", "atoms", "campaign",
                       "quadrature", "estimator", "weights", "sweep", "checks", "verify", "description"});
  RunConfig c;
  c.source = doc;
  const int version = integer(doc, "", "schema_version");
  if (version != kSchemaVersion) {
    config_error("schema_version", "unsupported version " + std::to_string(version) + ", expected " +
                                       std::to_string(kSchemaVersion));
  }
  c.n = integer(doc, "", "n", 1);
  if (c.n != 1 && c.n != 2) config_error("n", "dimension must be 1 or 2");
  const int n = c.n;

  if (const auto* w = find(doc, "weight")) {
    c.weight = parse_weight(*w, "weight", n, base_dir);
  } else {
    c.weight = WeightSpec::constant(n);
  }
  c.matrices = MatrixFamily::identity(n);
  if (const auto* m = find(doc, "matrices")) c.matrices = parse_matrices(*m, "matrices", n);
  c.exponents.n = n;
  if (const auto* e = find(doc, "exponents")) {
    c.exponents = parse_exponents(*e, "exponents", n, c.matrices.size());
    c.has_exponents = true;
  }

  if (const auto* t = find(doc, "theorem")) {
    if (!t->is_string()) config_error("theorem", "expected a string");
    const auto s = t->get<std::string>();
    if (s == "thm1") {
      c.theorem = Theorem::Thm1;
    } else if (s == "ta") {
      c.theorem = Theorem::Ta;
    } else if (s == "corollary") {
      c.theorem = Theorem::Corollary;
    } else {
      config_error("theorem", "expected 'thm1', 'ta' or 'corollary'");
    }
  }

  if (const auto* a = find(doc, "atoms")) {
    expect_object(*a, "atoms");
    if (find(*a, "q")) config_error("atoms.q", "q is derived from p, alpha and n and cannot be set");
    allow_keys(*a, "atoms", {"p", "s", "p0", "d", "weight_power", "input"});
    c.p = number(*a, "atoms", "p", 1.0);
    if (!(c.p > 0.0 && c.p <= 1.0)) config_error("atoms.p", "must lie in (0, 1]");
    c.s = number(*a, "atoms", "s", 0.0);
    if (const auto* v = find(*a, "p0")) {
      if (!(v->is_string() && v->get<std::string>() == "auto")) {
        c.p0 = as_number(*v, "atoms.p0");
        if (!(c.p0 > 1.0)) config_error("atoms.p0", "must exceed 1");
      }
    }
    if (const auto* v = find(*a, "d")) {
      if (!(v->is_string() && v->get<std::string>() == "auto")) {
        c.d = integer(*a, "atoms", "d");
        if (c.d < 0) config_error("atoms.d", "must be non-negative");
      }
    }
    c.weight_power = number(*a, "atoms", "weight_power", 1.0);
    if (const auto* v = find(*a, "input")) {
      if (!v->is_string()) config_error("atoms.input", "expected a string");
      c.atoms_input = v->get<std::string>();
      if (c.atoms_input.is_relative()) c.atoms_input = base_dir / c.atoms_input;
    }
  }
  if (c.exponents.alpha > 0.0 && !(c.p < n / c.exponents.alpha)) config_error("atoms.p", "must be below n / alpha");

  if (const auto* cs = find(doc, "campaign")) {
    expect_object(*cs, "campaign");
    allow_keys(*cs, "campaign", {"count", "seed", "radii", "centers", "max_retries"});
    c.campaign.count = integer(*cs, "campaign", "count", 50);
    if (c.campaign.count < 1) config_error("campaign.count", "must be positive");
    if (const auto* s = find(*cs, "seed")) {
      if (!s->is_number_unsigned()) config_error("campaign.seed", "expected a non-negative integer");
      c.campaign.seed = s->get<std::uint64_t>();
    }
    c.campaign.radii = {0.25, 1.0, 4.0};
    if (const auto* r = find(*cs, "radii")) c.campaign.radii = numbers(*r, "campaign.radii");
    if (c.campaign.radii.empty()) config_error("campaign.radii", "expected at least one radius");
    for (std::size_t i = 0; i < c.campaign.radii.size(); ++i) {
      if (!(c.campaign.radii[i] > 0.0)) config_error(index_path("campaign.radii", i), "must be positive");
    }
    c.campaign.centers = {Point::Zero()};
    if (const auto* cc = find(*cs, "centers")) {
      if (!cc->is_array() || cc->empty()) config_error("campaign.centers", "expected a nonempty array of points");
      c.campaign.centers.clear();
      for (std::size_t i = 0; i < cc->size(); ++i) {
        c.campaign.centers.push_back(point((*cc)[i], index_path("campaign.centers", i), n));
      }
    }
    c.campaign.max_retries = integer(*cs, "campaign", "max_retries", 8);
  } else {
    c.campaign.count = 50;
    c.campaign.radii = {0.25, 1.0, 4.0};
  }

  if (const auto* q = find(doc, "quadrature")) c.quadrature = parse_quadrature(*q, "quadrature");

  if (const auto* e = find(doc, "estimator")) {
    expect_object(*e, "estimator");
    allow_keys(*e, "estimator", {"levels", "refine_factor", "growth_threshold", "base_resolution", "index_tol"});
    c.estimator.levels = integer(*e, "estimator", "levels", c.estimator.levels);
    if (c.estimator.levels < 1) config_error("estimator.levels", "must be positive");
    c.estimator.refine_factor = integer(*e, "estimator", "refine_factor", 0);
    c.estimator.growth_threshold = number(*e, "estimator", "growth_threshold", 4.0);
    c.estimator.base_resolution = integer(*e, "estimator", "base_resolution", 0);
    c.index_tol = number(*e, "estimator", "index_tol", 1e-2);
    if (!(c.index_tol > 0.0)) config_error("estimator.index_tol", "must be positive");
  }

  if (const auto* v = find(doc, "verify")) {
    expect_object(*v, "verify");
    allow_keys(*v, "verify", {"fine_cells", "drift"});
    c.fine_cells = number(*v, "verify", "fine_cells", 16.0);
    c.drift = number(*v, "verify", "drift", 4.0);
    if (!(c.fine_cells >= 1.0)) config_error("verify.fine_cells", "must be at least 1");
    if (!(c.drift > 1.0)) config_error("verify.drift", "must exceed 1");
  }

  if (const auto* w = find(doc, "weights")) {
    expect_object(*w, "weights");
    allow_keys(*w, "weights", {"classes", "indices"});
    if (const auto* cl = find(*w, "classes")) {
      if (!cl->is_array()) config_error("weights.classes", "expected an array");
      for (std::size_t i = 0; i < cl->size(); ++i) {
        const auto& e = (*cl)[i];
        const auto path = index_path("weights.classes", i);
        expect_object(e, path);
        allow_keys(e, path, {"class", "p", "q", "s"});
        ClassRequest r;
        r.cls = parse_class(text(e, path, "class"), join(path, "class"));
        r.p = number(e, path, "p", 2.0);
        r.q = number(e, path, "q", 0.0);
        r.s = number(e, path, "s", 2.0);
        if (r.cls == WeightClass::Apq && !find(e, "q")) config_error(join(path, "q"), "missing required field");
        c.classes.push_back(r);
      }
    }
    if (const auto* ix = find(*w, "indices")) {
      if (!ix->is_boolean()) config_error("weights.indices", "expected a boolean");
      c.indices = ix->get<bool>();
    }
  } else {
    c.classes.push_back({WeightClass::A1});
    for (double p : {1.25, 1.5, 2.0, 3.0}) c.classes.push_back({WeightClass::Ap, p});
    c.classes.push_back({WeightClass::RH, 2.0, 0.0, 2.0});
  }

  if (const auto* s = find(doc, "sweep")) {
    expect_object(*s, "sweep");
    allow_keys(*s, "sweep", {"function", "x", "points"});
    c.sweep.present = true;
    const auto* f = find(*s, "function");
    if (!f) config_error("sweep.function", "missing required field");
    c.sweep.function = parse_function(*f, "sweep.function", n, base_dir);
    if (const auto* x = find(*s, "x")) {
      expect_object(*x, "sweep.x");
      allow_keys(*x, "sweep.x", {"from", "to", "count"});
      if (n != 1) config_error("sweep.x", "a lattice range needs n = 1; use sweep.points");
      const double a = number(*x, "sweep.x", "from");
      const double b = number(*x, "sweep.x", "to");
      const int k = integer(*x, "sweep.x", "count");
      if (k < 0) config_error("sweep.x.count", "must be non-negative");
      for (int i = 0; i < k; ++i) c.sweep.xs.emplace_back(k == 1 ? a : a + (b - a) * i / (k - 1), 0.0);
    }
    if (const auto* pts = find(*s, "points")) {
      if (!pts->is_array()) config_error("sweep.points", "expected an array of points");
      for (std::size_t i = 0; i < pts->size(); ++i) c.sweep.xs.push_back(point((*pts)[i], index_path("sweep.points", i), n));
    }
  }

  if (const auto* ch = find(doc, "checks")) {
    if (!ch->is_array()) config_error("checks", "expected an array");
    static const char* known[] = {"theorem", "pointwise", "containment", "rh_ball", "index_lemmas", "maximal",
                                  "quasi_norm"};
    for (std::size_t i = 0; i < ch->size(); ++i) {
      const auto& e = (*ch)[i];
      const auto path = index_path("checks", i);
      CheckRequest r;
      if (e.is_string()) {
        r.name = e.get<std::string>();
      } else if (e.is_object()) {
        r.name = text(e, path, "check");
        r.options = e;
        r.options.erase("check");
      } else {
        config_error(path, "expected a check name or an object with a 'check' field");
      }
      bool ok = false;
      for (const char* k : known) ok = ok || r.name == k;
      if (!ok) config_error(path, "unknown check '" + r.name + "'");
      c.checks.push_back(std::move(r));
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  std::string config_hash;
  std::ostream& out;
  std::ostream& err;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json envelope(const Context& c, const std::string& command) {
  return json{{"schema_version", kSchemaVersion},
              {"command", command},
              {"config_hash", c.config_hash},
              {"seed", c.cfg.campaign.seed},
              {"meta", {{"timestamp", timestamp()}}}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ConfigError(path.string() + ": cannot write output");
  f << j.dump(2) << "\n";
}

json class_report_json(const WeightClassReport& r) {
  const int n = r.witness.n;
  return json{{"class", r.label},
              {"p", r.p},
              {"q", r.q},
              {"s", r.s},
              {"constant", jnum(r.constant)},
              {"series", [&] {
                 auto a = json::array();
                 for (double v : r.series) a.push_back(jnum(v));
                 return a;
               }()},
              {"verdict", to_string(r.verdict)},
              {"reason", r.reason},
              {"balls", r.ball_count},
              {"witness", {{"center", std::vector<double>(r.witness.center.data(), r.witness.center.data() + n)},
                           {"radius", r.witness.radius}}}};
}

int cmd_weights_classify(Context& c) {
  const auto& cfg = c.cfg;
  const auto& w = cfg.weight;
  const auto family = BallFamily::for_weight(w);
  json doc = envelope(c, "weights classify");
  doc["weight"] = w.describe();
  auto reports = json::array();
  for (const auto& r : cfg.classes) {
    WeightClassReport rep;
    switch (r.cls) {
      case WeightClass::A1:
        rep = estimate_A1_constant(w, family, cfg.quadrature, cfg.estimator);
        break;
      case WeightClass::Ap:
        rep = estimate_Ap_constant(w, r.p, family, cfg.quadrature, cfg.estimator);
        break;
      case WeightClass::Apq:
        rep = estimate_Apq_constant(w, r.p, r.q, family, cfg.quadrature, cfg.estimator);
        break;
      case WeightClass::RH:
        rep = estimate_RH_constant(w, r.s, family, cfg.quadrature, cfg.estimator);
        break;
    }
    c.out << rep.label << ": " << to_string(rep.verdict) << ", constant " << rep.constant << "\n";
    reports.push_back(class_report_json(rep));
  }
  doc["reports"] = reports;
  if (cfg.indices) {
    const auto ix = critical_indices(w, family, cfg.quadrature, cfg.index_tol, 1024.0, cfg.estimator);
    doc["critical_indices"] = {{"q_tilde", jnum(ix.q_tilde)}, {"q_lo", jnum(ix.q_lo)},   {"q_hi", jnum(ix.q_hi)},
                               {"q_unbounded", ix.q_unbounded}, {"r_w", jnum(ix.r_w)}, {"r_lo", jnum(ix.r_lo)},
                               {"r_hi", jnum(ix.r_hi)},      {"tol", ix.tol}};
    c.out << "q~_w = " << ix.q_tilde << (ix.q_unbounded ? " (unbounded)" : "") << ", r_w = " << ix.r_w << "\n";
  }
  write_json(c.out_dir / "weights.json", doc);
  return kExitPass;
}

int cmd_operator_sweep(Context& c) {
  const auto& cfg = c.cfg;
  if (!cfg.sweep.present || cfg.sweep.xs.empty()) {
    c.out << "nothing to sweep\n";
    return kExitPass;
  }
  const auto vals = apply_T_batch(cfg.sweep.function, cfg.sweep.xs, cfg.kernel(), cfg.matrices, cfg.quadrature);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (cfg.n == 1) {
      rows.push_back({cfg.sweep.xs[i][0], vals[i]});
    } else {
      rows.push_back({cfg.sweep.xs[i][0], cfg.sweep.xs[i][1], vals[i]});
    }
  }
  const std::vector<std::string> header =
      cfg.n == 1 ? std::vector<std::string>{"x", "Tf"} : std::vector<std::string>{"x", "y", "Tf"};
  write_csv(c.out_dir / "sweep.csv", header, rows);
  c.out << "wrote " << rows.size() << " rows to " << (c.out_dir / "sweep.csv").string() << "\n";
  return kExitPass;
}

AtomParams generation_params(const Context& c) {
  const auto& cfg = c.cfg;
  AtomParams params{cfg.weight.pow(cfg.weight_power), cfg.p, cfg.p0, cfg.d};
  if (cfg.p0 > 0.0 && cfg.d >= 0) return params;
  const auto range = admissible_params(params.weight, cfg.p, BallFamily::for_weight(params.weight), cfg.quadrature,
                                       cfg.index_tol);
  if (params.d < 0) params.d = range.d_min;
  if (!(params.p0 > 0.0)) params.p0 = std::max(2.0, 2.0 * range.p0_threshold);
  params.validate(range);
  return params;
}

json validation_json(const AtomValidation& v) {
  return json{{"a1", v.a1},
              {"a2", v.a2},
              {"a3", v.a3},
              {"support_slack", jnum(v.support_slack)},
              {"norm", jnum(v.norm)},
              {"norm_bound", jnum(v.norm_bound)},
              {"norm_margin", jnum(v.norm_margin)},
              {"moment_worst", jnum(v.moment_worst)},
              {"moment_witness", {v.moment_witness.i, v.moment_witness.j}}};
}

int cmd_atoms_gen(Context& c) {
  const auto params = generation_params(c);
  const auto atoms = sample_atom_campaign(params, c.cfg.campaign, c.cfg.quadrature);
  std::ofstream f(c.out_dir / "atoms.jsonl");
  for (const auto& a : atoms) f << to_json(a).dump() << "\n";
  json doc = envelope(c, "atoms gen");
  doc["count"] = atoms.size();
  doc["params"] = {{"p", params.p}, {"p0", params.p0}, {"d", params.d}, {"weight", params.weight.describe()}};
  doc["atoms_file"] = "atoms.jsonl";
  write_json(c.out_dir / "atoms_manifest.json", doc);
  c.out << "generated " << atoms.size() << " atoms (p = " << params.p << ", p0 = " << params.p0
        << ", d = " << params.d << ")\n";
  return kExitPass;
}

int cmd_atoms_validate(Context& c, fs::path input) {
  if (input.empty()) input = c.cfg.atoms_input.empty() ? c.out_dir / "atoms.jsonl" : c.cfg.atoms_input;
  std::ifstream in(input);
  if (!in) throw ConfigError("atoms.input: cannot open " + input.string());
  const auto w = c.cfg.weight.pow(c.cfg.weight_power);
  json doc = envelope(c, "atoms validate");
  auto rows = json::array();
  std::string line;
  int lineno = 0;
  int failed = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::optional<Atom> atom;
    try {
      atom = atom_from_json(json::parse(line), w);
    } catch (const std::exception& e) {
      throw ConfigError(input.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const auto v = validate_atom(*atom, atom->params, c.cfg.quadrature);
    auto row = validation_json(v);
    row["seed"] = atom->seed;
    row["pass"] = v.pass();
    rows.push_back(row);
    failed += v.pass() ? 0 : 1;
  }
  doc["atoms"] = rows;
  doc["failed"] = failed;
  write_json(c.out_dir / "validation.json", doc);
  c.out << rows.size() - failed << " of " << rows.size() << " atoms pass\n";
  return failed == 0 ? kExitPass : kExitCheckFailed;
}

// --- verify checks ---------------------------------------------------------

double opt_number(const CheckRequest& r, const std::string& key, double fallback) {
  const std::string path = "checks." + r.name;
  return number(r.options, path, key, fallback);
}

std::vector<Ball> opt_balls(const CheckRequest& r, const std::string& key, const RunConfig& cfg) {
  std::vector<Ball> out;
  if (const auto* t = find(r.options, key)) {
    const std::string path = "checks." + r.name + "." + key;
    if (!t->is_array() || t->empty()) config_error(path, "expected a nonempty array of balls");
    for (std::size_t i = 0; i < t->size(); ++i) out.push_back(ball((*t)[i], index_path(path, i), cfg.n));
    return out;
  }
  for (const auto& c : cfg.campaign.centers) {
    for (double r0 : cfg.campaign.radii) out.emplace_back(c, r0, cfg.n);
  }
  return out;
}

TheoremSpec theorem_spec(const RunConfig& cfg) {
  TheoremSpec s;
  s.theorem = cfg.theorem;
  s.w = cfg.weight;
  s.e = cfg.kernel();
  s.a = cfg.matrices;
  s.p = cfg.p;
  s.s = cfg.s;
  s.p0 = cfg.p0;
  s.d = cfg.d;
  s.campaign = cfg.campaign;
  s.scheme = cfg.quadrature;
  s.fine_cells = cfg.fine_cells;
  s.drift = cfg.drift;
  s.index_tol = cfg.index_tol;
  s.estimator = cfg.estimator;
  return s;
}

void write_pointwise_witness(const fs::path& path, const VerificationReport& rep, int n) {
  std::vector<std::vector<double>> rows;
  const auto& per = rep.details["per_radius"];
  const std::size_t nr = per.size() / 2;
  for (std::size_t k = 0; k < per.size(); ++k) {
    const auto& w = per[k]["witness"];
    for (std::size_t i = 0; i < w["lhs"].size(); ++i) {
      const auto val = [](const json& v) { return v.is_number() ? v.get<double>() : kInfinity; };
      const double lhs = val(w["lhs"][i]);
      const double rhs = val(w["rhs_tmalpha"][i]);
      std::vector<double> row{per[k]["radius"].get<double>(), k < nr ? 0.0 : 1.0, w["x0"][i].get<double>()};
      if (n == 2) row.push_back(0.0);
      row.insert(row.end(), {w["region"][i].get<double>(), lhs, rhs, safe_ratio(lhs, rhs)});
      rows.push_back(std::move(row));
    }
  }
  std::vector<std::string> header{"radius", "level", "x"};
  if (n == 2) header.push_back("y");
  header.insert(header.end(), {"region", "lhs", "rhs", "ratio"});
  write_csv(path, header, rows);
}

VerificationReport run_check(const CheckRequest& r, Context& c) {
  const auto& cfg = c.cfg;
  const auto& q = cfg.quadrature;
  const std::string path = "checks." + r.name;
  if (r.name == "theorem") {
    allow_keys(r.options, path, {});
    return run_theorem_campaign(theorem_spec(cfg));
  }
  if (r.name == "pointwise") {
    allow_keys(r.options, path, {"center", "radii"});
    const Point center = find(r.options, "center") ? point(r.options["center"], path + ".center", cfg.n)
                                                   : cfg.campaign.centers.front();
    const auto radii = find(r.options, "radii") ? numbers(r.options["radii"], path + ".radii") : cfg.campaign.radii;
    const AtomParams params{cfg.weight, cfg.p, cfg.p0 > 0.0 ? cfg.p0 : 2.0, std::max(cfg.d, 0)};
    const auto seed = cfg.campaign.seed;
    auto rep = pointwise_bound_study([&](const Ball& b) { return construct_atom(b, params, seed, q); }, params,
                                     center, radii, cfg.kernel(), cfg.matrices, q, cfg.drift);
    write_pointwise_witness(c.out_dir / "pointwise_witness.csv", rep, cfg.n);
    return rep;
  }
  if (r.name == "containment") {
    allow_keys(r.options, path, {"pairs", "balls"});
    const int pairs = static_cast<int>(opt_number(r, "pairs", 1000.0));
    std::mt19937_64 rng(cfg.campaign.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto balls = opt_balls(r, "balls", cfg);
    const int per_ball = std::max(1, pairs / static_cast<int>(balls.size()));
    const int n_xi = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(per_ball))));
    const int n_x = std::max(1, per_ball / n_xi);
    VerificationReport out;
    out.check_id = "containment_step";
    out.worst = kInfinity;
    out.status = Status::Pass;
    const double M = cfg.matrices.norm_bound();
    const auto direction = [&]() -> Point {
      if (cfg.n == 1) return Point(u(rng) < 0.5 ? -1.0 : 1.0, 0.0);
      const double t = 2.0 * std::numbers::pi * u(rng);
      return Point(std::cos(t), std::sin(t));
    };
    for (const auto& b : balls) {
      std::vector<Point> xis, xs;
      for (int i = 0; i < n_xi; ++i) xis.push_back(b.center + b.radius * std::pow(u(rng), 1.0 / cfg.n) * direction());
      while (static_cast<int>(xs.size()) < n_x) {
        const int k = static_cast<int>(u(rng) * cfg.matrices.size()) % cfg.matrices.size();
        const double t = std::pow(2.0, 4.0 * u(rng));
        const Point x = cfg.matrices.matrix(k) * b.center + t * 2.0 * M * b.radius * direction();
        if (!classify(x, b, cfg.matrices).inside()) xs.push_back(x);
      }
      const auto rep = check_containment_step(b, cfg.matrices, xis, xs);
      out.worst = std::min(out.worst, rep.worst);
      if (!rep.pass()) out.status = Status::Fail;
    }
    out.sample = std::to_string(balls.size() * n_xi * n_x) + " pairs over " + std::to_string(balls.size()) + " balls";
    out.series = {out.worst};
    out.series_labels = {"min factor"};
    return out;
  }
  if (r.name == "rh_ball") {
    allow_keys(r.options, path, {});
    return check_rh_ball_inequality(cfg.weight, cfg.p, cfg.exponents.alpha, BallFamily::for_weight(cfg.weight), q,
                                    cfg.estimator);
  }
  if (r.name == "index_lemmas") {
    allow_keys(r.options, path, {"p", "q"});
    const double p = opt_number(r, "p", cfg.p);
    const double qq = opt_number(r, "q", cfg.exponents.alpha > 0.0 ? cfg.q() : 1.0);
    return check_critical_index_lemmas(cfg.weight, p, qq, BallFamily::for_weight(cfg.weight), q, cfg.index_tol,
                                       cfg.estimator);
  }
  if (r.name == "maximal") {
    allow_keys(r.options, path, {"p", "fractional", "tests", "cells_per_unit"});
    MaximalCheckSpec s;
    s.p = opt_number(r, "p", 2.0);
    bool fractional = false;
    if (const auto* f = find(r.options, "fractional")) {
      if (!f->is_boolean()) config_error(path + ".fractional", "expected a boolean");
      fractional = f->get<bool>();
    }
    if (fractional) {
      s.alpha = cfg.exponents.alpha;
      if (!(s.alpha > 0.0 && s.p < cfg.n / s.alpha)) config_error(path + ".p", "needs 0 < alpha and p < n / alpha");
      s.q = 1.0 / (1.0 / s.p - s.alpha / cfg.n);
    }
    s.tests = opt_balls(r, "tests", cfg);
    s.policy.cells_per_unit = static_cast<int>(opt_number(r, "cells_per_unit", 64.0));
    s.drift = cfg.drift;
    return check_maximal_inequalities(cfg.weight, s, q);
  }
  if (r.name == "quasi_norm") {
    allow_keys(r.options, path, {"lambdas", "p"});
    const auto* l = find(r.options, "lambdas");
    if (!l) config_error(path + ".lambdas", "missing required field");
    const auto lambdas = numbers(*l, path + ".lambdas");
    const double qq = cfg.exponents.alpha > 0.0 ? cfg.q() : cfg.p;
    return check_quasi_norm_assembly(lambdas, qq, opt_number(r, "p", cfg.p));
  }
  config_error(path, "unknown check");
}

int cmd_verify(Context& c) {
  json doc = envelope(c, "verify");
  auto reports = json::array();
  auto failed = json::array();
  auto hypothesis = json::array();
  for (const auto& r : c.cfg.checks) {
    VerificationReport rep;
    try {
      rep = run_check(r, c);
    } catch (const HypothesisFailed& e) {
      rep.check_id = r.name;
      rep.status = Status::HypothesisFailed;
      rep.details["message"] = e.what();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      rep.check_id = r.name;
      rep.status = Status::Fail;
      rep.details["error"] = e.what();
    }
    rep.seed = c.cfg.campaign.seed;
    rep.config_hash = c.config_hash;
    c.out << r.name << ": " << to_string(rep.status) << "\n";
    if (rep.status == Status::HypothesisFailed) {
      hypothesis.push_back({{"check", r.name}, {"message", rep.details.value("message", "")}});
    } else if (rep.status == Status::Fail) {
      failed.push_back(r.name);
    }
    reports.push_back(to_json(rep));
  }
  const int code = !hypothesis.empty() ? kExitHypothesisFailed : (!failed.empty() ? kExitCheckFailed : kExitPass);
  json summary{{"exit_code", code}, {"failed", failed}, {"hypothesis_failed", hypothesis}};
  doc["reports"] = reports;
  doc["summary"] = summary;
  write_json(c.out_dir / "verify_report.json", doc);
  if (code != kExitPass) c.err << summary.dump() << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical harness for generalized Riesz potentials on weighted Hardy spaces", "rieszw"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path = "out";
  int jobs = 0;
  std::string atoms_in;
  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run config")->required();
    cmd->add_option("--seed", seed, "overrides campaign.seed");
    cmd->add_option("--out", out_path, "output directory");
    cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::NonNegativeNumber);
  };
  auto* weights = app.add_subcommand("weights", "weight classes and critical indices")->require_subcommand(1);
  auto* classify_cmd = weights->add_subcommand("classify", "estimate class constants");
  common(classify_cmd);
  auto* op = app.add_subcommand("operator", "operator evaluation")->require_subcommand(1);
  auto* sweep = op->add_subcommand("sweep", "evaluate T f on a lattice");
  common(sweep);
  auto* atoms = app.add_subcommand("atoms", "atom campaigns")->require_subcommand(1);
  auto* gen = atoms->add_subcommand("gen", "sample atoms");
  common(gen);
  auto* validate = atoms->add_subcommand("validate", "validate stored atoms");
  common(validate);
  validate->add_option("--in", atoms_in, "atoms file (JSON lines)");
  auto* verify = app.add_subcommand("verify", "run the configured checks");
  common(verify);

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    Context c{load_config(config_path), out_path, "", out, err};
    if (seed) c.cfg.campaign.seed = *seed;
    json hashed = c.cfg.source;
    hashed["campaign"]["seed"] = c.cfg.campaign.seed;
    c.config_hash = fnv1a_hex(hashed.dump());
    set_worker_count(jobs);
    fs::create_directories(c.out_dir);
    if (classify_cmd->parsed()) return cmd_weights_classify(c);
    if (sweep->parsed()) return cmd_operator_sweep(c);
    if (gen->parsed()) return cmd_atoms_gen(c);
    if (validate->parsed()) return cmd_atoms_validate(c, atoms_in);
    return cmd_verify(c);
  } catch (const ConfigError& e) {
    err << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return kExitConfigError;
  } catch (const HypothesisFailed& e) {
    err << json{{"error", "hypothesis"}, {"message", e.what()}}.dump() << "\n";
    return kExitHypothesisFailed;
  } catch (const std::exception& e) {
    err << json{{"error", "failure"}, {"message", e.what()}}.dump() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace rieszw

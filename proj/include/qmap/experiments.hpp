#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "empirics.hpp"
#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "projection.hpp"
#include "quantize.hpp"
#include "rng.hpp"
#include "sensing.hpp"
#include "solver.hpp"
#include "sources.hpp"
#include "validation.hpp"

namespace qmap::cli {

// Malformed or schema-violating configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  unsigned jobs = 1;
  bool timing = false;  // fill wall_ms; off by default so reruns are byte-identical
};

// ---- schema ----------------------------------------------------------------

namespace schema {

inline json number(std::optional<double> min = std::nullopt, std::optional<double> max = std::nullopt,
                   bool exclusive_min = false) {
  json s{{"type", "number"}};
  if (min) s[exclusive_min ? "exclusiveMinimum" : "minimum"] = *min;
  if (max) s["maximum"] = *max;
  return s;
}
inline json integer(std::optional<long long> min = std::nullopt) {
  json s{{"type", "integer"}};
  if (min) s["minimum"] = *min;
  return s;
}
inline json string() { return {{"type", "string"}}; }
inline json boolean() { return {{"type", "boolean"}}; }
inline json array_of(json items, std::size_t min_items = 1) {
  return {{"type", "array"}, {"items", std::move(items)}, {"minItems", min_items}};
}
inline json object(json props, std::vector<std::string> required) {
  return {{"type", "object"}, {"properties", std::move(props)}, {"required", required}, {"additionalProperties", false}};
}

inline json model() {
  return {{"oneOf",
           {object({{"kind", {{"const", "spike_slab"}}}, {"p", number(0.0, 1.0)}}, {"kind", "p"}),
            object({{"kind", {{"const", "pc_markov"}}}, {"p", number(0.0, 1.0)}}, {"kind", "p"}),
            object({{"kind", {{"const", "table_markov"}}}, {"kernel", {{"type", json::array({"string", "object"})}}}},
                   {"kind", "kernel"})}}};
}

inline json projector() {
  return {{"oneOf",
           {object({{"type", {{"const", "l0"}}}, {"s", integer(0)}, {"s_factor", number(0.0, std::nullopt, true)}},
                   {"type"}),
            object({{"type", {{"const", "constrained"}}}, {"gamma", number(0.0)}, {"delta", number(0.0)}}, {"type"}),
            object({{"type", {{"const", "lagrangian"}}}, {"alpha", number(0.0)}}, {"type", "alpha"})}}};
}

inline json solver_fields() {
  return {{"model", model()},
          {"n", integer(1)},
          {"b", integer(1)},
          {"k", integer(0)},
          {"sigma", number(0.0)},
          {"scale", {{"enum", {"unit", "normalized"}}}},
          {"projector", projector()},
          {"mu", number(0.0, std::nullopt, true)},
          {"mu_scale", number(0.0, std::nullopt, true)},
          {"allow_custom_step", boolean()},
          {"max_iters", integer(1)},
          {"stop_tol", number(0.0)},
          {"trials", integer(1)},
          {"seed", integer(0)},
          {"out", string()}};
}

inline json for_command(const std::string& cmd) {
  json s;
  if (cmd == "recover") {
    json props = solver_fields();
    props["m"] = integer(1);
    props["matrix"] = string();
    props["trace_out"] = string();
    s = object(props, {"model", "n", "b", "projector"});
  } else if (cmd == "phase") {
    json props = solver_fields();
    props["ratios"] = array_of(number(0.0, std::nullopt, true));
    props["m_grid"] = array_of(integer(1));
    props["p_grid"] = array_of(number(0.0, 1.0));
    s = object(props, {"model", "n", "b", "projector"});
  } else if (cmd == "infodim") {
    s = object({{"model", model()}, {"k", integer(0)}, {"b_list", array_of(integer(1))}, {"out", string()}},
               {"model", "b_list"});
  } else if (cmd == "validate") {
    const json trials = integer(1);
    s = object(
        {{"seed", integer(0)},
         {"out", string()},
         {"chi_square", array_of(object({{"m", integer(1)}, {"tau", number(0.0, std::nullopt, true)}, {"trials", trials}},
                                        {"m", "tau", "trials"}))},
         {"inner_product",
          array_of(object({{"alpha", number(-1.0, 1.0)}, {"m", integer(1)}, {"tau", number(0.0, std::nullopt, true)},
                           {"trials", trials}},
                          {"alpha", "m", "tau", "trials"}))},
         {"empirical_deviation",
          array_of(object({{"model", model()},
                           {"n", integer(2)},
                           {"k", integer(1)},
                           {"b", integer(1)},
                           {"epsilon", number(0.0, std::nullopt, true)},
                           {"trials", trials},
                           {"g", integer(1)}},
                          {"model", "n", "k", "b", "epsilon", "trials"}))},
         {"f_minimax", object({{"alpha_points", integer(1)}, {"s_points", integer(1)}}, {})},
         {"gaussian_projection", array_of(object({{"n", integer(2)}, {"trials", integer(2)}}, {"n", "trials"}))}},
        {});
  } else if (cmd == "project") {
    s = object({{"model", model()},
                {"input", string()},
                {"column", string()},
                {"b", integer(1)},
                {"k", integer(0)},
                {"projector", projector()},
                {"out", string()}},
               {"model", "input", "b", "projector"});
  } else {
    throw ConfigError("unknown command '" + cmd + "'");
  }
  s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  s["title"] = "qmap " + cmd + " config";
  return s;
}

inline std::string type_name(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number_float()) return "number";
  return v.type_name();
}

inline bool has_type(const json& v, const std::string& t) {
  if (t == "number") return v.is_number();
  if (t == "integer") return v.is_number_integer() || v.is_number_unsigned() ||
                             (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  return false;
}

// Validates against the subset of JSON Schema produced above. Returns the
// first violation as "<pointer>: <message>", or an empty string.
inline std::string check(const json& v, const json& s, const std::string& at) {
  const std::string where = at.empty() ? "/" : at;
  if (s.contains("const") && v != s["const"]) return where + ": expected " + s["const"].dump();
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) return where + ": expected one of " + s["enum"].dump();
  }
  if (s.contains("oneOf")) {
    std::vector<std::string> errors;
    int passed = 0;
    for (const auto& branch : s["oneOf"]) {
      const std::string e = check(v, branch, at);
      if (e.empty()) ++passed;
      errors.push_back(e);
    }
    if (passed == 1) return "";
    // report the branch whose discriminator matches, if any
    for (std::size_t i = 0; i < errors.size(); ++i) {
      const auto& props = s["oneOf"][i]["properties"];
      for (const char* key : {"kind", "type"}) {
        if (props.contains(key) && v.is_object() && v.contains(key) && v[key] == props[key]["const"]) {
          return errors[i];
        }
      }
    }
    return where + ": does not match any allowed form";
  }
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
    } else {
      ok = has_type(v, s["type"].get<std::string>());
    }
    if (!ok) return where + ": expected " + (s["type"].is_string() ? s["type"].get<std::string>() : s["type"].dump()) +
                     ", got " + type_name(v);
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) return where + ": must be >= " + s["minimum"].dump();
    if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>())) {
      return where + ": must be > " + s["exclusiveMinimum"].dump();
    }
    if (s.contains("maximum") && x > s["maximum"].get<double>()) return where + ": must be <= " + s["maximum"].dump();
  }
  if (v.is_array() && s.contains("items")) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
      return where + ": needs at least " + s["minItems"].dump() + " item(s)";
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string e = check(v[i], s["items"], at + "/" + std::to_string(i));
      if (!e.empty()) return e;
    }
  }
  if (v.is_object() && s.contains("properties")) {
    for (const auto& key : s["required"]) {
      if (!v.contains(key.get<std::string>())) return where + ": missing required key \"" + key.get<std::string>() + "\"";
    }
    for (const auto& [key, val] : v.items()) {
      if (!s["properties"].contains(key)) return at + "/" + key + ": unknown key";
      const std::string e = check(val, s["properties"][key], at + "/" + key);
      if (!e.empty()) return e;
    }
  }
  return "";
}

}  // namespace schema

inline json parse_config(const std::string& text, const std::string& cmd) {
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string err = schema::check(cfg, schema::for_command(cmd), "");
  if (!err.empty()) throw ConfigError("config " + err);
  return cfg;
}

// ---- shared pieces ---------------------------------------------------------

inline SourceModel model_from_config(const json& m) {
  const std::string kind = m.at("kind").get<std::string>();
  try {
    if (kind == "spike_slab") return SourceModel::spike_slab(m.at("p").get<double>());
    if (kind == "pc_markov") return SourceModel::pc_markov(m.at("p").get<double>());
    const json& k = m.at("kernel");
    return SourceModel::table_markov(k.is_string() ? load_kernel(k.get<std::string>()) : kernel_from_json(k));
  } catch (const InputError& e) {
    throw ConfigError(std::string("config /model: ") + e.what());
  }
}

inline SourceModel with_p(const SourceModel& model, double p) {
  switch (model.kind()) {
    case SourceKind::spike_slab: return SourceModel::spike_slab(p);
    case SourceKind::pc_markov: return SourceModel::pc_markov(p);
    case SourceKind::table_markov: break;
  }
  throw ConfigError("config /p_grid: table_markov models have no parameter p");
}

struct Problem {
  SourceModel model;
  QuantKernel kernel;  // at the configured order k
  WeightTable weights;
  int b;
  int k;
};

inline Problem make_problem(const SourceModel& model, int b, int k) {
  const QuantKernel base = quantized_kernel(model, b);
  QuantKernel q = kernel_at_order(base, k);
  WeightTable w = weights_from_kernel(q);
  return {model, std::move(q), std::move(w), b, k};
}

inline Projector projector_from_config(const json& p, const Problem& prob, std::size_t n) {
  const std::string type = p.at("type").get<std::string>();
  if (type == "l0") {
    const bool has_s = p.contains("s"), has_f = p.contains("s_factor");
    if (has_s == has_f) throw ConfigError("config /projector: give exactly one of \"s\" or \"s_factor\"");
    if (has_s) return L0Projector{p.at("s").get<std::size_t>()};
    if (prob.model.kind() == SourceKind::table_markov) {
      throw ConfigError("config /projector/s_factor: needs a model with parameter p");
    }
    // s = ceil(factor * p * n)
    const double s = std::ceil(p.at("s_factor").get<double>() * prob.model.p() * static_cast<double>(n) - 1e-9);
    return L0Projector{static_cast<std::size_t>(std::max(0.0, s))};
  }
  if (type == "constrained") {
    if (p.contains("gamma")) {
      if (p.contains("delta")) throw ConfigError("config /projector: give \"gamma\" or \"delta\", not both");
      return ConstrainedProjector{p.at("gamma").get<double>()};
    }
    return ConstrainedProjector{default_gamma(prob.kernel, prob.k, p.value("delta", 0.1))};
  }
  return LagrangianProjector{p.at("alpha").get<double>()};
}

inline PgdConfig pgd_from_config(const json& c, Projector proj) {
  PgdConfig cfg;
  if (c.contains("mu")) cfg.mu = c.at("mu").get<double>();
  cfg.allow_custom_step = c.value("allow_custom_step", false);
  cfg.max_iters = c.value("max_iters", 200);
  cfg.stop_tol = c.value("stop_tol", 0.0);
  cfg.projector = proj;
  return cfg;
}

// Resolves the step for one matrix shape. "mu_scale" f gives mu = f * paired step.
inline void settle_step(const json& c, const SenseMatrix& shape, PgdConfig& cfg) {
  try {
    if (c.contains("mu_scale")) {
      if (c.contains("mu")) throw ConfigError("config /: give \"mu\" or \"mu_scale\", not both");
      cfg.mu = c.at("mu_scale").get<double>() * paired_step(shape);
      cfg.allow_custom_step = true;
    }
    resolve_step(shape, cfg);
  } catch (const InputError& e) {
    throw ConfigError(std::string("config /mu: ") + e.what());
  }
}

inline void write_config_line(std::ostream& out, const json& cfg) { out << "# config: " << cfg.dump() << '\n'; }

inline std::string fmt(double v) { return format_double(v); }

struct TrialOutcome {
  std::uint64_t seed = 0;
  int iters = 0;
  double err_q = 0.0;
  double err_a = 0.0;
  double residual = 0.0;
  double cost = 0.0;
  std::string status;
  double wall_ms = 0.0;
  PgdTrace trace;
};

// One seeded experiment: X from the model, A Gaussian (or given), y = A X + z.
inline TrialOutcome run_trial(const Problem& prob, std::size_t n, std::size_t m, double sigma, Scale scale,
                              const PgdConfig& cfg, std::uint64_t seed, const SenseMatrix* fixed, bool timing) {
  TrialOutcome r;
  r.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> x = sample_path(prob.model, n, derive_seed(seed, 0));
  const SenseMatrix A = fixed ? *fixed
                              : gen_gaussian(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n), scale,
                                             derive_seed(seed, 1));
  const Vector y = measure(A, x, sigma, derive_seed(seed, 2));
  try {
    PgdResult res = pgd_solve(A, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                              prob.weights, prob.weights.alphabet, cfg, std::span<const double>(x));
    const PgdRecord& last = res.trace.records.back();
    r.iters = res.trace.iterations;
    r.err_q = last.err_quantized;
    r.err_a = last.err_analog;
    r.residual = last.residual;
    r.cost = last.cost;
    r.status = to_string(res.trace.status);
    r.trace = std::move(res.trace);
  } catch (const InfeasibleError& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.iters = e.iteration();
    r.err_q = r.err_a = r.residual = r.cost = nan;
    r.status = "infeasible";
    r.trace.status = PgdStatus::infeasible;
  }
  if (timing) {
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return r;
}

// ---- commands --------------------------------------------------------------

inline int cmd_recover(const json& c, const RunOptions& opt, std::ostream& out, std::ostream* trace_out) {
  const SourceModel model = model_from_config(c.at("model"));
  const int b = c.at("b").get<int>();
  const int k = c.value("k", model.order());
  const auto n = c.at("n").get<std::size_t>();
  std::optional<SenseMatrix> fixed;
  std::size_t m = 0;
  if (c.contains("matrix")) {
    if (c.contains("scale")) throw ConfigError("config /scale: not used with /matrix (the sidecar gives it)");
    try {
      fixed = load_matrix(c.at("matrix").get<std::string>());
    } catch (const InputError& e) {
      throw ConfigError(std::string("config /matrix: ") + e.what());
    }
    if (static_cast<std::size_t>(fixed->cols()) != n) throw ConfigError("config /n: differs from the matrix width");
    m = static_cast<std::size_t>(fixed->rows());
    if (c.contains("m") && c.at("m").get<std::size_t>() != m) throw ConfigError("config /m: differs from the matrix height");
  } else {
    if (!c.contains("m")) throw ConfigError("config /: missing required key \"m\"");
    m = c.at("m").get<std::size_t>();
  }
  const Scale scale = parse_scale(c.value("scale", std::string("unit")));
  const double sigma = c.value("sigma", 0.0);
  const auto trials = c.value("trials", std::size_t{1});
  const auto seed = c.value("seed", std::uint64_t{0});
  const Problem prob = make_problem(model, b, k);
  PgdConfig cfg = pgd_from_config(c, projector_from_config(c.at("projector"), prob, n));
  settle_step(c, fixed ? *fixed : SenseMatrix{Matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)), scale, 0},
              cfg);

  std::vector<TrialOutcome> rows(trials);
  parallel_for(trials, opt.jobs, [&](std::size_t t) {
    rows[t] = run_trial(prob, n, m, sigma, scale, cfg, derive_seed(seed, t), fixed ? &*fixed : nullptr, opt.timing);
  });

  write_config_line(out, c);
  out << "trial,seed,n,m,b,k,sigma,iters,final_err_quantized,final_err_analog,residual,wall_ms,cost,status\n";
  for (std::size_t t = 0; t < trials; ++t) {
    const auto& r = rows[t];
    out << t << ',' << r.seed << ',' << n << ',' << m << ',' << b << ',' << k << ',' << fmt(sigma) << ',' << r.iters
        << ',' << fmt(r.err_q) << ',' << fmt(r.err_a) << ',' << fmt(r.residual) << ',' << fmt(r.wall_ms) << ','
        << fmt(r.cost) << ',' << r.status << '\n';
  }
  if (trace_out) {
    write_config_line(*trace_out, c);
    *trace_out << "trial,t,residual,cost,err_quantized,err_analog\n";
    for (std::size_t t = 0; t < trials; ++t) {
      for (const auto& rec : rows[t].trace.records) {
        *trace_out << t << ',' << rec.t << ',' << fmt(rec.residual) << ',' << fmt(rec.cost) << ','
                   << fmt(rec.err_quantized) << ',' << fmt(rec.err_analog) << '\n';
      }
    }
  }
  return 0;
}

// Success: per-coordinate error to [X]_b of at most 2 * 2^-b.
inline bool phase_success(const TrialOutcome& r, int b) { return r.err_q <= 2.0 * std::ldexp(1.0, -b); }

inline int cmd_phase(const json& c, const RunOptions& opt, std::ostream& out) {
  const SourceModel base = model_from_config(c.at("model"));
  const int b = c.at("b").get<int>();
  const int k = c.value("k", base.order());
  const auto n = c.at("n").get<std::size_t>();
  const Scale scale = parse_scale(c.value("scale", std::string("unit")));
  const double sigma = c.value("sigma", 0.0);
  const auto trials = c.value("trials", std::size_t{20});
  const auto seed = c.value("seed", std::uint64_t{0});
  if (c.contains("ratios") == c.contains("m_grid")) throw ConfigError("config /: give exactly one of \"ratios\" or \"m_grid\"");

  std::vector<std::size_t> ms;
  if (c.contains("ratios")) {
    for (double r : c.at("ratios").get<std::vector<double>>()) {
      ms.push_back(static_cast<std::size_t>(std::max(1.0, std::round(r * static_cast<double>(n)))));
    }
  } else {
    ms = c.at("m_grid").get<std::vector<std::size_t>>();
  }
  std::vector<SourceModel> models;
  if (c.contains("p_grid")) {
    for (double p : c.at("p_grid").get<std::vector<double>>()) models.push_back(with_p(base, p));
  } else {
    models.push_back(base);
  }

  struct Cell {
    Problem prob;
    PgdConfig cfg;
    std::size_t m;
    double d_ref;
  };
  std::vector<Cell> cells;
  for (const auto& model : models) {
    Problem prob = make_problem(model, b, k);
    const double d_ref = conditional_entropy(prob.kernel, k) / b;
    for (std::size_t m : ms) {
      PgdConfig cfg = pgd_from_config(c, projector_from_config(c.at("projector"), prob, n));
      settle_step(c, SenseMatrix{Matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)), scale, 0}, cfg);
      cells.push_back({prob, cfg, m, d_ref});
    }
  }

  std::vector<TrialOutcome> results(cells.size() * trials);
  parallel_for(results.size(), opt.jobs, [&](std::size_t i) {
    const std::size_t cell = i / trials, t = i % trials;
    const Cell& cl = cells[cell];
    results[i] = run_trial(cl.prob, n, cl.m, sigma, scale, cl.cfg, derive_seed(derive_seed(seed, cell), t), nullptr,
                           false);
  });

  write_config_line(out, c);
  out << "model,p,n,m,ratio,trials,successes,success_rate,ci_lo,ci_hi,exact,d_ref\n";
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    const Cell& cl = cells[cell];
    std::size_t ok = 0, exact = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& r = results[cell * trials + t];
      ok += phase_success(r, b);
      exact += r.err_q == 0.0;
    }
    const Interval ci = binomial_interval(ok, trials, kZ95);
    out << cl.prob.model.name() << ',' << fmt(cl.prob.model.p()) << ',' << n << ',' << cl.m << ','
        << fmt(static_cast<double>(cl.m) / static_cast<double>(n)) << ',' << trials << ',' << ok << ','
        << fmt(static_cast<double>(ok) / static_cast<double>(trials)) << ',' << fmt(ci.lo) << ',' << fmt(ci.hi) << ','
        << exact << ',' << fmt(cl.d_ref) << '\n';
  }
  return 0;
}

inline int cmd_infodim(const json& c, std::ostream& out) {
  const SourceModel model = model_from_config(c.at("model"));
  const int k = c.value("k", model.order());
  const auto bs = c.at("b_list").get<std::vector<int>>();
  std::vector<InfoDimPoint> curve;
  try {
    curve = info_dimension_curve(model, k, bs);
  } catch (const InputError& e) {
    throw ConfigError(std::string("config /b_list: ") + e.what());
  }
  write_config_line(out, c);
  out << "b,entropy,ratio,limit\n";
  const bool spike = model.kind() == SourceKind::spike_slab;
  for (const auto& pt : curve) {
    out << pt.b << ',' << fmt(pt.entropy) << ',' << fmt(pt.ratio) << ',' << (spike ? fmt(model.p()) : "") << '\n';
  }
  return 0;
}

inline json tail_json(const TailEstimate& t) {
  return {{"trials", t.trials},
          {"hits", t.hits},
          {"estimate", t.estimate},
          {"ci95", {t.ci95.lo, t.ci95.hi}},
          {"bound", std::isfinite(t.bound) ? json(t.bound) : json("inf")},
          {"log2_bound", t.log2_bound},
          {"vacuous", !(t.bound < 1.0)},
          {"ok", t.respects_bound()}};
}

// Suite order fixes the seed streams: suite s, entry i uses derive_seed(derive_seed(seed, s), i).
inline int cmd_validate(const json& c, const RunOptions& opt, std::ostream& out) {
  const auto seed = c.value("seed", std::uint64_t{0});
  auto stream = [&](std::uint64_t suite, std::size_t i) { return derive_seed(derive_seed(seed, suite), i); };
  json results = json::array();
  bool all_ok = true;
  auto push = [&](json r) {
    all_ok = all_ok && r.at("ok").get<bool>();
    results.push_back(std::move(r));
  };

  if (c.contains("chi_square")) {
    const auto& list = c.at("chi_square");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto m = list[i].at("m").get<std::size_t>();
      const double tau = list[i].at("tau").get<double>();
      const auto tr = chi_square_tail(m, tau, list[i].at("trials").get<std::size_t>(), stream(1, i), opt.jobs);
      json up = tail_json(tr.upper);
      up["suite"] = "chi_square_upper";
      up["params"] = {{"m", m}, {"tau", tau}};
      push(up);
      if (tr.lower) {
        json lo = tail_json(*tr.lower);
        lo["suite"] = "chi_square_lower";
        lo["params"] = {{"m", m}, {"tau", tau}};
        push(lo);
      }
    }
  }
  if (c.contains("inner_product")) {
    const auto& list = c.at("inner_product");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const double alpha = list[i].at("alpha").get<double>();
      if (!(alpha > -1.0 && alpha < 1.0)) throw ConfigError("config /inner_product/" + std::to_string(i) + "/alpha: must lie in (-1, 1)");
      const auto m = list[i].at("m").get<std::size_t>();
      const double tau = list[i].at("tau").get<double>();
      const auto r = inner_product_tail(alpha, m, tau, list[i].at("trials").get<std::size_t>(), stream(2, i), opt.jobs);
      json j = tail_json(r.tail);
      j["suite"] = "inner_product";
      j["params"] = {{"alpha", alpha}, {"m", m}, {"tau", tau}};
      j["rate_bound"] = r.rate_bound;
      const bool rate_ok = binomial_interval(r.tail.hits, r.tail.trials, kZ999).lo <= r.rate_bound;
      j["rate_ok"] = rate_ok;
      j["ok"] = j["ok"].get<bool>() && (std::abs(tau - 0.45) > 1e-12 || rate_ok);
      push(j);
    }
  }
  if (c.contains("empirical_deviation")) {
    const auto& list = c.at("empirical_deviation");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& e = list[i];
      const SourceModel model = model_from_config(e.at("model"));
      const auto n = e.at("n").get<std::size_t>();
      const int k = e.at("k").get<int>(), b = e.at("b").get<int>(), g = e.value("g", 1);
      const double eps = e.at("epsilon").get<double>();
      const auto t = mc_empirical_deviation(model, n, k, b, eps, e.at("trials").get<std::size_t>(), stream(3, i), g, opt.jobs);
      json j = tail_json(t);
      j["suite"] = "empirical_deviation";
      j["params"] = {{"model", model.name()}, {"p", model.p()}, {"n", n}, {"k", k}, {"b", b}, {"epsilon", eps}, {"g", g}};
      push(j);
    }
  }
  if (c.contains("f_minimax")) {
    const auto& f = c.at("f_minimax");
    const auto ag = open_grid(-1.0, 1.0, f.value("alpha_points", std::size_t{399}));
    const auto sg = open_grid(0.0, 1.0, f.value("s_points", std::size_t{200}));
    const Minimax mm = f_minimax_detail(ag, sg);
    push({{"suite", "f_minimax"}, {"value", mm.value}, {"alpha", mm.alpha}, {"s", mm.s}, {"threshold", 0.05},
          {"ok", mm.value >= 0.05}});
  }
  if (c.contains("gaussian_projection")) {
    const auto& list = c.at("gaussian_projection");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto n = list[i].at("n").get<std::size_t>();
      const auto g = gaussian_projection_check(n, list[i].at("trials").get<std::size_t>(), stream(5, i), opt.jobs);
      push({{"suite", "gaussian_projection"}, {"params", {{"n", n}}}, {"samples", g.samples}, {"mean", g.mean},
            {"variance", g.variance}, {"ks", g.ks}, {"correlation", g.correlation}, {"ks_ok", g.ks_ok},
            {"corr_ok", g.corr_ok}, {"ok", g.ks_ok && g.corr_ok}});
    }
  }
  const json report{{"config", c}, {"results", results}, {"ok", all_ok}};
  out << report.dump(2) << '\n';
  return all_ok ? 0 : 1;
}

inline int cmd_project(const json& c, std::ostream& out) {
  const SourceModel model = model_from_config(c.at("model"));
  const int b = c.at("b").get<int>();
  const int k = c.value("k", model.order());
  std::vector<double> x;
  try {
    x = read_vector_csv(c.at("input").get<std::string>(), c.value("column", std::string()));
  } catch (const InputError& e) {
    throw ConfigError(std::string("config /input: ") + e.what());
  }
  const Problem prob = make_problem(model, b, k);
  const Projector proj = projector_from_config(c.at("projector"), prob, x.size());
  const SymbolSeq u = apply_projector(proj, x, prob.weights, prob.weights.alphabet);
  write_config_line(out, c);
  out << "# cost: " << fmt(x.size() > static_cast<std::size_t>(k) ? complexity_cost(u, prob.weights) : kInf) << '\n';
  out << "i,x,value,symbol\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << i << ',' << fmt(x[i]) << ',' << fmt(prob.weights.alphabet.value(u[i])) << ',' << u[i] << '\n';
  }
  return 0;
}

}  // namespace qmap::cli

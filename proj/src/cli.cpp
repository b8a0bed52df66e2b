#include "mlab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mlab/conditions.hpp"
#include "mlab/estimate.hpp"
#include "mlab/linalg.hpp"
#include "mlab/models.hpp"
#include "mlab/multiplier.hpp"
#include "mlab/prep_solver.hpp"
#include "mlab/quantize.hpp"
#include "mlab/symlang.hpp"
#include "mlab/weights.hpp"

namespace mlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

const char* kSchema = R"({
  "$schema": "http://json-schema.org/draft-04/schema#",
  "type": "object",
  "additionalProperties": false,
  "definitions": {
    "expr": {"type": "string", "minLength": 1},
    "positive": {"type": "number", "minimum": 0, "exclusiveMinimum": true}
  },
  "properties": {
    "model": {
      "oneOf": [
        {"type": "string", "minLength": 1},
        {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "name": {"type": "string"},
            "A": {"$ref": "#/definitions/expr"},
            "f": {"$ref": "#/definitions/expr"},
            "f0": {"type": "string"},
            "p2": {"$ref": "#/definitions/expr"},
            "p1": {"$ref": "#/definitions/expr"},
            "p0": {"type": "string"}
          },
          "oneOf": [
            {"required": ["f"], "not": {"anyOf": [{"required": ["p2"]}, {"required": ["p1"]}]}},
            {"required": ["p2", "p1"], "not": {"anyOf": [{"required": ["A"]}, {"required": ["f"]}]}}
          ]
        }
      ]
    },
    "grid": {
      "type": "object",
      "additionalProperties": false,
      "required": ["dims"],
      "properties": {
        "h": {"$ref": "#/definitions/positive"},
        "dims": {
          "type": "array",
          "minItems": 1,
          "maxItems": 4,
          "items": {
            "type": "object",
            "additionalProperties": false,
            "required": ["role", "points", "extent"],
            "properties": {
              "role": {"enum": ["t", "x", "y"]},
              "points": {"type": "integer", "minimum": 4},
              "extent": {"$ref": "#/definitions/positive"},
              "periodic": {"type": "boolean"}
            }
          }
        }
      }
    },
    "checks": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "condition": {"type": "boolean"},
        "weights": {"type": "boolean"},
        "estimate": {"type": "boolean"}
      }
    },
    "estimate": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "T": {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/positive"}},
        "eps": {"type": "number", "minimum": 0, "exclusiveMinimum": true, "maximum": 1},
        "tests": {"type": "integer", "minimum": 1},
        "kind": {"enum": ["random-bandlimited", "gaussian-packet", "packet-scan"]},
        "per_axis": {"type": "integer", "minimum": 1},
        "band": {"type": "number", "minimum": 0, "exclusiveMinimum": true, "maximum": 1},
        "C0_cap": {"$ref": "#/definitions/positive"},
        "stabilize_ratio": {"type": "number", "minimum": 1}
      }
    },
    "prep": {
      "type": "object",
      "additionalProperties": false,
      "required": ["L"],
      "properties": {
        "L": {"type": "array", "minItems": 1, "maxItems": 3,
              "items": {"type": "array", "minItems": 1, "maxItems": 3, "items": {"type": "number"}}},
        "imC": {"type": "array", "items": {"$ref": "#/definitions/expr"}},
        "f": {"$ref": "#/definitions/expr"},
        "u0": {"type": "number"},
        "u1": {"type": "array", "items": {"type": "number"}},
        "k": {"type": "integer", "minimum": 0},
        "points": {"type": "integer", "minimum": 5},
        "extent": {"$ref": "#/definitions/positive"},
        "tol": {"$ref": "#/definitions/positive"},
        "max_iter": {"type": "integer", "minimum": 1},
        "cutoff_radius": {"type": "number", "minimum": 0}
      }
    },
    "quantize": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "symbol": {"$ref": "#/definitions/expr"},
        "quantization": {"enum": ["weyl", "wick", "kn"]},
        "compose": {
          "type": "object",
          "additionalProperties": false,
          "required": ["a", "b"],
          "properties": {
            "a": {"$ref": "#/definitions/expr"},
            "b": {"$ref": "#/definitions/expr"},
            "h": {"type": "array", "minItems": 2, "items": {"$ref": "#/definitions/positive"}}
          }
        }
      }
    },
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"}
  }
})";

// ---------------------------------------------------------------- helpers

template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errs(n);
  auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const int nt = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(std::max(jobs, 1), n)));
  std::vector<std::thread> pool;
  for (int k = 1; k < nt; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON numbers: non-finite values become strings so reports stay valid JSON
json jnum(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

struct Context {
  json cfg;
  fs::path out;
  int jobs = 1;
  std::uint64_t seed = kDefaultSeed;
  std::ostream* log = nullptr;
};

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << s;
}

void write_json(const Context& c, const std::string& name, const json& j) {
  write_text(c.out / "reports" / (name + ".json"), j.dump(2) + "\n");
}

// long format: one row per lattice point the field depends on, standard units
void write_field_csv(const RealField& f, const fs::path& p) {
  const GridPtr gs = reframe(f.grid(), Frame::standard);
  const RealField s = f.on_grid(gs);
  const Layout& L = s.layout();
  std::vector<int> axes;
  for (int a = 0; a < gs->axis_count(); ++a)
    if (L.depends_on(a)) axes.push_back(a);
  std::ostringstream o;
  for (int a : axes) o << gs->name(a) << ",";
  o << "value\n";
  std::vector<int> idx;
  for (std::size_t k = 0; k < L.size(); ++k) {
    L.unravel(k, idx);
    for (int a : axes) o << num(gs->coord(a, idx[a])) << ",";
    o << num(s[k]) << "\n";
  }
  write_text(p, o.str());
}

AxisConfig axis_from(const json& d) {
  AxisConfig a;
  const std::string r = d.at("role");
  a.role = r == "t" ? Role::t : (r == "x" ? Role::x : Role::y);
  a.points = d.at("points");
  a.extent = d.at("extent");
  a.periodic = d.value("periodic", a.role != Role::t);
  return a;
}

json axis_json(const AxisConfig& a) {
  return json{{"role", a.role == Role::t ? "t" : (a.role == Role::x ? "x" : "y")},
              {"points", a.points},
              {"extent", a.extent},
              {"periodic", a.periodic}};
}

const char* form_name(ModelForm f) { return f == ModelForm::normal ? "normal" : "principal"; }

struct Resolved {
  ModelSpec spec;
  GridPtr grid;
  bool gallery = false;
};

Resolved resolve_model(const json& cfg) {
  if (!cfg.contains("model")) throw ConfigError("/model", "required for this command");
  Resolved r;
  const json& m = cfg["model"];
  if (m.is_string()) {
    try {
      r.spec = find_model(m.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError("/model", e.what());
    }
    r.gallery = true;
  } else {
    r.spec.name = m.value("name", "inline");
    r.spec.description = "inline model";
    if (m.contains("p2")) {
      r.spec.form = ModelForm::principal;
      r.spec.p2 = m.at("p2");
      r.spec.p1 = m.at("p1");
      r.spec.p0 = m.value("p0", "");
    } else {
      r.spec.form = ModelForm::normal;
      r.spec.A = m.value("A", "");
      r.spec.f = m.at("f");
      r.spec.f0 = m.value("f0", "");
    }
  }
  if (cfg.contains("grid")) {
    r.spec.dims.clear();
    for (const auto& d : cfg["grid"]["dims"]) r.spec.dims.push_back(axis_from(d));
    r.spec.h = cfg["grid"].value("h", r.spec.h);
  } else if (!r.gallery) {
    throw ConfigError("/grid", "required for inline models");
  }
  try {
    r.grid = model_grid(r.spec);
  } catch (const Error& e) {
    throw ConfigError("/grid", e.what());
  }
  // parse every expression up front so errors point at the config
  auto probe = [&](const std::string& key, const std::string& text) {
    if (text.empty()) return;
    try {
      eval_on_grid(parse_expr(text), r.grid);
    } catch (const Error& e) {
      throw ConfigError("/model/" + key, e.what());
    }
  };
  probe("A", r.spec.A);
  probe("f", r.spec.f);
  probe("f0", r.spec.f0);
  probe("p2", r.spec.p2);
  probe("p1", r.spec.p1);
  probe("p0", r.spec.p0);
  return r;
}

json model_json(const ModelSpec& m) {
  json j{{"name", m.name}, {"description", m.description}, {"form", form_name(m.form)}};
  if (m.form == ModelForm::normal) {
    j["A"] = m.A;
    j["f"] = m.f;
    if (!m.f0.empty()) j["f0"] = m.f0;
  } else {
    j["p2"] = m.p2;
    j["p1"] = m.p1;
    if (!m.p0.empty()) j["p0"] = m.p0;
  }
  json dims = json::array();
  for (const auto& a : m.dims) dims.push_back(axis_json(a));
  j["grid"] = json{{"h", m.h}, {"dims", dims}};
  return j;
}

json witness_json(const Witness& w) {
  return json{{"kind", w.kind}, {"index", w.index}, {"previous", w.previous}};
}

// ---------------------------------------------------------------- commands

int cmd_condition(Context& c, json& report) {
  const Resolved r = resolve_model(c.cfg);
  const SymbolField f = model_f(r.spec, r.grid);
  const ConditionReport cr = check_subr_psi(f);
  json w = json::array();
  for (const auto& x : cr.witnesses) w.push_back(witness_json(x));
  report["model"] = model_json(r.spec);
  report["condition"] = json{{"verdict", verdict_name(cr.verdict)},
                             {"orientation", orientation_name(cr.orientation)},
                             {"violation_count", cr.violation_count},
                             {"threshold", jnum(cr.threshold)},
                             {"witnesses", w}};
  if (r.gallery) report["condition"]["expected"] = verdict_name(r.spec.expected_condition);

  std::ostringstream o;
  const auto& g = *r.grid;
  o << "kind";
  for (int a = 0; a < g.axis_count(); ++a) o << "," << g.name(a);
  o << "\n";
  for (const auto& x : cr.witnesses) {
    o << x.kind;
    for (int a = 0; a < g.axis_count(); ++a) {
      o << ",";
      if (a < static_cast<int>(x.index.size()) && x.index[a] >= 0) o << num(g.coord(a, x.index[a]));
    }
    o << "\n";
  }
  write_text(c.out / "fields" / "witnesses.csv", o.str());
  if (cr.verdict != Verdict::pass && c.log)
    *c.log << "condition: " << verdict_name(cr.verdict) << " (" << cr.violation_count << " violations)\n";
  return cr.verdict == Verdict::pass ? kExitPass : kExitViolation;
}

int cmd_weights_into(Context& c, json& report) {
  const Resolved r = resolve_model(c.cfg);
  const WeightPipeline w = run_weights(model_f(r.spec, r.grid));
  const auto audits = audit_weights(w);
  json table = json::array();
  bool ok = true;
  for (const auto& a : audits) {
    table.push_back(json{{"name", a.name},
                         {"exact", a.exact},
                         {"pass", a.pass},
                         {"worst", jnum(a.worst)},
                         {"limit", jnum(a.limit)},
                         {"detail", a.detail}});
    ok = ok && a.pass;
    if (!a.pass && c.log) *c.log << "weights: bound " << a.name << " fails (" << a.detail << ")\n";
  }
  report["model"] = model_json(r.spec);
  report["weights"] = json{{"h", w.h},
                           {"rescale", jnum(w.rescale)},
                           {"threshold", jnum(w.threshold)},
                           {"sup_delta", jnum(w.delta.values.sup_abs())},
                           {"sup_m", jnum(w.m.values.sup_abs())},
                           {"Hm12_min", jnum(*std::min_element(w.Hm12.values.values().begin(), w.Hm12.values.values().end()))},
                           {"Hm12_max", jnum(*std::max_element(w.Hm12.values.values().begin(), w.Hm12.values.values().end()))},
                           {"audit", table},
                           {"log", w.log}};
  write_field_csv(w.delta.values, c.out / "fields" / "delta.csv");
  write_field_csv(w.Hm12.values, c.out / "fields" / "Hm12.csv");
  write_field_csv(w.M.values, c.out / "fields" / "M.csv");
  write_field_csv(w.m.values, c.out / "fields" / "m.csv");
  return ok ? kExitPass : kExitViolation;
}

TestKind kind_of(const std::string& s) {
  return s == "gaussian-packet" ? TestKind::gaussian_packet : TestKind::random_bandlimited;
}

int cmd_estimate_into(Context& c, json& report) {
  const Resolved r = resolve_model(c.cfg);
  if (r.spec.form != ModelForm::normal) throw ConfigError("/model", "the estimate needs a normal-form model (A, f)");
  if (r.spec.A.empty()) throw ConfigError("/model/A", "required for the estimate");
  const json e = c.cfg.value("estimate", json::object());
  const auto& g = *r.grid;
  if (g.t_axis() < 0) throw ConfigError("/grid/dims", "the estimate needs a t axis");
  const double half = 0.5 * g.extent(g.t_axis());
  std::vector<double> Ts;
  if (e.contains("T"))
    for (const auto& t : e["T"]) Ts.push_back(t.get<double>());
  else
    Ts = {0.5 * half, 0.7 * half, 0.9 * half};
  for (std::size_t k = 0; k < Ts.size(); ++k) {
    try {
      time_window(g, Ts[k]);
    } catch (const Error& err) {
      throw ConfigError("/estimate/T/" + std::to_string(k), err.what());
    }
  }
  const double eps = e.value("eps", 0.1), band = e.value("band", 1.0 / 3.0), cap = e.value("C0_cap", 1e4);
  const double stab = e.value("stabilize_ratio", 3.0);
  const int count = e.value("tests", 50), per_axis = e.value("per_axis", 5);
  const std::string kind = e.value("kind", "random-bandlimited");

  std::vector<EstimateReport> reps(Ts.size());
  std::vector<json> extra(Ts.size());
  parallel_for(Ts.size(), c.jobs, [&](std::size_t k) {
    const double T = Ts[k];
    const auto setup = prepare_estimate(r.spec.A, r.spec.f, r.grid, T, eps, r.spec.f0);
    EstimateInputs in = setup.inputs;
    in.C0_cap = cap;
    const auto& x0 = in.bundle.L.x0;
    const auto tests = kind == "packet-scan" ? packet_scan(r.grid, T, per_axis, band, x0)
                                             : generate_tests(r.grid, T, kind_of(kind), count, c.seed, band, x0);
    reps[k] = verify_apriori(in, tests);
    extra[k] = json{{"hermitian_defect", jnum(in.bundle.hermitian_defect)},
                    {"b_norm", jnum(in.bundle.norm)},
                    {"sup_B", jnum(in.bundle.sup_B)},
                    {"L_radius", jnum(in.bundle.L.radius)},
                    {"L_c1", jnum(in.bundle.L.c1)},
                    {"rescale", jnum(setup.weights.rescale)},
                    {"tests", tests.size()}};
  });

  json sweep = json::array();
  bool ok = true;
  for (std::size_t k = 0; k < Ts.size(); ++k) {
    const auto& rp = reps[k];
    json row{{"T", Ts[k]},
             {"C0", jnum(rp.C0)},
             {"pass", rp.pass},
             {"failing_row", rp.failing_row},
             {"comm_ok", rp.comm_ok},
             {"comm_min_slack", jnum(rp.comm_min_slack)},
             {"comm_tolerance", jnum(rp.comm_tolerance)},
             {"lower_C", jnum(rp.lower_C)}};
    row.update(extra[k]);
    if (rp.failing_row >= 0) {
      const auto& fr = rp.rows[rp.failing_row];
      row["failing"] = json{{"index", fr.index}, {"lhs", jnum(fr.lhs)}, {"im", jnum(fr.im)}, {"psi", jnum(fr.psi)}};
      if (c.log)
        *c.log << "estimate: T = " << Ts[k] << " test " << fr.index << " has T Im<P*u, bu> + ||Psi u||^2 = "
               << Ts[k] * fr.im + fr.psi << " <= 0\n";
    }
    sweep.push_back(row);
    ok = ok && rp.pass && rp.comm_ok;

    std::ostringstream o;
    o << "# test lhs rhs ratio im m_wick mu psi comm comm_rhs lower\n";
    for (const auto& x : rp.rows)
      o << x.index << " " << num(x.lhs) << " " << num(Ts[k] * x.im + x.psi) << " " << num(x.ratio) << " "
        << num(x.im) << " " << num(x.m_wick) << " " << num(x.mu) << " " << num(x.psi) << " " << num(x.comm) << " "
        << num(x.comm_rhs) << " " << num(x.lower) << "\n";
    write_text(c.out / "plots" / ("estimate_T" + std::to_string(k) + ".dat"), o.str());
  }
  double worst_ratio = 1.0;
  for (std::size_t k = 1; k < reps.size(); ++k) {
    const double a = reps[k - 1].C0, b = reps[k].C0;
    const double q = (a > 0 && b > 0 && std::isfinite(a) && std::isfinite(b)) ? std::max(a / b, b / a) : INFINITY;
    worst_ratio = std::max(worst_ratio, q);
  }
  const bool stable = worst_ratio <= stab;
  report["model"] = model_json(r.spec);
  report["estimate"] = json{{"eps", eps},
                            {"kind", kind},
                            {"band", band},
                            {"seed", c.seed},
                            {"C0_cap", cap},
                            {"sweep", sweep},
                            {"C0_stability_ratio", jnum(worst_ratio)},
                            {"stable", stable},
                            {"pass", ok && stable}};
  return ok && stable ? kExitPass : kExitViolation;
}

int run_check(Context& c) {
  json report{{"command", "check"}};
  int code = cmd_condition(c, report);
  const json checks = c.cfg.value("checks", json::object());
  if (checks.value("weights", false)) code = std::max(code, cmd_weights_into(c, report));
  if (checks.value("estimate", false)) code = std::max(code, cmd_estimate_into(c, report));
  write_json(c, "check", report);
  return code;
}

int run_weights(Context& c) {
  json report{{"command", "weights"}};
  const int code = cmd_weights_into(c, report);
  write_json(c, "weights", report);
  return code;
}

int run_estimate(Context& c) {
  json report{{"command", "estimate"}};
  const int code = cmd_estimate_into(c, report);
  write_json(c, "estimate", report);
  return code;
}

int run_prep(Context& c) {
  if (!c.cfg.contains("prep")) throw ConfigError("/prep", "required for this command");
  const json& p = c.cfg["prep"];
  const int n = static_cast<int>(p["L"].size());
  Eigen::MatrixXd L(n, n);
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(p["L"][j].size()) != n) throw ConfigError("/prep/L/" + std::to_string(j), "L must be square");
    for (int k = 0; k < n; ++k) L(j, k) = p["L"][j][k];
  }
  LeafGrid g;
  g.dim = n;
  g.points = p.value("points", 64);
  g.extent = p.value("extent", 2.0);
  auto sample = [&](const std::string& path, const std::string& s) {
    try {
      return sample_leaf(s, g);
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  };
  QuasilinearProblem base;
  base.L = L;
  base.grid = g;
  if (p.contains("imC")) {
    if (static_cast<int>(p["imC"].size()) != n) throw ConfigError("/prep/imC", "needs one expression per axis");
    for (int j = 0; j < n; ++j) base.imC.push_back(sample("/prep/imC/" + std::to_string(j), p["imC"][j]));
  }
  base.f = sample("/prep/f", p.value("f", "0"));
  base.u0 = p.value("u0", 0.0);
  base.cutoff_radius = p.value("cutoff_radius", 0.0);
  std::vector<QuasilinearProblem> probs;
  if (p.contains("u1")) {
    if (static_cast<int>(p["u1"].size()) != n) throw ConfigError("/prep/u1", "needs one entry per axis");
    base.u1.resize(n);
    for (int j = 0; j < n; ++j) base.u1[j] = p["u1"][j];
    base.k = p.value("k", 0);
    if (base.k >= n) throw ConfigError("/prep/k", "component index out of range");
    probs.push_back(base);
  } else {
    for (int k = 0; k < n; ++k) {
      QuasilinearProblem q = base;
      q.k = k;
      q.u1 = Eigen::VectorXd::Unit(n, k);
      probs.push_back(q);
    }
  }
  const double tol = p.value("tol", 1e-9);
  const int max_iter = p.value("max_iter", 50);

  struct Out {
    bool converged = false;
    std::string message;
    PrepResult res;
  };
  std::vector<Out> outs(probs.size());
  parallel_for(probs.size(), c.jobs, [&](std::size_t i) {
    try {
      outs[i].res = solve_quasilinear(probs[i], tol, max_iter);
      outs[i].converged = true;
    } catch (const PrepDivergence& e) {
      outs[i].message = e.what();
      outs[i].res.history = e.history;
    }
  });

  json comps = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& q = probs[i];
    const auto& o = outs[i];
    const std::string tag = "k" + std::to_string(q.k);
    json hist = json::array();
    std::ostringstream csv, dat;
    csv << "iteration,step_h2,v_h2,residual\n";
    dat << "# iteration step_h2 v_h2 residual\n";
    for (const auto& h : o.res.history) {
      hist.push_back(json{{"iteration", h.iteration},
                          {"step_h2", jnum(h.step_h2)},
                          {"v_h2", jnum(h.v_h2)},
                          {"residual", jnum(h.residual)}});
      csv << h.iteration << "," << num(h.step_h2) << "," << num(h.v_h2) << "," << num(h.residual) << "\n";
      dat << h.iteration << " " << num(h.step_h2) << " " << num(h.v_h2) << " " << num(h.residual) << "\n";
    }
    write_text(c.out / "fields" / ("prep_history_" + tag + ".csv"), csv.str());
    write_text(c.out / "plots" / ("prep_history_" + tag + ".dat"), dat.str());
    json cj{{"k", q.k},
            {"u0", q.u0},
            {"u1", std::vector<double>(q.u1.data(), q.u1.data() + q.u1.size())},
            {"converged", o.converged},
            {"iterations", o.converged ? o.res.iterations : static_cast<int>(o.res.history.size())},
            {"history", hist}};
    if (o.converged) {
      cj["residual"] = jnum(o.res.residual);
      const Eigen::VectorXd gr = gradient_at_center(g, o.res.chi);
      cj["gradient_at_x0"] = std::vector<double>(gr.data(), gr.data() + gr.size());
      std::size_t c0 = 0, s = 1;
      for (int j = n - 1; j >= 0; --j) {
        c0 += g.center() * s;
        s *= g.points;
      }
      cj["value_at_x0"] = o.res.chi[static_cast<Eigen::Index>(c0)];
      cj["converged_extent"] = g.extent;
      std::ostringstream f;
      for (int j = 0; j < n; ++j) f << "x" << j + 1 << ",";
      f << "chi\n";
      for (std::size_t q2 = 0; q2 < g.size(); ++q2) {
        std::size_t rem = q2;
        std::vector<int> id(n);
        for (int j = n - 1; j >= 0; --j) {
          id[j] = static_cast<int>(rem % g.points);
          rem /= g.points;
        }
        for (int j = 0; j < n; ++j) f << num(g.coord(id[j])) << ",";
        f << num(o.res.chi[static_cast<Eigen::Index>(q2)]) << "\n";
      }
      write_text(c.out / "fields" / ("chi_" + tag + ".csv"), f.str());
    } else {
      cj["error"] = o.message;
      if (c.log) *c.log << "prep: component " << q.k << ": " << o.message << "\n";
    }
    ok = ok && o.converged;
    comps.push_back(cj);
  }
  json report{{"command", "prep"},
              {"L", p["L"]},
              {"points", g.points},
              {"extent", g.extent},
              {"tol", tol},
              {"max_iter", max_iter},
              {"components", comps},
              {"pass", ok}};
  write_json(c, "prep", report);
  return ok ? kExitPass : kExitViolation;
}

int run_gallery(Context& c) {
  const auto all = gallery();
  std::vector<ConditionReport> reps(all.size());
  parallel_for(all.size(), c.jobs, [&](std::size_t i) { reps[i] = check_model(all[i]); });
  json models = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < all.size(); ++i) {
    json j = model_json(all[i]);
    const bool match = reps[i].verdict == all[i].expected_condition;
    j["expected_condition"] = verdict_name(all[i].expected_condition);
    j["expected_estimate"] =
        all[i].expected_estimate ? json(*all[i].expected_estimate ? "pass" : "fail") : json("n/a");
    j["observed_condition"] = verdict_name(reps[i].verdict);
    j["match"] = match;
    ok = ok && match;
    if (!match && c.log) *c.log << "gallery: " << all[i].name << " does not match its declared verdict\n";
    models.push_back(j);
  }
  write_json(c, "gallery", json{{"command", "gallery"}, {"models", models}, {"all_match", ok}});
  return ok ? kExitPass : kExitViolation;
}

int run_quantize_demo(Context& c) {
  const json q = c.cfg.value("quantize", json::object());
  GridConfig gc;
  if (c.cfg.contains("grid")) {
    for (const auto& d : c.cfg["grid"]["dims"]) gc.dims.push_back(axis_from(d));
    gc.h = c.cfg["grid"].value("h", 1.0);
  } else {
    gc.dims = {axis_from(json{{"role", "t"}, {"points", 32}, {"extent", 2 * M_PI}, {"periodic", true}})};
    gc.h = 0.1;
  }
  GridPtr g;
  try {
    g = build_grid(gc);
  } catch (const Error& e) {
    throw ConfigError("/grid", e.what());
  }
  const std::string sym = q.value("symbol", "cos(t)*tau^2");
  const std::string how = q.value("quantization", "weyl");
  SymbolField a;
  try {
    a = eval_on_grid(parse_expr(sym), g);
  } catch (const Error& e) {
    throw ConfigError("/quantize/symbol", e.what());
  }
  const DiscreteOperator op = how == "wick" ? wick_quantize(a, nullptr, sym)
                              : how == "kn" ? kn_quantize(a, sym)
                                            : weyl_quantize(a, sym);
  const Eigen::MatrixXcd herm = 0.5 * (op.matrix + op.matrix.adjoint());
  const Eigen::VectorXd ev = hermitian_eigenvalues(herm);
  json report{{"command", "quantize-demo"},
              {"symbol", sym},
              {"quantization", how},
              {"dim", op.dim()},
              {"sup_symbol", jnum(a.sup_abs())},
              {"hermitian_defect", jnum((op.matrix - op.matrix.adjoint()).norm() / std::max(1.0, op.matrix.norm()))},
              {"hermitian_min_eigenvalue", jnum(ev.size() ? ev.minCoeff() : 0.0)},
              {"hermitian_max_eigenvalue", jnum(ev.size() ? ev.maxCoeff() : 0.0)},
              {"operator_norm", jnum(operator_norm(op.matrix))}};
  std::ostringstream o;
  o << "# k eigenvalue (Hermitian part)\n";
  for (Eigen::Index k = 0; k < ev.size(); ++k) o << k << " " << num(ev[k]) << "\n";
  write_text(c.out / "plots" / "quantize_spectrum.dat", o.str());
  if (q.contains("compose")) {
    const json& cp = q["compose"];
    std::vector<double> hs = {0.1, 0.05, 0.025};
    if (cp.contains("h")) hs = cp["h"].get<std::vector<double>>();
    ComposeReport cr;
    try {
      cr = compose_leading_check(parse_expr(cp["a"].get<std::string>()), parse_expr(cp["b"].get<std::string>()), gc,
                                 hs);
    } catch (const ParseError& e) {
      throw ConfigError("/quantize/compose", e.what());
    }
    report["compose"] = json{{"h", cr.h}, {"residual", cr.residual}, {"ratio", cr.ratio}};
    std::ostringstream d;
    d << "# h residual\n";
    for (std::size_t k = 0; k < cr.h.size(); ++k) d << num(cr.h[k]) << " " << num(cr.residual[k]) << "\n";
    write_text(c.out / "plots" / "compose.dat", d.str());
  }
  write_json(c, "quantize", report);
  return kExitPass;
}

json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("/", "cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  validate_config_text(text);
  return json::parse(text);
}

}  // namespace

const std::string& config_schema() {
  static const std::string s = kSchema;
  return s;
}

void validate_config_text(const std::string& text) {
  rapidjson::Document doc;
  doc.Parse(text.c_str(), text.size());
  if (doc.HasParseError())
    throw ConfigError("/", std::string("malformed JSON at offset ") + std::to_string(doc.GetErrorOffset()) + ": " +
                              rapidjson::GetParseError_En(doc.GetParseError()));
  static const rapidjson::SchemaDocument schema = [] {
    rapidjson::Document sd;
    sd.Parse(kSchema);
    if (sd.HasParseError()) throw Error("internal: config schema does not parse");
    return rapidjson::SchemaDocument(sd);
  }();
  rapidjson::SchemaValidator v(schema);
  if (!doc.Accept(v)) {
    rapidjson::StringBuffer sb;
    v.GetInvalidDocumentPointer().Stringify(sb);
    std::string path = sb.GetString();
    std::string kw = v.GetInvalidSchemaKeyword();
    std::string what = "violates schema keyword '" + kw + "'";
    if (path.rfind("/model", 0) == 0 && kw == "oneOf")
      what = "model must be a gallery name, a normal form {A, f[, f0]} or a principal form {p2, p1[, p0]}";
    else if (kw == "required")
      what = "missing a required member";
    else if (kw == "additionalProperties")
      what = "unknown member";
    throw ConfigError(path.empty() ? "/" : path, what);
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mlab: phase-space experiments for local solvability"};
  std::string config, outdir;
  int jobs = 1;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed (overrides the config)");
  app.add_option("--config", config, "experiment config (JSON)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", outdir, "output directory (MLAB_OUT overrides)");
  app.require_subcommand(1, 1);
  app.fallthrough();
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"check", "condition check (plus weights/estimate when enabled in checks)"},
      {"weights", "weight pipeline and bound audit"},
      {"estimate", "a priori estimate over the T sweep"},
      {"prep", "quasilinear coordinate-change solver"},
      {"gallery", "list the model gallery and check every declared verdict"},
      {"quantize-demo", "quantize one symbol and report its spectrum"}};
  for (const auto& [name, help] : subs) app.add_subcommand(name, help);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitPass;
    }
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    Context c;
    c.log = &err;
    c.jobs = jobs;
    if (!config.empty()) c.cfg = load_config(config);
    else if (cmd != "gallery" && cmd != "quantize-demo") throw ConfigError("/", "--config is required for " + cmd);
    else c.cfg = json::object();
    c.seed = c.cfg.value("seed", kDefaultSeed);
    if (*seed_opt) c.seed = seed;
    std::string dir = c.cfg.value("output", std::string("mlab_out"));
    if (!outdir.empty()) dir = outdir;
    if (const char* env = std::getenv("MLAB_OUT"); env && *env) dir = env;
    c.out = dir;
    for (const char* sub : {"reports", "fields", "plots"}) fs::create_directories(c.out / sub);

    int code = kExitError;
    if (cmd == "check") code = run_check(c);
    else if (cmd == "weights") code = run_weights(c);
    else if (cmd == "estimate") code = run_estimate(c);
    else if (cmd == "prep") code = run_prep(c);
    else if (cmd == "gallery") code = run_gallery(c);
    else if (cmd == "quantize-demo") code = run_quantize_demo(c);
    out << cmd << ": " << (code == kExitPass ? "pass" : "violation") << " (reports in " << c.out.string() << ")\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error at " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mlab

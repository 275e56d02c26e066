#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "matineq/reduction.hpp"
#include "matineq/dsl.hpp"
#include "matineq/inequalities.hpp"
#include "matineq/matrix_io.hpp"
#include "matineq/search.hpp"

namespace matineq::cli {

namespace {

using nlohmann::json;

/// Bad flags, missing inputs, out-of-range parameters: exit 2.
class BadInput : public Error {
 public:
  using Error::Error;
};

constexpr std::size_t kMaxFailureMessages = 8;
constexpr std::size_t kMaxListed = 20;

struct Context {
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::optional<std::size_t> trials;
  std::vector<Index> dims;
  bool as_json = false;
  std::string out_path;
  json config = json::object();
  bool seed_explicit = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::size_t trials_or(std::size_t fallback) const { return trials.value_or(fallback); }
  Index n_or(Index fallback) const { return dims.empty() ? fallback : dims.front(); }
};

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double x) { return format_double(x); }

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
  return s + "]";
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

// Writes the report to --out when given, else to stdout.
void emit(const Context& ctx, const std::string& text, const json& doc) {
  const std::string body = ctx.as_json ? doc.dump(2) + "\n" : text;
  if (ctx.out_path.empty()) {
    *ctx.out << body;
    return;
  }
  std::ofstream f(ctx.out_path);
  if (!f) throw BadInput("cannot write " + ctx.out_path);
  f << body;
}

json result_json(const InequalityResult& r) {
  json diag = json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = v;
  return json{{"id", r.id},       {"margins", r.margins},       {"min_margin", r.min_margin},
              {"tol", r.tolerance}, {"passed", r.passed},       {"conjecture", r.conjecture},
              {"diagnostics", diag}};
}

std::string result_text(const InequalityResult& r, const std::string& label) {
  std::ostringstream s;
  s << label << ": margin " << fmt(r.min_margin) << " (tol " << fmt(r.tolerance) << ") "
    << (r.passed ? "pass" : r.conjecture ? "CANDIDATE VIOLATION" : "FAIL") << "\n";
  s << "  margins " << fmt_list(r.margins) << "\n";
  for (const auto& [k, v] : r.diagnostics) s << "  " << k << " " << fmt(v) << "\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Inputs

/// A number gives a 1x1 matrix; anything else is a MatrixFile path.
Matrix load_operand(const std::string& value) {
  double x = 0.0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec == std::errc() && ptr == end && !value.empty()) return Matrix::Constant(1, 1, Complex(x, 0.0));
  return load_matrix(value);
}

std::map<std::string, Matrix> parse_named(const std::vector<std::string>& specs) {
  std::map<std::string, Matrix> out;
  for (const std::string& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw BadInput("--mat expects NAME=VALUE, got '" + s + "'");
    out[s.substr(0, eq)] = load_operand(s.substr(eq + 1));
  }
  return out;
}

Psd as_psd(const Matrix& m, const std::string& name) {
  if (m.rows() != m.cols()) throw BadInput(name + " must be square");
  try {
    return Psd(Hermitian(m));
  } catch (const DomainError&) {
    throw BadInput(name + " is not positive semidefinite");
  }
}

Pd as_pd(const Matrix& m, const std::string& name) {
  const Psd p = as_psd(m, name);
  try {
    return Pd(p);
  } catch (const DomainError&) {
    throw BadInput(name + " is not positive definite");
  }
}

const Matrix& require(const std::map<std::string, Matrix>& mats, const std::string& name) {
  const auto it = mats.find(name);
  if (it == mats.end()) throw BadInput("missing matrix " + name + " (pass --mat " + name + "=VALUE)");
  return it->second;
}

Pd generated_pd(Index n, double kappa, std::uint64_t seed) {
  GenSpec g;
  g.n = n;
  g.condition = kappa;
  g.seed = seed;
  return random_pd(g);
}

// ---------------------------------------------------------------------------
// verify

struct CheckOutcome {
  bool skipped = false;
  bool failed = false;
  std::string message;
  double margin = 0.0;
  bool passed = true;
};

std::vector<CheckOutcome> evaluate_checks(const Psd& a, const Psd& b, double t, bool full_rank,
                                          std::optional<double> tol) {
  const std::vector<std::string>& ids = verify_check_ids();
  std::vector<CheckOutcome> out(ids.size());
  std::optional<Pd> pa, pb;
  if (full_rank) {
    try {
      pa = Pd(a);
      pb = Pd(b);
    } catch (const DomainError&) {
      pa.reset();
      pb.reset();
    }
  }
  const InequalityInstance inst(a, b, t);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::string& id = ids[k];
    CheckOutcome& o = out[k];
    if ((id == "eq1" || id == "eq2") && !pa) {
      o.skipped = true;
      continue;
    }
    try {
      InequalityResult r;
      if (id == "eq1") r = check_amgm_loewner(*pa, *pb, tol);
      else if (id == "eq2") r = check_amgm_variant(*pa, *pb, tol);
      else if (id == "eq3") r = check_bk1(a, b, tol);
      else if (id == "eq4") r = check_bk2(a, b, tol);
      else if (id == "eq5") r = check_bkd(a, b, tol);
      else if (id == "eq7") r = check_ando(inst, tol);
      else if (id == "eq8") r = check_prop4(inst, tol);
      else r = check_conjecture(inst, tol);
      o.margin = r.min_margin;
      o.passed = r.passed;
    } catch (const Error& e) {
      o.failed = true;
      o.message = id + ": " + e.what();
    }
  }
  return out;
}

void accumulate(VerifySummary& s, const std::vector<CheckOutcome>& outcomes, double scale) {
  ++s.trials;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const CheckOutcome& o = outcomes[k];
    CheckSummary& c = s.checks[k];
    if (o.skipped) {
      ++c.skipped;
      continue;
    }
    if (o.failed) {
      ++s.numerical_failures;
      if (s.failure_messages.size() < kMaxFailureMessages) s.failure_messages.push_back(o.message);
      continue;
    }
    if (c.evaluated == 0 || o.margin < c.min_margin) c.min_margin = o.margin;
    if (c.evaluated == 0 || o.margin / scale < c.min_scaled_margin) c.min_scaled_margin = o.margin / scale;
    ++c.evaluated;
    if (!o.passed) ++c.violations;
  }
}

VerifySummary empty_summary() {
  VerifySummary s;
  for (const std::string& id : verify_check_ids()) {
    CheckSummary c;
    c.id = id;
    c.conjecture = id == "conjecture";
    s.checks.push_back(c);
  }
  return s;
}

std::string verify_text(const VerifySummary& s, const std::string& title) {
  std::ostringstream o;
  o << title << "\n";
  o << pad("check", 12) << pad("evaluated", 11) << pad("skipped", 9) << pad("violations", 12) << pad("min_margin", 26)
    << "min_scaled_margin\n";
  for (const CheckSummary& c : s.checks) {
    o << pad(c.id, 12) << pad(std::to_string(c.evaluated), 11) << pad(std::to_string(c.skipped), 9)
      << pad(std::to_string(c.violations), 12) << pad(fmt(c.min_margin), 26) << fmt(c.min_scaled_margin)
      << (c.conjecture ? "  (open statement)" : "") << "\n";
  }
  o << "numerical failures: " << s.numerical_failures << "\n";
  for (const std::string& m : s.failure_messages) o << "  " << m << "\n";
  return o.str();
}

int cmd_verify(const Context& ctx, const std::string& a_path, const std::string& b_path, double t, unsigned threads) {
  VerifySummary s;
  std::string title;
  if (!a_path.empty() || !b_path.empty()) {
    if (a_path.empty() || b_path.empty()) throw BadInput("verify needs both --a and --b");
    if (!(t >= 0.0 && t <= 1.0)) throw BadInput("--t must lie in [0, 1]");
    const Psd a = as_psd(load_operand(a_path), "A");
    const Psd b = as_psd(load_operand(b_path), "B");
    if (a.dim() != b.dim()) throw BadInput("A and B differ in size");
    s = verify_pair(a, b, t, ctx.tol);
    title = "verify: supplied pair, n = " + std::to_string(a.dim()) + ", t = " + fmt(t);
  } else {
    std::vector<Index> dims = ctx.dims;
    if (dims.empty())
      for (Index n = 1; n <= 12; ++n) dims.push_back(n);
    const std::size_t trials = ctx.trials_or(1000);
    s = run_verify(ctx.seed, trials, dims, ctx.tol, threads);
    title = "verify: " + std::to_string(trials) + " trials, seed " + std::to_string(ctx.seed);
  }
  json doc = s.to_json();
  doc["command"] = "verify";
  doc["seed"] = ctx.seed;
  doc["exit_code"] = s.exit_code();
  emit(ctx, verify_text(s, title), doc);
  return s.exit_code();
}

// ---------------------------------------------------------------------------
// reduce

json trace_json(const ReductionTrace& tr) {
  json stages = json::array();
  for (const StageRecord& st : tr.stages) {
    json values = json::object();
    for (const auto& [k, v] : st.values) values[k] = v;
    stages.push_back({{"name", st.name}, {"ok", st.ok}, {"values", values}});
  }
  return json{{"r", tr.r},
              {"scale", tr.scale},
              {"epsilon", tr.epsilon},
              {"tol", tr.tol},
              {"tol_proj", tr.tol_proj},
              {"stage_eigen", std::vector<double>(tr.stage_eigen.begin(), tr.stage_eigen.end())},
              {"bkd_margin", tr.bkd_margin},
              {"ok", tr.ok()},
              {"stages", stages}};
}

std::string trace_text(const ReductionTrace& tr) {
  std::ostringstream o;
  o << "r = " << tr.r << ": scale " << fmt(tr.scale) << ", epsilon " << fmt(tr.epsilon) << ", tol " << fmt(tr.tol)
    << ", tol_proj " << fmt(tr.tol_proj) << (tr.ok() ? "" : "  FAILED") << "\n";
  o << "  lambda_r chain (A+B, A+B1, A1+B1): " << fmt(tr.stage_eigen[0]) << " >= " << fmt(tr.stage_eigen[1])
    << " >= " << fmt(tr.stage_eigen[2]) << "\n";
  for (const StageRecord& st : tr.stages) {
    o << "  " << pad(st.name, 10) << (st.ok ? "ok  " : "FAIL");
    for (const auto& [k, v] : st.values) o << "  " << k << "=" << fmt(v);
    o << "\n";
  }
  o << "  bkd_margin " << fmt(tr.bkd_margin) << "\n";
  return o.str();
}

int cmd_reduce(const Context& ctx, const std::string& a_path, const std::string& b_path, std::vector<Index> rs,
               double eps, double kappa) {
  Psd a, b;
  if (!a_path.empty() || !b_path.empty()) {
    if (a_path.empty() || b_path.empty()) throw BadInput("reduce needs both --a and --b");
    a = as_psd(load_operand(a_path), "A");
    b = as_psd(load_operand(b_path), "B");
    if (a.dim() != b.dim()) throw BadInput("A and B differ in size");
  } else {
    const Index n = ctx.n_or(4);
    if (n < 1) throw BadInput("--n must be >= 1");
    a = generated_pd(n, kappa, derive_seed(ctx.seed, 1));
    b = generated_pd(n, kappa, derive_seed(ctx.seed, 2));
  }
  const Index n = a.dim();
  if (rs.empty())
    for (Index r = 1; r <= n; ++r) rs.push_back(r);
  for (Index r : rs)
    if (r < 1 || r > n) throw BadInput("r = " + std::to_string(r) + " is outside [1, " + std::to_string(n) + "]");
  if (!(eps > 0.0)) throw BadInput("--eps must be positive");

  bool violated = false, numerical = false;
  json traces = json::array();
  std::string text = "reduce: n = " + std::to_string(n) + "\n";
  for (Index r : rs) {
    try {
      const ReductionTrace tr = run_reduction(a, b, r, eps);
      violated = violated || !tr.ok();
      traces.push_back(trace_json(tr));
      text += trace_text(tr);
    } catch (const Error& e) {
      numerical = true;
      traces.push_back({{"r", r}, {"error", e.what()}});
      text += "r = " + std::to_string(r) + ": error: " + e.what() + "\n";
    }
  }
  const int code = violated ? kViolation : numerical ? kNumerical : kOk;
  emit(ctx, text, json{{"command", "reduce"}, {"n", n}, {"traces", traces}, {"exit_code", code}});
  return code;
}

// ---------------------------------------------------------------------------
// prop

InequalityResult prop_supplied(const std::string& which, const std::map<std::string, Matrix>& mats,
                               std::optional<double> tol) {
  if (which == "lemma1") {
    const Pd x = as_pd(require(mats, "X"), "X");
    const Matrix& s = require(mats, "S");
    if (s.rows() != x.dim() || s.cols() != x.dim()) throw BadInput("S must match X in size");
    return lemma1_margin(x, s, tol);
  }
  if (which == "prop2") {
    const Pd m = as_pd(require(mats, "M"), "M");
    const Pd n = as_pd(require(mats, "N"), "N");
    if (m.dim() != n.dim()) throw BadInput("M and N differ in size");
    return check_prop2({m, n}, tol);
  }
  if (which == "prop3") {
    const Pd l = as_pd(require(mats, "L"), "L");
    const Matrix& z = require(mats, "Z");
    if (z.rows() != l.dim()) throw BadInput("Z must have as many rows as L");
    return check_prop3(make_prop3_instance(l, z), tol);
  }
  throw BadInput("prop1 takes generated instances only (drop --mat)");
}

InequalityResult prop_generated(const std::string& which, Index n, std::optional<Index> r, double kappa,
                                std::uint64_t seed, std::size_t k, std::optional<double> tol) {
  if (which == "lemma1") return lemma1_margin(generated_pd(n, kappa, derive_seed(seed, 1)), random_nonsingular(n, derive_seed(seed, 2)), tol);
  if (which == "prop2")
    return check_prop2({generated_pd(n, kappa, derive_seed(seed, 1)), generated_pd(n, kappa, derive_seed(seed, 2))},
                       tol);
  if (which == "prop3")
    return check_prop3(
        make_prop3_instance(generated_pd(n, kappa, derive_seed(seed, 1)), random_nonsingular(n, derive_seed(seed, 2))),
        tol);
  const Index rr = r.value_or(1 + static_cast<Index>(k % static_cast<std::size_t>(n)));
  if (rr < 1 || rr > n) throw BadInput("r = " + std::to_string(rr) + " is outside [1, " + std::to_string(n) + "]");
  return verify_prop1(make_prop1_instance(n, rr, seed), tol);
}

int cmd_prop(const Context& ctx, const std::string& which, const std::vector<std::string>& mat_specs,
             std::optional<Index> r, double kappa) {
  std::vector<InequalityResult> results;
  std::size_t failures = 0;
  std::vector<std::string> messages;
  if (!mat_specs.empty()) {
    results.push_back(prop_supplied(which, parse_named(mat_specs), ctx.tol));
  } else {
    std::vector<Index> dims = ctx.dims.empty() ? std::vector<Index>{3} : ctx.dims;
    for (Index n : dims)
      if (n < 1) throw BadInput("--n must be >= 1");
    const std::size_t trials = ctx.trials_or(1);
    for (std::size_t k = 0; k < trials; ++k) {
      const Index n = dims[k % dims.size()];
      try {
        results.push_back(prop_generated(which, n, r, kappa, derive_seed(ctx.seed, k), k, ctx.tol));
      } catch (const BadInput&) {
        throw;
      } catch (const Error& e) {
        ++failures;
        if (messages.size() < kMaxFailureMessages) messages.push_back(e.what());
      }
    }
  }

  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const InequalityResult& res : results) {
    violations += !res.passed;
    worst = std::min(worst, res.min_margin);
  }
  if (results.empty()) worst = 0.0;
  const int code = violations ? kViolation : failures ? kNumerical : kOk;

  json doc{{"command", "prop"},         {"which", which},           {"instances", results.size()},
           {"min_margin", worst},       {"violations", violations}, {"numerical_failures", failures},
           {"failure_messages", messages}, {"exit_code", code}};
  std::ostringstream text;
  text << "prop " << which << ": " << results.size() << " instance(s), min margin " << fmt(worst) << ", violations "
       << violations << ", numerical failures " << failures << "\n";
  for (const std::string& m : messages) text << "  " << m << "\n";
  if (results.size() <= kMaxListed) {
    json list = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
      list.push_back(result_json(results[k]));
      text << result_text(results[k], which + " #" + std::to_string(k));
    }
    doc["results"] = list;
  }
  emit(ctx, text.str(), doc);
  return code;
}

// ---------------------------------------------------------------------------
// search

struct SearchFlags {
  std::vector<double> t_grid;
  std::size_t refine_steps = 0;
  std::size_t refine_count = 0;
  double step_scale = 0.0;
  unsigned threads = 1;
  bool resume = false;
  bool salvage = false;
  CLI::App* app = nullptr;
};

std::string search_text(const SearchReport& r) {
  std::ostringstream o;
  o << "search: " << r.trials_run << " trials in " << r.cells_run << " cells, " << r.refined.size()
    << " refined, wall time " << std::fixed << std::setprecision(2) << r.wall_time << " s\n";
  o.unsetf(std::ios::floatfield);
  o << "min margin overall " << fmt(r.min_margin_overall) << " (tol " << fmt(r.min_margin_tolerance) << ")\n";
  o << "violations " << r.violations.size() << ", near violations " << r.near_violations.size()
    << ", numerical failures " << r.numerical_failures << "\n";
  o << pad("n", 4) << pad("t", 6) << pad("trials", 8) << "min_margin\n";
  for (const auto& [key, m] : r.min_margin_per_cell)
    o << pad(std::to_string(key.first), 4) << pad(fmt(key.second), 6) << pad(std::to_string(r.trials_per_cell.at(key)), 8)
      << fmt(m) << "\n";
  for (const Candidate& c : r.violations)
    o << "VIOLATION n=" << c.n << " t=" << fmt(c.t) << " j=" << c.j << " margin " << fmt(c.margin) << " seed "
      << c.seed << (c.refined ? " (refined)" : "") << "\n";
  return o.str();
}

int cmd_search(const Context& ctx, const SearchFlags& f) {
  SearchConfig cfg;
  if (ctx.config.contains("search")) {
    try {
      cfg = config_from_json(ctx.config.at("search"));
    } catch (const std::exception& e) {
      throw BadInput(std::string("config 'search': ") + e.what());
    }
  }
  std::optional<ResumeResult> prior;
  if (f.resume) {
    if (ctx.out_path.empty()) throw BadInput("--resume needs --out pointing at the record stream");
    try {
      prior = resume(ctx.out_path, f.salvage);
    } catch (const RecordError& e) {
      throw BadInput(ctx.out_path + ": " + e.what() + " (rerun with --salvage to keep the valid prefix)");
    }
    if (prior->dropped_lines > 0) {
      *ctx.err << "salvage: dropped " << prior->dropped_lines << " line(s) from " << ctx.out_path << "\n";
      std::filesystem::resize_file(ctx.out_path, prior->valid_bytes);
    }
    if (prior->config) cfg = *prior->config;
  }
  if (!ctx.dims.empty()) cfg.dims = ctx.dims;
  if (ctx.trials) cfg.trials_per_cell = *ctx.trials;
  if (ctx.seed_explicit || !(prior && prior->config)) cfg.seed = ctx.seed;
  if (ctx.tol) cfg.tol = ctx.tol;
  if (f.app->count("--t-grid")) cfg.t_grid = f.t_grid;
  if (f.app->count("--refine-steps")) cfg.refine_steps = f.refine_steps;
  if (f.app->count("--refine-count")) cfg.refine_count = f.refine_count;
  if (f.app->count("--step-scale")) cfg.step_scale = f.step_scale;
  if (f.app->count("--threads")) cfg.threads = f.threads;
  cfg.out_path = ctx.out_path;
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw BadInput(e.what());
  }
  if (prior && prior->config && prior->config->seed != cfg.seed)
    throw BadInput("seed " + std::to_string(cfg.seed) + " does not match the stream's seed " +
                   std::to_string(prior->config->seed));

  const SearchReport report = random_sweep(cfg, prior ? &prior->report : nullptr);
  const int code = report.has_violation() ? kViolation : kOk;
  json doc = summary_to_json(report);
  doc["command"] = "search";
  doc["config"] = config_to_json(cfg);
  doc["exit_code"] = code;
  std::string text = search_text(report);
  if (ctx.as_json) {
    *ctx.out << doc.dump(2) << "\n";
  } else {
    *ctx.out << text;
  }
  return code;
}

// ---------------------------------------------------------------------------
// dsl

int cmd_dsl(const Context& ctx, const std::string& file, bool builtin, const std::vector<std::string>& mat_specs,
            const std::string& a_path, const std::string& b_path, const std::string& s_path, double t, double kappa) {
  if (file.empty() == !builtin) throw BadInput("dsl needs exactly one of FILE or --builtin");
  if (!(t >= 0.0 && t <= 1.0)) throw BadInput("--t must lie in [0, 1]");

  struct Item {
    std::string label;
    std::string text;
    dsl::Statement statement;
    bool conjecture;
  };
  std::vector<Item> items;
  const dsl::Statement& conj = dsl::catalogue_entry("conjecture").statement;
  if (builtin) {
    for (const auto& e : dsl::builtin_catalogue()) items.push_back({e.key, e.source, e.statement, e.conjecture});
  } else {
    std::ifstream in(file);
    if (!in) throw BadInput("cannot read " + file);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      for (const auto& s : dsl::parse_file(buf.str()))
        items.push_back({"line " + std::to_string(s.line), s.text, s.statement, dsl::equal(s.statement, conj)});
    } catch (const dsl::DslError& e) {
      throw BadInput(file + ": " + e.what());
    }
  }

  dsl::Bindings bindings = parse_named(mat_specs);
  const Index n = ctx.n_or(3);
  if (!a_path.empty()) bindings["A"] = load_operand(a_path);
  if (!b_path.empty()) bindings["B"] = load_operand(b_path);
  if (!s_path.empty()) bindings["S"] = load_operand(s_path);
  if (!bindings.count("A")) bindings["A"] = generated_pd(n, kappa, derive_seed(ctx.seed, 1)).matrix();
  if (!bindings.count("B")) bindings["B"] = generated_pd(n, kappa, derive_seed(ctx.seed, 2)).matrix();
  if (!bindings.count("S")) bindings["S"] = bindings["B"];

  bool violated = false;
  std::size_t failures = 0;
  json list = json::array();
  std::ostringstream text;
  text << "dsl: " << items.size() << " statement(s), t = " << fmt(t) << "\n";
  for (const Item& it : items) {
    for (const std::string& v : it.statement.variables())
      if (!bindings.count(v)) throw BadInput(it.label + ": unbound variable '" + v + "' (pass --mat " + v + "=VALUE)");
    try {
      InequalityResult r = dsl::evaluate(it.statement, bindings, t, ctx.tol);
      r.id = it.label;
      r.conjecture = it.conjecture;
      if (!r.passed && !r.conjecture) violated = true;
      json j = result_json(r);
      j["source"] = it.text;
      list.push_back(j);
      text << pad(it.label, 12) << it.text << "\n"
           << "  min margin " << fmt(r.min_margin) << " (tol " << fmt(r.tolerance) << ") "
           << (r.passed ? "pass" : r.conjecture ? "CANDIDATE VIOLATION" : "FAIL") << "\n"
           << "  margins " << fmt_list(r.margins) << "\n";
    } catch (const DomainError& e) {
      throw BadInput(it.label + ": " + e.what());
    } catch (const DimensionMismatch& e) {
      throw BadInput(it.label + ": " + e.what());
    } catch (const Error& e) {
      ++failures;
      list.push_back({{"id", it.label}, {"source", it.text}, {"error", e.what()}});
      text << pad(it.label, 12) << it.text << "\n  error: " << e.what() << "\n";
    }
  }
  const int code = violated ? kViolation : failures ? kNumerical : kOk;
  emit(ctx, text.str(), json{{"command", "dsl"}, {"t", t}, {"statements", list}, {"exit_code", code}});
  return code;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const Context& ctx, const std::string& kind, double kappa, Index rank, const std::string& field,
            const std::string& shape) {
  GenSpec g;
  g.n = ctx.n_or(4);
  g.rank = rank;
  g.condition = kappa;
  g.seed = ctx.seed;
  Matrix m;
  try {
    g.field = parse_field(field);
    g.shape = parse_shape(shape);
    g.validate();
  } catch (const DomainError& e) {
    throw BadInput(e.what());
  }
  if (kind == "psd")
    m = random_psd_rank(g).matrix();
  else if (kind == "unitary")
    m = haar_unitary(g.n, g.seed, g.field);
  else
    m = random_nonsingular(g.n, g.seed, g.field);

  if (ctx.out_path.empty()) {
    *ctx.out << format_matrix(m) << "\n";
  } else {
    save_matrix(ctx.out_path, m);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Global configuration

std::uint64_t parse_seed(const std::string& s, const std::string& source) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw BadInput(source + ": '" + s + "' is not an unsigned 64-bit seed");
  return v;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInput("cannot read config " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw BadInput(path + ": config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw BadInput(path + ": invalid JSON at byte " + std::to_string(e.byte));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

const std::vector<std::string>& verify_check_ids() {
  static const std::vector<std::string> ids = {"eq1", "eq2", "eq3", "eq4", "eq5", "eq7", "eq8", "conjecture"};
  return ids;
}

int VerifySummary::exit_code() const {
  for (const CheckSummary& c : checks)
    if (!c.conjecture && c.violations > 0) return kViolation;
  return numerical_failures > 0 ? kNumerical : kOk;
}

json VerifySummary::to_json() const {
  json list = json::array();
  for (const CheckSummary& c : checks)
    list.push_back({{"id", c.id},
                    {"conjecture", c.conjecture},
                    {"evaluated", c.evaluated},
                    {"skipped", c.skipped},
                    {"violations", c.violations},
                    {"min_margin", c.min_margin},
                    {"min_scaled_margin", c.min_scaled_margin}});
  return json{{"trials", trials},
              {"checks", list},
              {"numerical_failures", numerical_failures},
              {"failure_messages", failure_messages}};
}

VerifyInstance verify_instance(std::uint64_t seed, std::size_t trial, const std::vector<Index>& dims) {
  static const double kConditions[] = {1.0, 10.0, 1e4};
  const std::vector<double> grid = default_t_grid();
  const std::size_t d = dims.size();
  const std::uint64_t s = derive_seed(seed, trial);

  VerifyInstance v;
  v.n = dims[trial % d];
  v.condition = kConditions[(trial / d) % 3];
  v.field = (trial / (3 * d)) % 2 == 0 ? Field::Complex : Field::Real;
  v.full_rank = v.n == 1 || (trial / (6 * d)) % 2 == 0;
  v.t = grid[trial % grid.size()];

  GenSpec g;
  g.n = v.n;
  g.condition = v.condition;
  g.field = v.field;
  auto draw = [&](std::uint64_t stream) {
    g.seed = derive_seed(s, stream);
    g.rank = v.full_rank ? -1 : 1 + static_cast<Index>(derive_seed(s, stream + 10) % static_cast<std::uint64_t>(v.n - 1));
    return random_psd_rank(g);
  };
  v.a = draw(1);
  const Psd b = draw(2);
  // Relative scale of B in [0.1, 10], from the top 53 bits of a stream.
  const double u = static_cast<double>(derive_seed(s, 3) >> 11) * 0x1.0p-53;
  const double c = std::pow(10.0, 2.0 * u - 1.0);
  v.b = Psd::with_certificate(Hermitian(c * b.matrix()), c * b.min_eig());
  return v;
}

VerifySummary run_verify(std::uint64_t seed, std::size_t trials, const std::vector<Index>& dims,
                         std::optional<double> tol, unsigned threads) {
  if (dims.empty()) throw DomainError("run_verify: no dimensions");
  for (Index n : dims)
    if (n < 1) throw DomainError("run_verify: dimensions must be >= 1");

  std::vector<std::vector<CheckOutcome>> outcomes(trials);
  std::vector<double> scales(trials, 1.0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < trials; k = next++) {
      const VerifyInstance v = verify_instance(seed, k, dims);
      scales[k] = 1.0 + spectral_norm(v.a) + spectral_norm(v.b);
      outcomes[k] = evaluate_checks(v.a, v.b, v.t, v.full_rank, tol);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  VerifySummary s = empty_summary();
  for (std::size_t k = 0; k < trials; ++k) accumulate(s, outcomes[k], scales[k]);
  return s;
}

VerifySummary verify_pair(const Psd& a, const Psd& b, double t, std::optional<double> tol) {
  VerifySummary s = empty_summary();
  accumulate(s, evaluate_checks(a, b, t, true, tol), 1.0 + spectral_norm(a) + spectral_norm(b));
  return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral AM-GM inequality toolkit", args.empty() ? "matineq" : args.front()};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  double tol = 0.0;
  std::size_t trials = 0;
  std::vector<Index> dims;
  bool as_json = false;
  std::string out_path, config_path;
  app.add_option("--seed", seed, "Master seed (default: $MATINEQ_SEED, else 0)");
  app.add_option("--tol", tol, "Tolerance override for every check")->check(CLI::NonNegativeNumber);
  app.add_option("--trials", trials, "Number of trials (search: per cell)");
  app.add_option("--n", dims, "Dimension, or comma-separated dimensions")->delimiter(',');
  app.add_flag("--json", as_json, "Emit JSON instead of text");
  app.add_option("--out", out_path, "Output path (search: JSONL record stream)");
  app.add_option("--config", config_path, "JSON file with defaults for the global flags");

  std::string a_path, b_path, s_path;
  double t = 0.5;
  unsigned threads = 1;
  double kappa = 10.0;

  auto* verify = app.add_subcommand("verify", "Run the inequality checks on generated or supplied pairs");
  verify->add_option("--a", a_path, "MatrixFile for A");
  verify->add_option("--b", b_path, "MatrixFile for B");
  verify->add_option("--t", t, "Weight for the weighted checks on a supplied pair");
  verify->add_option("--threads", threads, "Worker threads");

  std::vector<Index> rs;
  double eps = 1e-8;
  auto* reduce = app.add_subcommand("reduce", "Run the reduction pipeline and print its stage table");
  reduce->add_option("--a", a_path, "MatrixFile for A");
  reduce->add_option("--b", b_path, "MatrixFile for B");
  reduce->add_option("--r", rs, "Index r, or comma-separated list (default: all)")->delimiter(',');
  reduce->add_option("--eps", eps, "Shift for semidefinite inputs");
  reduce->add_option("--kappa", kappa, "Condition number of generated inputs");

  std::string which;
  std::vector<std::string> mats;
  Index prop_r = 0;
  auto* prop = app.add_subcommand("prop", "Check lemma1, prop1, prop2 or prop3");
  prop->add_option("which", which)->required()->check(CLI::IsMember({"lemma1", "prop1", "prop2", "prop3"}));
  prop->add_option("--mat", mats, "NAME=VALUE, VALUE a number (1x1) or MatrixFile path");
  prop->add_option("--r", prop_r, "Block size for prop1");
  prop->add_option("--kappa", kappa, "Condition number of generated inputs");

  SearchFlags sf;
  auto* search = app.add_subcommand("search", "Counterexample search for the weighted conjecture");
  sf.app = search;
  search->add_option("--t-grid", sf.t_grid, "Comma-separated weights in [0, 1]")->delimiter(',');
  search->add_option("--refine-steps", sf.refine_steps);
  search->add_option("--refine-count", sf.refine_count);
  search->add_option("--step-scale", sf.step_scale);
  search->add_option("--threads", sf.threads);
  search->add_flag("--resume", sf.resume, "Continue the record stream at --out");
  search->add_flag("--salvage", sf.salvage, "Keep the valid prefix of a corrupt stream");

  std::string dsl_file;
  bool builtin = false;
  auto* dslc = app.add_subcommand("dsl", "Evaluate a file of DSL statements");
  dslc->add_option("file", dsl_file, "DSL file (one statement per line)");
  dslc->add_flag("--builtin", builtin, "Evaluate the builtin catalogue");
  dslc->add_option("--mat", mats, "NAME=VALUE binding");
  dslc->add_option("--a", a_path, "Binding for A");
  dslc->add_option("--b", b_path, "Binding for B");
  dslc->add_option("--s", s_path, "Binding for S (default: B)");
  dslc->add_option("--t", t, "Value of t");
  dslc->add_option("--kappa", kappa, "Condition number of generated bindings");

  std::string kind = "psd", field = "complex", shape = "loguniform";
  Index rank = -1;
  auto* gen = app.add_subcommand("gen", "Write a generated matrix as a MatrixFile");
  gen->add_option("--kind", kind)->check(CLI::IsMember({"psd", "unitary", "nonsingular"}));
  gen->add_option("--kappa", kappa, "Condition number");
  gen->add_option("--rank", rank, "Rank (default: full)");
  gen->add_option("--field", field, "real or complex");
  gen->add_option("--shape", shape, "loguniform, uniform or clustered");

  std::vector<std::string> owned(args.begin(), args.end());
  if (owned.empty()) owned.emplace_back("matineq");
  std::vector<char*> argv;
  for (std::string& s : owned) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  }

  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  try {
    if (!config_path.empty()) ctx.config = load_config(config_path);
    const json& cf = ctx.config;
    try {
      if (app.count("--seed")) {
        ctx.seed = seed;
        ctx.seed_explicit = true;
      } else if (cf.contains("seed")) {
        ctx.seed = cf.at("seed").get<std::uint64_t>();
        ctx.seed_explicit = true;
      } else if (const char* env = std::getenv("MATINEQ_SEED")) {
        ctx.seed = parse_seed(env, "MATINEQ_SEED");
        ctx.seed_explicit = true;
      }
      if (app.count("--tol"))
        ctx.tol = tol;
      else if (cf.contains("tol"))
        ctx.tol = cf.at("tol").get<double>();
      if (app.count("--trials"))
        ctx.trials = trials;
      else if (cf.contains("trials"))
        ctx.trials = cf.at("trials").get<std::size_t>();
      if (app.count("--n"))
        ctx.dims = dims;
      else if (cf.contains("n"))
        ctx.dims = cf.at("n").is_array() ? cf.at("n").get<std::vector<Index>>()
                                         : std::vector<Index>{cf.at("n").get<Index>()};
      ctx.as_json = app.count("--json") ? as_json : cf.value("json", false);
      ctx.out_path = app.count("--out") ? out_path : cf.value("out", std::string());
    } catch (const json::exception& e) {
      throw BadInput(config_path + ": " + e.what());
    }
    if (ctx.tol && !(*ctx.tol >= 0.0)) throw BadInput("tolerance must be >= 0");

    if (*verify) return cmd_verify(ctx, a_path, b_path, t, threads);
    if (*reduce) return cmd_reduce(ctx, a_path, b_path, rs, eps, kappa);
    if (*prop) return cmd_prop(ctx, which, mats, prop->count("--r") ? std::optional<Index>(prop_r) : std::nullopt, kappa);
    if (*search) return cmd_search(ctx, sf);
    if (*dslc) return cmd_dsl(ctx, dsl_file, builtin, mats, a_path, b_path, s_path, t, kappa);
    if (*gen) return cmd_gen(ctx, kind, kappa, rank, field, shape);
    return kBadConfig;
  } catch (const BadInput& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const MatrixFormatError& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const RecordError& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DegenerateInstance& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const PreconditionViolation& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  }
}

}  // namespace matineq::cli

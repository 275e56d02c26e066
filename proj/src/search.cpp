#include "matineq/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "matineq/generators.hpp"
#include "matineq/inequalities.hpp"
#include "matineq/matrix_io.hpp"

namespace matineq {

namespace {

using nlohmann::json;

constexpr double kNearFactor = 1e-3;
constexpr double kDecay = 0.95;
// Counter reserved for the refine seed stream; trial counters never reach it.
constexpr std::uint64_t kRefineStream = 0xFFFFFFFFFFFFFFFFULL;

using TrialKey = std::tuple<Index, std::size_t, std::size_t>;

TrialKey key_of(const TrialRecord& r) { return {r.n, r.t_index, r.trial}; }

Candidate candidate_from_trial(const TrialRecord& r, std::optional<double> tol) {
  const auto [a, b] = trial_instance(r.n, r.seed);
  Candidate c = score_candidate(a.matrix(), b.matrix(), r.t, tol);
  c.seed = r.seed;
  return c;
}

// Worst-first order on the scaled margin; position breaks ties.
std::vector<std::size_t> worst_trials(const std::vector<TrialRecord>& trials, std::size_t count) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < trials.size(); ++k)
    if (!trials[k].failed) idx.push_back(k);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return trials[x].margin / trials[x].scale < trials[y].margin / trials[y].scale;
  });
  if (idx.size() > count) idx.resize(count);
  return idx;
}

// Recomputes every derived field from `trials` and `refined`.
void finalize(SearchReport& r) {
  std::stable_sort(r.trials.begin(), r.trials.end(),
                   [](const TrialRecord& x, const TrialRecord& y) { return key_of(x) < key_of(y); });
  r.min_margin_per_cell.clear();
  r.trials_per_cell.clear();
  r.violations.clear();
  r.near_violations.clear();
  r.numerical_failures = 0;
  r.trials_run = r.trials.size();

  double best = std::numeric_limits<double>::infinity();
  double best_tol = 0.0;
  for (const TrialRecord& t : r.trials) {
    const CellKey cell{t.n, t.t};
    ++r.trials_per_cell[cell];
    if (t.failed) {
      ++r.numerical_failures;
      continue;
    }
    auto [it, fresh] = r.min_margin_per_cell.emplace(cell, t.margin);
    if (!fresh) it->second = std::min(it->second, t.margin);
    if (t.margin < best) {
      best = t.margin;
      best_tol = t.tolerance;
    }
    if (t.margin < kNearFactor * t.scale) r.near_violations.push_back(t);
    if (t.margin < -t.tolerance) {
      // Regenerated with the recorded tolerance so the flag cannot drift.
      Candidate c = candidate_from_trial(t, t.tolerance);
      r.violations.push_back(std::move(c));
    }
  }
  for (const Candidate& c : r.refined) {
    if (c.margin < best) {
      best = c.margin;
      best_tol = c.tolerance;
    }
    if (c.margin < -c.tolerance) r.violations.push_back(c);
  }
  r.cells_run = r.trials_per_cell.size();
  r.min_margin_overall = std::isfinite(best) ? best : 0.0;
  r.min_margin_tolerance = best_tol;
}

bool same_candidate(const Candidate& x, const Candidate& y) {
  return x.a == y.a && x.b == y.b && x.n == y.n && x.t == y.t && x.j == y.j && x.margin == y.margin &&
         x.scale == y.scale && x.tolerance == y.tolerance && x.seed == y.seed && x.refined == y.refined;
}

bool same_trial(const TrialRecord& x, const TrialRecord& y) {
  return key_of(x) == key_of(y) && x.t == y.t && x.seed == y.seed && x.j == y.j && x.margin == y.margin &&
         x.scale == y.scale && x.tolerance == y.tolerance && x.failed == y.failed;
}

template <class T, class F>
bool same_list(const std::vector<T>& x, const std::vector<T>& y, F eq) {
  return x.size() == y.size() && std::equal(x.begin(), x.end(), y.begin(), eq);
}

Matrix hermitian_part(const Matrix& m) { return Hermitian(m).matrix(); }

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

std::vector<double> SearchConfig::effective_t_grid() const { return t_grid.empty() ? default_t_grid() : t_grid; }

void SearchConfig::validate() const {
  for (Index n : dims)
    if (n < 1) throw DomainError("SearchConfig: dimensions must be >= 1");
  for (double t : t_grid)
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("SearchConfig: t-grid values must lie in [0, 1]");
  if (!(step_scale >= 0.0) || !std::isfinite(step_scale)) throw DomainError("SearchConfig: step scale must be >= 0");
  if (tol && !(*tol >= 0.0)) throw DomainError("SearchConfig: tolerance must be >= 0");
}

bool same_contents(const SearchReport& x, const SearchReport& y) {
  return x.cells_run == y.cells_run && x.trials_run == y.trials_run && x.numerical_failures == y.numerical_failures &&
         x.min_margin_overall == y.min_margin_overall && x.min_margin_tolerance == y.min_margin_tolerance &&
         x.min_margin_per_cell == y.min_margin_per_cell && x.trials_per_cell == y.trials_per_cell &&
         same_list(x.violations, y.violations, same_candidate) &&
         same_list(x.near_violations, y.near_violations, same_trial) &&
         same_list(x.refined, y.refined, same_candidate) && same_list(x.trials, y.trials, same_trial);
}

std::uint64_t trial_seed(std::uint64_t master, Index n, std::size_t t_index, std::size_t trial) {
  const std::uint64_t cell = derive_seed(derive_seed(master, static_cast<std::uint64_t>(n)), t_index);
  return derive_seed(cell, trial);
}

std::pair<Psd, Psd> trial_instance(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto draw = [&](std::uint64_t stream) {
    GenSpec g;
    g.n = n;
    g.condition = std::pow(10.0, 4.0 * unit(rng));
    g.field = unit(rng) < 0.5 ? Field::Real : Field::Complex;
    const double s = unit(rng);
    g.shape = s < 1.0 / 3 ? SpectrumShape::LogUniform : s < 2.0 / 3 ? SpectrumShape::Uniform : SpectrumShape::Clustered;
    if (n > 1 && unit(rng) < 0.2) g.rank = 1 + static_cast<Index>(unit(rng) * static_cast<double>(n - 1));
    g.seed = derive_seed(seed, stream);
    return random_psd_rank(g);
  };
  Psd a = draw(1);
  Psd b = draw(2);
  // Relative scale of B in [0.1, 10].
  const double c = std::pow(10.0, 2.0 * unit(rng) - 1.0);
  b = Psd::with_certificate(Hermitian(c * b.matrix()), c * b.min_eig());
  return {a, b};
}

Candidate score_candidate(const Matrix& a, const Matrix& b, double t, std::optional<double> tol) {
  const InequalityInstance inst(Psd(Hermitian(a)), Psd(Hermitian(b)), t);
  const InequalityResult r = check_conjecture(inst, tol);
  Candidate c;
  c.a = inst.a.matrix();
  c.b = inst.b.matrix();
  c.n = inst.a.dim();
  c.t = t;
  const auto worst = std::min_element(r.margins.begin(), r.margins.end());
  c.j = static_cast<Index>(worst - r.margins.begin()) + 1;
  c.margin = *worst;
  c.scale = 1.0 + spectral_norm(inst.a) + spectral_norm(inst.b);
  c.tolerance = r.tolerance;
  return c;
}

Candidate refine(const Candidate& c, std::size_t steps, double step_scale, std::uint64_t seed,
                 std::optional<double> tol) {
  if (steps == 0 || !std::isfinite(c.margin)) return c;
  const Index n = c.a.rows();
  const Psd a0(Hermitian(c.a));
  const Psd b0(Hermitian(c.b));
  const double target = spectral_norm(a0) + spectral_norm(b0);
  if (!(target > 0.0)) return c;
  const double delta = 1e-10 * (1.0 + target);
  const Field fld = detect_field(c.a) == Field::Real && detect_field(c.b) == Field::Real ? Field::Real : Field::Complex;

  Matrix ga = psd_sqrt(a0).matrix();
  Matrix gb = psd_sqrt(b0).matrix();
  double t = c.t;
  Candidate best = c;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double noise_norm = 2.0 * std::sqrt(static_cast<double>(n));
  const Matrix id = Matrix::Identity(n, n);
  double step = step_scale;
  for (std::size_t k = 0; k < steps; ++k, step *= kDecay) {
    const Matrix na = gaussian_matrix(n, n, fld, rng);
    const Matrix nb = gaussian_matrix(n, n, fld, rng);
    const double dt = nd(rng);
    Matrix pa = ga + (step * spectral_norm(ga) / noise_norm) * na;
    Matrix pb = gb + (step * spectral_norm(gb) / noise_norm) * nb;
    const double pt = std::clamp(t + 0.5 * step * dt, 0.0, 1.0);

    Matrix a = hermitian_part(pa * pa.adjoint() + delta * id);
    Matrix b = hermitian_part(pb * pb.adjoint() + delta * id);
    const double f = target / (spectral_norm(Hermitian(a)) + spectral_norm(Hermitian(b)));
    a *= f;
    b *= f;
    try {
      Candidate trial = score_candidate(a, b, pt, tol);
      if (trial.margin < best.margin) {
        best = std::move(trial);
        ga = std::sqrt(f) * pa;
        gb = std::sqrt(f) * pb;
        t = pt;
      }
    } catch (const Error&) {
      // A proposal that cannot be scored is rejected.
    }
  }
  if (best.margin < c.margin) {
    best.refined = true;
    best.seed = seed;
  }
  return best;
}

SearchReport random_sweep(const SearchConfig& cfg, const SearchReport* prior) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> grid = cfg.effective_t_grid();

  SearchReport report;
  std::set<TrialKey> done;
  if (prior) {
    for (const TrialRecord& r : prior->trials) {
      if (r.t_index >= grid.size() || grid[r.t_index] != r.t || r.seed != trial_seed(cfg.seed, r.n, r.t_index, r.trial))
        throw Error("random_sweep: prior trial (n=" + std::to_string(r.n) + ", trial " + std::to_string(r.trial) +
                    ") does not belong to this configuration");
      done.insert(key_of(r));
      report.trials.push_back(r);
    }
  }

  std::vector<TrialRecord> todo;
  for (Index n : cfg.dims)
    for (std::size_t ti = 0; ti < grid.size(); ++ti)
      for (std::size_t k = 0; k < cfg.trials_per_cell; ++k) {
        TrialRecord r;
        r.n = n;
        r.t_index = ti;
        r.t = grid[ti];
        r.trial = k;
        if (done.count(key_of(r))) continue;
        r.seed = trial_seed(cfg.seed, n, ti, k);
        todo.push_back(r);
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      TrialRecord& r = todo[k];
      try {
        const auto [a, b] = trial_instance(r.n, r.seed);
        const Candidate c = score_candidate(a.matrix(), b.matrix(), r.t, cfg.tol);
        r.j = c.j;
        r.margin = c.margin;
        r.scale = c.scale;
        r.tolerance = c.tolerance;
      } catch (const Error&) {
        r.failed = true;
      }
    }
  };
  const unsigned threads = std::max(1u, cfg.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.trials.insert(report.trials.end(), todo.begin(), todo.end());
  finalize(report);

  const std::uint64_t refine_master = derive_seed(cfg.seed, kRefineStream);
  const std::vector<std::size_t> worst = worst_trials(report.trials, cfg.refine_count);
  for (std::size_t rank = 0; rank < worst.size(); ++rank) {
    const Candidate c = candidate_from_trial(report.trials[worst[rank]], cfg.tol);
    Candidate out = refine(c, cfg.refine_steps, cfg.step_scale, derive_seed(refine_master, rank), cfg.tol);
    out.refined = true;
    report.refined.push_back(std::move(out));
  }
  finalize(report);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!cfg.out_path.empty()) persist_candidates(report, cfg.out_path, cfg, prior);
  return report;
}

// ---------------------------------------------------------------------------
// Records

json config_to_json(const SearchConfig& cfg) {
  json j;
  j["dims"] = cfg.dims;
  j["t_grid"] = cfg.effective_t_grid();
  j["trials_per_cell"] = cfg.trials_per_cell;
  j["refine_steps"] = cfg.refine_steps;
  j["refine_count"] = cfg.refine_count;
  j["step_scale"] = cfg.step_scale;
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol ? json(*cfg.tol) : json(nullptr);
  j["threads"] = cfg.threads;
  return j;
}

SearchConfig config_from_json(const json& j) {
  SearchConfig cfg;
  if (!j.is_object()) throw Error("search config must be a JSON object");
  if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<Index>>();
  if (j.contains("t_grid")) cfg.t_grid = j.at("t_grid").get<std::vector<double>>();
  if (j.contains("trials_per_cell")) cfg.trials_per_cell = j.at("trials_per_cell").get<std::size_t>();
  if (j.contains("refine_steps")) cfg.refine_steps = j.at("refine_steps").get<std::size_t>();
  if (j.contains("refine_count")) cfg.refine_count = j.at("refine_count").get<std::size_t>();
  if (j.contains("step_scale")) cfg.step_scale = j.at("step_scale").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tol") && !j.at("tol").is_null()) cfg.tol = j.at("tol").get<double>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
  cfg.validate();
  return cfg;
}

json trial_to_json(const TrialRecord& r) {
  return json{{"type", "trial"}, {"n", r.n},         {"t_index", r.t_index},     {"t", r.t},
              {"trial", r.trial}, {"seed", r.seed},  {"j", r.j},                 {"margin", r.margin},
              {"scale", r.scale}, {"tol", r.tolerance}, {"failed", r.failed}};
}

TrialRecord trial_from_json(const json& j) {
  TrialRecord r;
  r.n = field<Index>(j, "n");
  r.t_index = field<std::size_t>(j, "t_index");
  r.t = field<double>(j, "t");
  r.trial = field<std::size_t>(j, "trial");
  r.seed = field<std::uint64_t>(j, "seed");
  r.j = field<Index>(j, "j");
  r.margin = field<double>(j, "margin");
  r.scale = field<double>(j, "scale");
  r.tolerance = field<double>(j, "tol");
  r.failed = field<bool>(j, "failed");
  return r;
}

json candidate_to_json(const Candidate& c) {
  return json{{"type", "candidate"},  {"n", c.n},         {"t", c.t},
              {"j", c.j},             {"margin", c.margin}, {"scale", c.scale},
              {"tol", c.tolerance},   {"seed", c.seed},   {"refined", c.refined},
              {"A", matrix_to_json(c.a)}, {"B", matrix_to_json(c.b)}};
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.n = field<Index>(j, "n");
  c.t = field<double>(j, "t");
  c.j = field<Index>(j, "j");
  c.margin = field<double>(j, "margin");
  c.scale = field<double>(j, "scale");
  c.tolerance = field<double>(j, "tol");
  c.seed = field<std::uint64_t>(j, "seed");
  c.refined = field<bool>(j, "refined");
  if (!j.contains("A") || !j.contains("B")) throw Error("candidate record needs matrices A and B");
  c.a = matrix_from_json(j.at("A"), "/A");
  c.b = matrix_from_json(j.at("B"), "/B");
  return c;
}

json summary_to_json(const SearchReport& r) {
  json cells = json::array();
  for (const auto& [key, m] : r.min_margin_per_cell)
    cells.push_back({{"n", key.first}, {"t", key.second}, {"min_margin", m}, {"trials", r.trials_per_cell.at(key)}});
  return json{{"type", "summary"},
              {"cells_run", r.cells_run},
              {"trials_run", r.trials_run},
              {"numerical_failures", r.numerical_failures},
              {"min_margin_overall", r.min_margin_overall},
              {"min_margin_tol", r.min_margin_tolerance},
              {"violations", r.violations.size()},
              {"near_violations", r.near_violations.size()},
              {"refined", r.refined.size()},
              {"cells", cells},
              {"wall_time", r.wall_time}};
}

void persist_candidates(const SearchReport& report, const std::string& path, const SearchConfig& cfg,
                        const SearchReport* persisted) {
  bool fresh = true;
  {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    if (probe && probe.tellg() > 0) fresh = false;
  }
  std::set<TrialKey> skip;
  if (persisted)
    for (const TrialRecord& r : persisted->trials) skip.insert(key_of(r));

  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("persist_candidates: cannot open " + path);
  if (fresh) out << json{{"type", "header"}, {"version", 1}, {"config", config_to_json(cfg)}}.dump() << '\n';
  for (const TrialRecord& r : report.trials)
    if (!skip.count(key_of(r))) out << trial_to_json(r).dump() << '\n';
  for (const Candidate& c : report.violations)
    if (!c.refined) out << candidate_to_json(c).dump() << '\n';
  for (const Candidate& c : report.refined) out << candidate_to_json(c).dump() << '\n';
  out << summary_to_json(report).dump() << '\n';
  out.flush();
  if (!out) throw Error("persist_candidates: write failed for " + path);
}

ResumeResult resume(const std::string& path, bool salvage) {
  ResumeResult res;
  std::ifstream in(path);
  if (!in) return res;

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  std::vector<std::size_t> trial_lines;

  bool batch_closed = false;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::string& line = lines[k];
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error("invalid JSON at byte " + std::to_string(e.byte));
      }
      if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw Error("record has no string 'type'");
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        res.config = config_from_json(field<json>(j, "config"));
      } else if (type == "trial") {
        res.report.trials.push_back(trial_from_json(j));
        trial_lines.push_back(k + 1);
      } else if (type == "candidate") {
        Candidate c = candidate_from_json(j);
        if (c.refined) {
          if (batch_closed) {
            res.report.refined.clear();
            batch_closed = false;
          }
          res.report.refined.push_back(std::move(c));
        }
      } else if (type == "summary") {
        batch_closed = true;
      } else {
        throw Error("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      // nlohmann type errors land here too.
      if (!salvage) throw RecordError(e.what(), k + 1);
      res.dropped_lines = lines.size() - k;
      break;
    }
    res.valid_bytes += line.size() + 1;
  }

  // Duplicate trial keys mean two runs were appended to the same stream.
  std::set<TrialKey> seen;
  for (std::size_t k = 0; k < res.report.trials.size(); ++k) {
    const TrialRecord& r = res.report.trials[k];
    if (!seen.insert(key_of(r)).second)
      throw RecordError("duplicate trial (n=" + std::to_string(r.n) + ", t index " + std::to_string(r.t_index) +
                            ", trial " + std::to_string(r.trial) + ")",
                        trial_lines[k]);
  }
  finalize(res.report);
  return res;
}

}  // namespace matineq

#pragma once

// Counterexample search for the weighted conjecture
//   lambda_j((1-t)A + tB) >= sqrt(sigma_j(A^{2(1-t)} B^{2t})).
//
// Every trial is a pure function of (seed, n, t index, trial index), so a
// sweep gives the same report under any thread schedule and a resumed run
// reproduces a single run of the same total budget.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "matineq/error.hpp"
#include "matineq/linalg.hpp"

namespace matineq {

struct SearchConfig {
  std::vector<Index> dims = {2, 3, 4, 5, 6, 7, 8};
  std::vector<double> t_grid;  // empty means default_t_grid()
  std::size_t trials_per_cell = 500;
  std::size_t refine_steps = 200;
  /// How many of the worst sweep candidates get refined.
  std::size_t refine_count = 10;
  double step_scale = 0.1;
  std::uint64_t seed = 0;
  /// Overrides the per-instance pair tolerance when set.
  std::optional<double> tol;
  /// JSONL record stream; empty disables persistence.
  std::string out_path;
  unsigned threads = 1;

  std::vector<double> effective_t_grid() const;
  void validate() const;
};

struct Candidate {
  Matrix a;
  Matrix b;
  Index n = 0;
  double t = 0.0;
  Index j = 1;  // 1-based index of the worst margin
  double margin = 0.0;
  double scale = 1.0;      // 1 + ||A|| + ||B||
  double tolerance = 0.0;  // the tol the margin is judged against
  std::uint64_t seed = 0;  // trial seed, or refine seed when refined
  bool refined = false;
};

/// One sweep trial as persisted: enough to regenerate the instance.
struct TrialRecord {
  Index n = 0;
  std::size_t t_index = 0;
  double t = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Index j = 1;
  double margin = 0.0;
  double scale = 1.0;
  double tolerance = 0.0;
  bool failed = false;  // numerical failure while scoring
};

using CellKey = std::pair<Index, double>;

struct SearchReport {
  std::size_t cells_run = 0;
  std::size_t trials_run = 0;
  std::size_t numerical_failures = 0;
  double min_margin_overall = 0.0;
  /// Tolerance of the instance attaining min_margin_overall.
  double min_margin_tolerance = 0.0;
  std::map<CellKey, double> min_margin_per_cell;
  std::map<CellKey, std::size_t> trials_per_cell;
  /// Exactly the candidates with margin < -tolerance.
  std::vector<Candidate> violations;
  /// Trials with margin < 1e-3 * scale, violations included. Matrices are
  /// not kept: trial_instance regenerates them from the seed.
  std::vector<TrialRecord> near_violations;
  /// Refinement outputs for the worst sweep candidates.
  std::vector<Candidate> refined;
  /// Every evaluated trial, ordered by (n, t index, trial).
  std::vector<TrialRecord> trials;
  double wall_time = 0.0;

  bool has_violation() const noexcept { return !violations.empty(); }
};

/// Equality of everything except wall_time.
bool same_contents(const SearchReport& x, const SearchReport& y);

/// Seed of trial `trial` in cell (n, t_index).
std::uint64_t trial_seed(std::uint64_t master, Index n, std::size_t t_index, std::size_t trial);
/// Regenerates the (A, B) pair of a trial seed. Rank, condition number,
/// field and spectrum shape are all drawn from the seed.
std::pair<Psd, Psd> trial_instance(Index n, std::uint64_t seed);

/// Scores a pair: worst index of check_conjecture.
Candidate score_candidate(const Matrix& a, const Matrix& b, double t, std::optional<double> tol = {});

/// Runs the sweep. With `prior` (from resume) only the missing trials are
/// evaluated and appended; refinement always runs on the full trial set.
SearchReport random_sweep(const SearchConfig& cfg, const SearchReport* prior = nullptr);

/// Gradient-free local minimization of the worst-index margin.
Candidate refine(const Candidate& c, std::size_t steps, double step_scale, std::uint64_t seed,
                 std::optional<double> tol = {});

// ---------------------------------------------------------------------------
// Persistence. One JSON object per line with a "type" of header, trial,
// candidate or summary.

/// A corrupt line in a record stream.
class RecordError : public Error {
 public:
  RecordError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json candidate_to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);
nlohmann::json trial_to_json(const TrialRecord& r);
TrialRecord trial_from_json(const nlohmann::json& j);
nlohmann::json summary_to_json(const SearchReport& r);

/// Appends trial records (skipping those already in `persisted`), candidate
/// records for violations and refinements, and a summary record. Writes a
/// header first when the file is new or empty.
void persist_candidates(const SearchReport& report, const std::string& path, const SearchConfig& cfg,
                        const SearchReport* persisted = nullptr);

struct ResumeResult {
  SearchReport report;
  std::optional<SearchConfig> config;  // from the header, when present
  /// Lines dropped in salvage mode (the first corrupt line onwards).
  std::size_t dropped_lines = 0;
  /// Byte length of the accepted prefix; truncate to it before appending.
  std::uintmax_t valid_bytes = 0;
};

/// Rebuilds a report from the trial records of a stream. A missing or empty
/// file gives a fresh report. A corrupt line raises RecordError unless
/// `salvage` is set, in which case the valid prefix is kept.
ResumeResult resume(const std::string& path, bool salvage = false);

nlohmann::json config_to_json(const SearchConfig& cfg);
SearchConfig config_from_json(const nlohmann::json& j);

}  // namespace matineq

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "matineq/generators.hpp"
#include "matineq/inequalities.hpp"
#include "matineq/search.hpp"
#include "support.hpp"

namespace mt = matineq::testing;
using namespace matineq;

namespace {

std::string temp_path(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("matineq_search_" + name + ".jsonl");
  std::filesystem::remove(p);
  return p.string();
}

SearchConfig small_config() {
  SearchConfig cfg;
  cfg.dims = {2, 3};
  cfg.t_grid = {0.25, 0.5, 0.9};
  cfg.trials_per_cell = 12;
  cfg.refine_steps = 15;
  cfg.refine_count = 3;
  cfg.seed = 2024;
  return cfg;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(RandomSweep, WeightZeroIsAnEqualityCase) {
  SearchConfig cfg = small_config();
  cfg.t_grid = {0.0};
  cfg.refine_count = 0;
  const SearchReport r = random_sweep(cfg);
  EXPECT_EQ(r.trials_run, 2u * 12u);
  EXPECT_FALSE(r.has_violation());
  for (const TrialRecord& t : r.trials) {
    ASSERT_FALSE(t.failed);
    EXPECT_LE(std::abs(t.margin), t.tolerance);
  }
}

TEST(RandomSweep, HalfWeightMatchesHalfOfTheoremMargin) {
  SearchConfig cfg = small_config();
  cfg.t_grid = {0.5};
  cfg.refine_count = 0;
  const SearchReport r = random_sweep(cfg);
  EXPECT_FALSE(r.has_violation());
  for (const TrialRecord& t : r.trials) {
    const auto [a, b] = trial_instance(t.n, t.seed);
    // lambda_j((A+B)/2) - sqrt(sigma_j(AB)) with Eigen's solvers.
    const RealVector lhs = mt::oracle_eigenvalues(0.5 * (a.matrix() + b.matrix()));
    const RealVector sv = mt::oracle_singular_values(a.matrix() * b.matrix());
    double worst = 1e300;
    for (Index j = 0; j < lhs.size(); ++j) worst = std::min(worst, lhs(j) - std::sqrt(std::max(sv(j), 0.0)));
    EXPECT_NEAR(t.margin, worst, 1e-8 * t.scale);
    const InequalityResult bkd = check_bkd(a, b);
    EXPECT_NEAR(t.margin, 0.5 * bkd.min_margin, 1e-12 * t.scale);
  }
}

TEST(RandomSweep, SameConfigSameReport) {
  const SearchConfig cfg = small_config();
  const SearchReport x = random_sweep(cfg);
  const SearchReport y = random_sweep(cfg);
  EXPECT_TRUE(same_contents(x, y));
  EXPECT_EQ(x.cells_run, 6u);
  EXPECT_EQ(x.refined.size(), 3u);
}

TEST(RandomSweep, ThreadScheduleDoesNotMatter) {
  SearchConfig cfg = small_config();
  const SearchReport serial = random_sweep(cfg);
  cfg.threads = 4;
  const SearchReport parallel = random_sweep(cfg);
  EXPECT_TRUE(same_contents(serial, parallel));
}

TEST(RandomSweep, DifferentSeedsDiffer) {
  SearchConfig cfg = small_config();
  const SearchReport x = random_sweep(cfg);
  cfg.seed += 1;
  const SearchReport y = random_sweep(cfg);
  EXPECT_FALSE(same_contents(x, y));
}

TEST(RandomSweep, ReportInvariants) {
  const SearchReport r = random_sweep(small_config());
  double overall = 1e300;
  for (const TrialRecord& t : r.trials) {
    overall = std::min(overall, t.margin);
    EXPECT_LE(r.min_margin_per_cell.at({t.n, t.t}), t.margin);
  }
  for (const Candidate& c : r.refined) overall = std::min(overall, c.margin);
  EXPECT_EQ(r.min_margin_overall, overall);
  EXPECT_GE(r.min_margin_overall, -r.min_margin_tolerance);
  // Violations are exactly the candidates below -tol.
  std::size_t below = 0;
  for (const TrialRecord& t : r.trials) below += t.margin < -t.tolerance;
  for (const Candidate& c : r.refined) below += c.margin < -c.tolerance;
  EXPECT_EQ(r.violations.size(), below);
  for (const TrialRecord& t : r.near_violations) EXPECT_LT(t.margin, 1e-3 * t.scale);
}

TEST(RandomSweep, RefinedCandidatesNeverWorsenTheirStart) {
  const SearchConfig cfg = small_config();
  const SearchReport r = random_sweep(cfg);
  std::vector<TrialRecord> sorted = r.trials;
  std::stable_sort(sorted.begin(), sorted.end(), [](const TrialRecord& x, const TrialRecord& y) {
    return x.margin / x.scale < y.margin / y.scale;
  });
  ASSERT_EQ(r.refined.size(), cfg.refine_count);
  for (std::size_t k = 0; k < r.refined.size(); ++k) EXPECT_LE(r.refined[k].margin, sorted[k].margin);
}

TEST(RandomSweep, InvalidConfig) {
  SearchConfig cfg = small_config();
  cfg.t_grid = {1.5};
  EXPECT_THROW(random_sweep(cfg), DomainError);
  cfg = small_config();
  cfg.dims = {0};
  EXPECT_THROW(random_sweep(cfg), DomainError);
}

TEST(ScoreCandidate, ScalarWeightedAmGmGrid) {
  // n = 1: the margin is (1-t)a + tb - a^{1-t} b^t >= 0 with equality at a = b.
  double floor = 1e300;
  for (double a : {1e-3, 0.1, 0.5, 1.0, 2.0, 7.0, 1e3})
    for (double b : {1e-3, 0.1, 0.5, 1.0, 2.0, 7.0, 1e3})
      for (int k = 0; k <= 10; ++k) {
        const double t = k / 10.0;
        const Candidate c = score_candidate(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), t);
        const double expected = (1 - t) * a + t * b - std::pow(a, 1 - t) * std::pow(b, t);
        EXPECT_NEAR(c.margin, expected, 1e-12 * c.scale);
        EXPECT_GE(c.margin, -c.tolerance);
        floor = std::min(floor, c.margin);
      }
  EXPECT_NEAR(floor, 0.0, 1e-12);
}

TEST(Refine, ZeroStepsReturnsInput) {
  const auto [a, b] = trial_instance(3, 5);
  const Candidate c = score_candidate(a.matrix(), b.matrix(), 0.3);
  const Candidate r = refine(c, 0, 0.1, 99);
  EXPECT_EQ(r.a, c.a);
  EXPECT_EQ(r.b, c.b);
  EXPECT_EQ(r.t, c.t);
  EXPECT_EQ(r.margin, c.margin);
  EXPECT_FALSE(r.refined);
}

TEST(Refine, Deterministic) {
  const auto [a, b] = trial_instance(4, 17);
  const Candidate c = score_candidate(a.matrix(), b.matrix(), 0.7);
  const Candidate x = refine(c, 40, 0.2, 123);
  const Candidate y = refine(c, 40, 0.2, 123);
  EXPECT_EQ(x.a, y.a);
  EXPECT_EQ(x.b, y.b);
  EXPECT_EQ(x.t, y.t);
  EXPECT_EQ(x.margin, y.margin);
}

TEST(Refine, EqualPairStaysAboveTolerance) {
  std::mt19937_64 rng(3);
  for (Index n : {1, 2, 3}) {
    const Matrix a = mt::random_pd_matrix(n, rng);
    const Candidate c = score_candidate(a, a, 0.4);
    EXPECT_NEAR(c.margin, 0.0, 1e-12 * c.scale);
    const Candidate r = refine(c, 150, 0.3, 8 + static_cast<std::uint64_t>(n));
    EXPECT_GE(r.margin, -r.tolerance);
  }
}

TEST(Refine, MonotoneAndFeasible) {
  for (std::uint64_t s = 0; s < 12; ++s) {
    const Index n = 2 + static_cast<Index>(s % 4);
    const auto [a, b] = trial_instance(n, derive_seed(77, s));
    const Candidate c = score_candidate(a.matrix(), b.matrix(), (s % 11) / 10.0);
    const Candidate r = refine(c, 60, 0.2, s);
    EXPECT_LE(r.margin, c.margin);
    EXPECT_GE(r.t, 0.0);
    EXPECT_LE(r.t, 1.0);
    if (r.refined) {
      EXPECT_GT(mt::oracle_eigenvalues(r.a).minCoeff(), 0.0);
      EXPECT_GT(mt::oracle_eigenvalues(r.b).minCoeff(), 0.0);
      // Rescaling keeps ||A|| + ||B|| fixed.
      EXPECT_NEAR(r.scale, c.scale, 1e-9 * c.scale);
    }
    // The recorded margin is reproducible from the stored matrices.
    EXPECT_NEAR(score_candidate(r.a, r.b, r.t).margin, r.margin, 1e-12 * r.scale);
  }
}

TEST(Persistence, ResumeReproducesReport) {
  SearchConfig cfg = small_config();
  cfg.out_path = temp_path("resume_same");
  const SearchReport original = random_sweep(cfg);
  const ResumeResult res = resume(cfg.out_path);
  ASSERT_TRUE(res.config.has_value());
  EXPECT_EQ(res.config->seed, cfg.seed);
  EXPECT_TRUE(same_contents(res.report, original));

  // Continuing with zero additional trials appends nothing new.
  const SearchReport again = random_sweep(cfg, &res.report);
  EXPECT_TRUE(same_contents(again, original));
  const auto lines = read_lines(cfg.out_path);
  std::size_t trial_lines = 0;
  for (const auto& l : lines) trial_lines += l.find("\"type\":\"trial\"") != std::string::npos;
  EXPECT_EQ(trial_lines, original.trials_run);
  EXPECT_TRUE(same_contents(resume(cfg.out_path).report, original));
}

TEST(Persistence, SplitBudgetMatchesSingleRun) {
  SearchConfig full = small_config();
  full.trials_per_cell = 10;
  const SearchReport single = random_sweep(full);

  SearchConfig first = full;
  first.trials_per_cell = 6;
  first.out_path = temp_path("split");
  random_sweep(first);

  SearchConfig second = full;
  second.out_path = first.out_path;
  const ResumeResult prior = resume(first.out_path);
  EXPECT_EQ(prior.report.trials_run, 6u * 6u);
  const SearchReport resumed = random_sweep(second, &prior.report);
  EXPECT_TRUE(same_contents(resumed, single));
  EXPECT_EQ(resumed.min_margin_overall, single.min_margin_overall);
  EXPECT_TRUE(same_contents(resume(first.out_path).report, single));
}

TEST(Persistence, EmptyOrMissingFileGivesFreshReport) {
  const std::string path = temp_path("empty");
  EXPECT_EQ(resume(path).report.trials_run, 0u);
  std::ofstream(path).close();
  const ResumeResult r = resume(path);
  EXPECT_EQ(r.report.trials_run, 0u);
  EXPECT_EQ(r.report.cells_run, 0u);
  EXPECT_FALSE(r.config.has_value());
}

TEST(Persistence, CorruptRecordIsPositioned) {
  SearchConfig cfg = small_config();
  cfg.out_path = temp_path("corrupt");
  cfg.refine_count = 0;
  random_sweep(cfg);
  auto lines = read_lines(cfg.out_path);
  ASSERT_GT(lines.size(), 10u);
  lines[5] = lines[5].substr(0, lines[5].size() / 2);  // torn write
  {
    std::ofstream out(cfg.out_path, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
  }
  try {
    resume(cfg.out_path);
    FAIL();
  } catch (const RecordError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
  const ResumeResult salvaged = resume(cfg.out_path, true);
  EXPECT_EQ(salvaged.report.trials_run, 4u);  // header, then trials on lines 2..5
  EXPECT_EQ(salvaged.dropped_lines, lines.size() - 5);

  // Truncating to the valid prefix and continuing recovers the full run.
  std::filesystem::resize_file(cfg.out_path, salvaged.valid_bytes);
  SearchConfig clean = cfg;
  clean.out_path.clear();
  const SearchReport resumed = random_sweep(cfg, &salvaged.report);
  EXPECT_TRUE(same_contents(resumed, random_sweep(clean)));
  EXPECT_NO_THROW(resume(cfg.out_path));
}

TEST(Persistence, UnknownRecordType) {
  const std::string path = temp_path("unknown");
  std::ofstream(path) << "{\"type\": \"mystery\"}\n";
  EXPECT_THROW(resume(path), RecordError);
}

TEST(Persistence, PriorFromAnotherSeedIsRejected) {
  SearchConfig cfg = small_config();
  cfg.refine_count = 0;
  const SearchReport r = random_sweep(cfg);
  cfg.seed += 1;
  EXPECT_THROW(random_sweep(cfg, &r), Error);
}

TEST(Persistence, CandidateRecordRoundTrip) {
  const auto [a, b] = trial_instance(3, 41);
  Candidate c = score_candidate(a.matrix(), b.matrix(), 0.6);
  c.seed = 41;
  const std::string line = candidate_to_json(c).dump();
  const Candidate back = candidate_from_json(nlohmann::json::parse(line));
  EXPECT_EQ(back.a, c.a);
  EXPECT_EQ(back.b, c.b);
  EXPECT_EQ(back.margin, c.margin);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_NEAR(score_candidate(back.a, back.b, back.t).margin, c.margin, 1e-12 * c.scale);
}

TEST(Persistence, ConfigRoundTrip) {
  SearchConfig cfg = small_config();
  cfg.tol = 1e-7;
  cfg.seed = 0xFFFFFFFFFFFFFFF0ULL;
  const SearchConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(back.dims, cfg.dims);
  EXPECT_EQ(back.t_grid, cfg.t_grid);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.tol, cfg.tol);
  EXPECT_EQ(back.refine_steps, cfg.refine_steps);
}

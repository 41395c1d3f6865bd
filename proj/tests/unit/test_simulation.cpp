#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "prefgait/errors.hpp"
#include "prefgait/simulation.hpp"
#include "support.hpp"

using namespace prefgait;
using prefgait::testing::TempDir;

TEST_SUITE("simulation") {

TEST_CASE("deterministic oracle session finishes") {
  SessionConfig c;
  c.seed = 11;
  OracleSpec o;
  o.true_weights = {1, 0, 0, 0, 0, 0};
  const auto r = run_simulated_session("d", c, o);
  CHECK(r.state.phase == SessionPhase::kFinished);
  CHECK(r.state.history.size() == 12);
  CHECK(r.true_weights == WeightVector{1, 0, 0, 0, 0, 0});
  CHECK(r.alignment == doctest::Approx(r.state.weight_history.back()[0]));
  CHECK(r.alignment > 0.0);
  CHECK(r.true_rank < 40);
}

TEST_CASE("a dominating profile is found by a noiseless oracle") {
  // Every feature of profile 7 sits at the rewarded end of its range, so it
  // dominates the batch under any weight with the matching sign pattern.
  const auto ranges = FeatureRanges::defaults();
  const WeightVector w = normalized({1, -1, 1, -1, 1, -1});
  int found = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SessionConfig c;
    c.seed = seed;
    c.batch_size = 10;
    c.batch = sample_batch(ranges, 10, seed + 100);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      c.batch[7].values[i] = w[i] > 0 ? ranges.bounds[i].upper : ranges.bounds[i].lower;
    }
    OracleSpec o;
    o.true_weights = w;
    c.sampler.beta = 5.0;
    const auto r = run_simulated_session("dom", c, o);
    found += r.state.final_index == 7u;
  }
  CHECK(found == 20);
}

TEST_CASE("true rank counts strictly better profiles") {
  const auto r = FeatureRanges::defaults();
  auto lo = familiarization_profile();
  auto mid = lo;
  auto hi = lo;
  lo.values[0] = 5.0;
  mid.values[0] = 6.0;
  hi.values[0] = 8.0;
  const std::vector<TorqueProfileFeatures> batch{mid, hi, lo, hi};
  const WeightVector w{1, 0, 0, 0, 0, 0};
  CHECK(true_rank(batch, 1, w, r) == 0);
  CHECK(true_rank(batch, 3, w, r) == 0);
  CHECK(true_rank(batch, 0, w, r) == 2);
  CHECK(true_rank(batch, 2, w, r) == 3);
}

TEST_CASE("campaign rows, rates and CSV") {
  OracleSpec o;
  o.has_weights = false;
  o.beta = 5.0;
  SessionConfig c;
  c.sampler.beta = 5.0;
  CampaignOptions opt;
  opt.seed_start = 3;
  opt.seed_count = 4;
  const auto s = run_campaign(c, o, opt);
  REQUIRE(s.rows.size() == 4);
  std::size_t top1 = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(s.rows[k].seed == 3 + k);
    top1 += s.rows[k].true_rank == 0;
  }
  CHECK(s.top1_rate == doctest::Approx(top1 / 4.0));
  CHECK(s.top3_rate >= s.top1_rate);

  std::ostringstream csv;
  write_campaign_csv(csv, s);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "seed,final_index,f1,f2,f3,f4,f5,f6,true_rank,alignment");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 4);

  opt.jobs = 3;
  const auto parallel = run_campaign(c, o, opt);
  std::ostringstream csv2;
  write_campaign_csv(csv2, parallel);
  CHECK(csv2.str() == csv.str());

  opt.seed_count = 0;
  CHECK_THROWS_AS(run_campaign(c, o, opt), ValidationError);
}

TEST_CASE("a one-seed campaign matches a single session") {
  TempDir dir;
  OracleSpec o;
  o.has_weights = false;
  o.beta = 2.0;
  o.seed = 10;
  SessionConfig c;
  CampaignOptions opt;
  opt.seed_start = 5;
  opt.log_dir = dir.path();
  run_campaign(c, o, opt);
  const auto log = SessionLog::read_file(dir / "sim-000005.jsonl");

  SessionConfig single = c;
  single.seed = 5;
  OracleSpec spec = o;
  spec.seed = 15;
  const auto r = run_simulated_session(campaign_session_id(5), single, spec);
  CHECK(log.events == r.log.events);
  CHECK(replay(log).belief == r.state.belief);
}

TEST_CASE("uninformative answers keep the posterior near degenerate") {
  // Averaged over the seeds: individual posteriors still tilt toward
  // whichever direction twelve coin flips happen to favour.
  SessionConfig c;
  c.strategy = Strategy::kRandom;
  OracleSpec o;
  o.has_weights = false;
  o.beta = 0.0;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    o.seed = seed;
    const auto r = run_simulated_session("u", c, o);
    const double m = posterior_summary(r.state.belief).mean_norm;
    CAPTURE(seed);
    CHECK(m < 0.5);
    total += m;
  }
  CHECK(total / 20.0 < 0.3);
}

TEST_CASE("validation round is logged") {
  SessionConfig c;
  c.seed = 6;
  OracleSpec o;
  o.has_weights = false;
  o.beta = std::numeric_limits<double>::infinity();
  const auto r = run_simulated_session("v", c, o, true);
  CHECK(validation_complete(r.state));
  std::size_t presented = 0;
  std::size_t results = 0;
  for (const auto& e : r.log.events) {
    if (e.event == "query_presented" && e.payload.contains("validation_index")) ++presented;
    if (e.event == "validation_result") ++results;
  }
  CHECK(presented == 12);
  CHECK(results == 12);
}

}  // TEST_SUITE

#include "prefgait/simulation.hpp"

#include <atomic>
#include <cstdio>
#include <ostream>
#include <thread>

#include "prefgait/errors.hpp"

namespace prefgait {

std::size_t true_rank(std::span<const TorqueProfileFeatures> batch, std::size_t index,
                      const WeightVector& true_weights, const FeatureRanges& ranges) {
  const double mine = reward(true_weights, batch[index], ranges);
  std::size_t rank = 0;
  for (const auto& p : batch) {
    if (reward(true_weights, p, ranges) > mine) ++rank;
  }
  return rank;
}

SimulationResult run_simulated_session(const std::string& session_id,
                                       const SessionConfig& config,
                                       const OracleSpec& oracle, bool run_validation,
                                       LogWriter* writer) {
  ManualClock clock;
  SimulationResult result;
  auto emit = [&](LogEvent e) {
    if (writer) writer->append(e);
    result.log.events.push_back(std::move(e));
  };

  LogHeader header{session_id, SessionMode::kSimulated, config, oracle, iso8601(clock.now_s())};
  emit(make_header_event(header));

  SimulatedUser user(oracle, config.ranges);
  result.true_weights = user.weights();

  SessionState state = initialize(config);
  emit(batch_created_event(state, iso8601(clock.now_s())));
  state = present_next_query(std::move(state));
  emit(query_presented_event(state, iso8601(clock.now_s())));

  while (state.phase == SessionPhase::kAwaitingChoice) {
    clock.advance(config.query_duration_s());
    const Option answer = user.respond(state.current_query);
    const std::string t = iso8601(clock.now_s());
    state = submit_choice(std::move(state), answer, t, Responder::kOracle);
    emit(choice_event(state.history.back(), state.iteration()));
    emit(belief_snapshot_event(state, t));
    if (state.phase == SessionPhase::kAwaitingChoice) {
      emit(query_presented_event(state, t));
    }
  }
  emit(finished_event(state, iso8601(clock.now_s())));

  if (run_validation) {
    state = begin_validation(std::move(state));
    while (!validation_complete(state)) {
      const std::size_t index = state.validation_cursor;
      emit(validation_presented_event(state, iso8601(clock.now_s())));
      clock.advance(config.query_duration_s());
      const auto& item = current_validation_item(state);
      state = submit_validation_choice(std::move(state), user.respond(item.query));
      emit(validation_result_event(state.validation[index], index, iso8601(clock.now_s())));
    }
  }

  const std::size_t final_index = state.final_index.value_or(0);
  result.true_rank = true_rank(state.batch, final_index, result.true_weights, config.ranges);
  result.alignment = dot(state.weight_history.back(), result.true_weights);
  result.state = std::move(state);
  return result;
}

std::string campaign_session_id(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim-%06llu", static_cast<unsigned long long>(seed));
  return buf;
}

CampaignSummary run_campaign(const SessionConfig& base, const OracleSpec& oracle,
                             const CampaignOptions& options) {
  if (options.seed_count == 0) throw ValidationError("seed count must be positive", {"seed_count"});
  base.validate();
  if (options.log_dir) std::filesystem::create_directories(*options.log_dir);

  CampaignSummary summary;
  summary.rows.resize(options.seed_count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t k = next++; k < options.seed_count && !failed; k = next++) {
      try {
        const std::uint64_t seed = options.seed_start + k;
        SessionConfig config = base;
        config.seed = seed;
        OracleSpec spec = oracle;
        spec.seed = oracle.seed + seed;
        const std::string id = campaign_session_id(seed);
        std::optional<LogWriter> writer;
        if (options.log_dir) {
          const auto path = *options.log_dir / (id + ".jsonl");
          std::filesystem::remove(path);
          writer.emplace(path);
        }
        const auto r = run_simulated_session(id, config, spec, options.run_validation,
                                             writer ? &*writer : nullptr);
        auto& row = summary.rows[k];
        row.seed = seed;
        row.final_index = r.state.final_index.value_or(0);
        row.final_profile = r.state.batch[row.final_index];
        row.true_rank = r.true_rank;
        row.alignment = r.alignment;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };

  const unsigned jobs = std::max(1u, options.jobs);
  std::vector<std::thread> threads;
  for (unsigned i = 1; i < jobs; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::size_t top1 = 0;
  std::size_t top3 = 0;
  double cos_sum = 0.0;
  for (const auto& row : summary.rows) {
    top1 += row.true_rank == 0;
    top3 += row.true_rank < 3;
    cos_sum += row.alignment;
  }
  const double n = static_cast<double>(summary.rows.size());
  summary.top1_rate = static_cast<double>(top1) / n;
  summary.top3_rate = static_cast<double>(top3) / n;
  summary.mean_alignment = cos_sum / n;
  return summary;
}

void write_campaign_csv(std::ostream& out, const CampaignSummary& summary) {
  out << "seed,final_index,f1,f2,f3,f4,f5,f6,true_rank,alignment\n";
  char buf[64];
  for (const auto& row : summary.rows) {
    out << row.seed << ',' << row.final_index;
    for (double v : row.final_profile.values) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%zu,%.6f\n", row.true_rank, row.alignment);
    out << buf;
  }
}

}  // namespace prefgait

#pragma once

// Closed-loop sessions against a simulated responder, and seeded campaigns.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prefgait/oracle.hpp"
#include "prefgait/query_engine.hpp"
#include "prefgait/session_log.hpp"

namespace prefgait {

struct SimulationResult {
  SessionState state;
  SessionLog log;
  WeightVector true_weights{};
  /// 0 = the oracle's best profile in the batch.
  std::size_t true_rank = 0;
  /// cos(posterior mean, true weights)
  double alignment = 0.0;
};

/// Number of batch profiles the oracle strictly prefers over `index`.
std::size_t true_rank(std::span<const TorqueProfileFeatures> batch, std::size_t index,
                      const WeightVector& true_weights, const FeatureRanges& ranges);

/// Runs all comparisons (and optionally the validation round) on a virtual
/// clock starting at the Unix epoch; each event is also appended to `writer`
/// when one is given.
SimulationResult run_simulated_session(const std::string& session_id,
                                       const SessionConfig& config,
                                       const OracleSpec& oracle, bool run_validation = false,
                                       LogWriter* writer = nullptr);

struct CampaignRow {
  std::uint64_t seed = 0;
  std::size_t final_index = 0;
  TorqueProfileFeatures final_profile;
  std::size_t true_rank = 0;
  double alignment = 0.0;
};

struct CampaignSummary {
  std::vector<CampaignRow> rows;
  double top1_rate = 0.0;
  double top3_rate = 0.0;
  double mean_alignment = 0.0;
};

struct CampaignOptions {
  std::uint64_t seed_start = 0;
  std::size_t seed_count = 1;
  unsigned jobs = 1;
  bool run_validation = false;
  /// Per-session JSONL logs are written here when set.
  std::optional<std::filesystem::path> log_dir;
};

/// Session `k` uses config seed `seed_start + k` and oracle seed
/// `oracle.seed + seed_start + k`.
CampaignSummary run_campaign(const SessionConfig& base, const OracleSpec& oracle,
                             const CampaignOptions& options);

/// Header: seed,final_index,f1..f6,true_rank,alignment
void write_campaign_csv(std::ostream& out, const CampaignSummary& summary);

std::string campaign_session_id(std::uint64_t seed);

}  // namespace prefgait

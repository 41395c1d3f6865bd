#pragma once

// Active preference-querying loop: batch initialization, query selection,
// belief updates per answer, stopping, and perturbation validation.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefgait/preference.hpp"
#include "prefgait/profile.hpp"

namespace prefgait {

enum class Strategy { kMutualInformation, kRandom };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct SessionConfig {
  std::size_t batch_size = 40;
  std::size_t comparisons = 12;
  double exposure_s = 20.0;
  double washout_s = 5.0;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::kMutualInformation;
  std::vector<FeatureKind> validation_targets{kAllFeatureKinds.begin(),
                                              kAllFeatureKinds.end()};
  FeatureRanges ranges = FeatureRanges::defaults();
  PerturbationMagnitudes perturbation{};
  MhConfig sampler{};
  int resolution = kDefaultResolution;
  /// Explicit batch replacing the sampled one (must be pairwise distinct).
  std::vector<TorqueProfileFeatures> batch;

  /// Time from query presentation until a choice may be accepted:
  /// option A exposure, washout, option B exposure.
  double query_duration_s() const { return 2.0 * exposure_s + washout_s; }

  void validate() const;
};

enum class SessionPhase { kInitialized, kAwaitingChoice, kUpdating, kFinished, kValidating };

std::string to_string(SessionPhase p);

struct ValidationItem {
  Query query;
  FeatureKind target = FeatureKind::kPeakTorqueExt;
  int sign = 1;
  /// Which presented option is the preferred (unperturbed) profile.
  Option preferred_option = Option::kA;
  std::optional<bool> kept;
};

struct SessionState {
  SessionConfig config;
  std::vector<TorqueProfileFeatures> batch;
  Belief belief;
  std::vector<Choice> history;
  SessionPhase phase = SessionPhase::kInitialized;
  Query dummy_query;
  Query current_query;
  /// Renormalized posterior mean after each belief update.
  std::vector<WeightVector> weight_history;
  std::optional<std::size_t> final_index;
  std::vector<ValidationItem> validation;
  std::size_t validation_cursor = 0;

  std::size_t iteration() const { return history.size(); }
  const TorqueProfileFeatures& final_profile() const;
};

/// Samples the batch, builds the prior belief and sets the dummy query
/// (batch[0], batch[1]); the dummy query never updates the belief.
SessionState initialize(const SessionConfig& config);

/// Expected information gain of asking (a, b): H(mean p) - mean H(p) over the
/// belief samples, with p the probability of answering A. Lies in [0, ln 2].
double mutual_information(const Belief& belief, const TorqueProfileFeatures& a,
                          const TorqueProfileFeatures& b, double beta,
                          const FeatureRanges& ranges);

/// Next query under the configured strategy; never repeats the query
/// currently held in `state.current_query`.
Query optimize_query(const SessionState& state);

/// Moves an initialized session to awaiting_choice with an optimized query.
SessionState present_next_query(SessionState state);

/// Records the answer to the current query, re-runs the posterior over the
/// whole history and either presents the next query or finishes.
SessionState submit_choice(SessionState state, Option chosen,
                           std::string timestamp = {},
                           Responder responder = Responder::kHuman);

/// One query per (target, sign) pairing `preferred` with its perturbed
/// version, in seeded random presentation order.
std::vector<ValidationItem> validation_round(const SessionState& state,
                                             const TorqueProfileFeatures& preferred,
                                             std::span<const FeatureKind> targets);

/// finished -> validating, using the final profile and configured targets.
SessionState begin_validation(SessionState state);
const ValidationItem& current_validation_item(const SessionState& state);
SessionState submit_validation_choice(SessionState state, Option chosen);
bool validation_complete(const SessionState& state);

struct KeepLose {
  std::size_t keep = 0;
  std::size_t lose = 0;
  bool operator==(const KeepLose&) const = default;
};

/// Per-target counts over answered validation items.
std::map<FeatureKind, KeepLose> summarize_validation(std::span<const ValidationItem> items);

void to_json(nlohmann::json& j, const SessionConfig& c);
/// Rejects unknown keys and reports offending fields.
void from_json(const nlohmann::json& j, SessionConfig& c);
void to_json(nlohmann::json& j, const ValidationItem& v);

}  // namespace prefgait

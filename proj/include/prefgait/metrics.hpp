#pragma once

// Mechanical power, power ratio and feature statistics.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefgait/gait.hpp"
#include "prefgait/preference.hpp"
#include "prefgait/profile.hpp"

namespace prefgait {

struct PowerProfile {
  std::vector<double> power_w;
  double mean_positive_w = 0.0;
  /// Mean |P| over negative samples.
  double mean_negative_w = 0.0;
};

/// P(t) = omega(t) * tau(t) over aligned samples.
PowerProfile power_profile(std::span<const double> torque_nm,
                           std::span<const double> omega_rads);

enum class RatioFlag { kOk, kInfinite, kUndefined };

std::string to_string(RatioFlag f);

struct PowerRatio {
  double value = 0.0;  // +inf when kInfinite, NaN when kUndefined
  RatioFlag flag = RatioFlag::kOk;

  bool finite() const { return flag == RatioFlag::kOk; }
};

/// Mean negative power magnitude over mean positive power.
PowerRatio power_ratio(const PowerProfile& profile);

struct FeatureStats {
  FeatureArray mean{};
  FeatureArray stddev{};  // sample (n-1)
  std::size_t count = 0;
};

/// Requires at least two profiles.
FeatureStats feature_stats(std::span<const TorqueProfileFeatures> profiles);

/// Power metrics over every cycle of a trace (both sides when each has
/// contact data).
struct TraceMetrics {
  std::size_t cycles = 0;
  /// Mean over cycles with a finite power ratio.
  std::optional<double> mean_pr;
  std::size_t non_finite_cycles = 0;
  RatioSummary stance_swing;
};

/// Throws UnsupportedInputError when the trace lacks torque or contact data.
TraceMetrics trace_metrics(const GaitTrace& trace);

struct ChosenDiscardedPr {
  std::optional<double> chosen_mean;
  std::optional<double> discarded_mean;
  std::vector<std::size_t> chosen_profiles;
  std::vector<std::size_t> discarded_profiles;
  /// Tested profiles without a usable PR value.
  std::vector<std::size_t> omissions;
};

struct TestedProfiles {
  std::vector<std::size_t> chosen;     // selected at least once
  std::vector<std::size_t> discarded;  // presented but never selected
};

/// Partitions the pairwise comparisons of a session: a profile picked at
/// least once counts as chosen.
TestedProfiles partition_tested(std::span<const Choice> history);

/// Averages per-profile PR within the chosen and discarded partitions.
/// Throws ValidationError when there are no tested profiles.
ChosenDiscardedPr chosen_vs_discarded_pr(std::span<const Choice> history,
                                         const std::map<std::size_t, double>& pr_by_profile);

void to_json(nlohmann::json& j, const FeatureStats& s);
void to_json(nlohmann::json& j, const ChosenDiscardedPr& c);
void to_json(nlohmann::json& j, const TraceMetrics& m);

}  // namespace prefgait

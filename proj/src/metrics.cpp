#include "prefgait/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "prefgait/errors.hpp"
#include "prefgait/preference.hpp"

namespace prefgait {

PowerProfile power_profile(std::span<const double> torque_nm,
                           std::span<const double> omega_rads) {
  if (torque_nm.size() != omega_rads.size()) {
    throw ValidationError("torque and angular velocity lengths differ (" +
                              std::to_string(torque_nm.size()) + " vs " +
                              std::to_string(omega_rads.size()) + ")",
                          {"torque", "omega"});
  }
  PowerProfile p;
  p.power_w.resize(torque_nm.size());
  double pos_sum = 0.0;
  double neg_sum = 0.0;
  std::size_t pos_n = 0;
  std::size_t neg_n = 0;
  for (std::size_t i = 0; i < torque_nm.size(); ++i) {
    const double w = omega_rads[i] * torque_nm[i];
    p.power_w[i] = w;
    if (w > 0.0) {
      pos_sum += w;
      ++pos_n;
    } else if (w < 0.0) {
      neg_sum -= w;
      ++neg_n;
    }
  }
  p.mean_positive_w = pos_n ? pos_sum / static_cast<double>(pos_n) : 0.0;
  p.mean_negative_w = neg_n ? neg_sum / static_cast<double>(neg_n) : 0.0;
  return p;
}

std::string to_string(RatioFlag f) {
  switch (f) {
    case RatioFlag::kOk: return "ok";
    case RatioFlag::kInfinite: return "infinite";
    case RatioFlag::kUndefined: return "undefined";
  }
  return "unknown";
}

PowerRatio power_ratio(const PowerProfile& profile) {
  if (profile.mean_positive_w > 0.0) {
    return {profile.mean_negative_w / profile.mean_positive_w, RatioFlag::kOk};
  }
  if (profile.mean_negative_w > 0.0) {
    return {std::numeric_limits<double>::infinity(), RatioFlag::kInfinite};
  }
  return {std::numeric_limits<double>::quiet_NaN(), RatioFlag::kUndefined};
}

FeatureStats feature_stats(std::span<const TorqueProfileFeatures> profiles) {
  if (profiles.size() < 2) {
    throw ValidationError("feature statistics need at least two profiles", {"profiles"});
  }
  FeatureStats s;
  s.count = profiles.size();
  const double n = static_cast<double>(profiles.size());
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) s.mean[i] += p.values[i];
  }
  for (auto& m : s.mean) m /= n;
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const double d = p.values[i] - s.mean[i];
      s.stddev[i] += d * d;
    }
  }
  for (auto& v : s.stddev) v = std::sqrt(v / (n - 1.0));
  return s;
}

TraceMetrics trace_metrics(const GaitTrace& trace) {
  if (!trace.has_torque) {
    throw UnsupportedInputError("trace has no commanded torque channel");
  }
  TraceMetrics m;
  std::vector<GaitCycle> all_cycles;
  double pr_sum = 0.0;
  std::size_t pr_n = 0;
  for (const Side side : {Side::kLeft, Side::kRight}) {
    const auto events = detect_events(trace, side);
    const auto cycles = segment_cycles(trace, events);
    const auto omega = trace.hip_velocity(side);
    for (const auto& c : cycles) {
      std::vector<double> tau(c.end - c.start);
      for (std::size_t i = c.start; i < c.end; ++i) tau[i - c.start] = trace.torque(i, side);
      const auto ratio = power_ratio(power_profile(
          tau, std::span<const double>(omega).subspan(c.start, c.end - c.start)));
      if (ratio.finite()) {
        pr_sum += ratio.value;
        ++pr_n;
      } else {
        ++m.non_finite_cycles;
      }
    }
    all_cycles.insert(all_cycles.end(), cycles.begin(), cycles.end());
  }
  m.cycles = all_cycles.size();
  if (pr_n) m.mean_pr = pr_sum / static_cast<double>(pr_n);
  m.stance_swing = stance_swing_ratio(all_cycles);
  return m;
}

TestedProfiles partition_tested(std::span<const Choice> history) {
  std::set<std::size_t> chosen;
  std::set<std::size_t> presented;
  for (const auto& c : history) {
    for (const auto idx : {c.query.index_a, c.query.index_b}) {
      if (idx != kNoIndex) presented.insert(idx);
    }
    const auto picked = c.query.index(c.selected);
    if (picked != kNoIndex) chosen.insert(picked);
  }
  TestedProfiles out;
  out.chosen.assign(chosen.begin(), chosen.end());
  for (const auto idx : presented) {
    if (!chosen.contains(idx)) out.discarded.push_back(idx);
  }
  return out;
}

ChosenDiscardedPr chosen_vs_discarded_pr(std::span<const Choice> history,
                                         const std::map<std::size_t, double>& pr_by_profile) {
  if (history.empty()) {
    throw ValidationError("session log has no comparisons", {"log"});
  }
  const auto tested = partition_tested(history);
  ChosenDiscardedPr out;
  out.chosen_profiles = tested.chosen;
  out.discarded_profiles = tested.discarded;
  auto average = [&](const std::vector<std::size_t>& indices) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto idx : indices) {
      const auto it = pr_by_profile.find(idx);
      if (it == pr_by_profile.end() || !std::isfinite(it->second)) {
        out.omissions.push_back(idx);
        continue;
      }
      sum += it->second;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  out.chosen_mean = average(tested.chosen);
  out.discarded_mean = average(tested.discarded);
  std::sort(out.omissions.begin(), out.omissions.end());
  return out;
}

namespace {
nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
}  // namespace

void to_json(nlohmann::json& j, const FeatureStats& s) {
  j = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto name = to_string(static_cast<FeatureKind>(i));
    j[name] = {{"mean", std::round(s.mean[i] * 10.0) / 10.0},
               {"std", std::round(s.stddev[i] * 10.0) / 10.0}};
  }
  j["count"] = s.count;
}

void to_json(nlohmann::json& j, const ChosenDiscardedPr& c) {
  j = nlohmann::json{{"chosen_mean_pr", optional_number(c.chosen_mean)},
                     {"discarded_mean_pr", optional_number(c.discarded_mean)},
                     {"chosen_profiles", c.chosen_profiles},
                     {"discarded_profiles", c.discarded_profiles},
                     {"omissions", c.omissions}};
}

void to_json(nlohmann::json& j, const TraceMetrics& m) {
  j = nlohmann::json{{"cycles", m.cycles},
                     {"mean_pr", optional_number(m.mean_pr)},
                     {"non_finite_cycles", m.non_finite_cycles},
                     {"stance_swing_mean", m.stance_swing.mean},
                     {"stance_swing_std", m.stance_swing.stddev},
                     {"stance_swing_excluded", m.stance_swing.excluded}};
}

}  // namespace prefgait

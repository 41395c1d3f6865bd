#pragma once

// Offline analysis bundle over session logs and per-profile gait traces.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefgait/metrics.hpp"
#include "prefgait/session_log.hpp"

namespace prefgait {

/// Per-profile trace metrics for one session, keyed by batch index.
using ProfileMetrics = std::map<std::size_t, TraceMetrics>;

/// JSON summary of one session: final profile, weight trajectory,
/// validation keep/lose counts and chosen-vs-discarded PR (when metrics are
/// available).
nlohmann::json session_report(const SessionLog& log, const ProfileMetrics& metrics);

/// Loads `<dir>/<session_id>/<idx>.csv`, falling back to `<dir>/<idx>.csv`.
/// Unreadable or unusable traces are recorded in `omissions`.
ProfileMetrics load_profile_metrics(const std::filesystem::path& traces_dir,
                                    const SessionLog& log,
                                    std::vector<std::string>& omissions);

struct ReportBundle {
  std::vector<std::filesystem::path> files;
  nlohmann::json summary;
  std::vector<std::string> omissions;
};

/// Writes final_torque_<id>.csv, weights_trajectory.csv, feature_stats.csv
/// (two or more sessions), pr_by_profile.csv, stance_swing.csv and
/// summary.json into `out_dir`. Output is byte-identical for identical
/// inputs. Throws ValidationError when `logs` is empty.
ReportBundle write_report(std::span<const SessionLog> logs,
                          const std::optional<std::filesystem::path>& traces_dir,
                          const std::filesystem::path& out_dir);

}  // namespace prefgait

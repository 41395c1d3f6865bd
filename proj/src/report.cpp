#include "prefgait/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "prefgait/errors.hpp"
#include "prefgait/gait.hpp"

namespace prefgait {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<WeightVector> weight_trajectory(const SessionLog& log) {
  std::vector<WeightVector> out;
  for (const auto& e : log.events) {
    if (e.event == "belief_snapshot") {
      out.push_back(e.payload.at("summary").at("mean").get<WeightVector>());
    }
  }
  return out;
}

const LogEvent* find_last(const SessionLog& log, const std::string& name) {
  for (auto it = log.events.rbegin(); it != log.events.rend(); ++it) {
    if (it->event == name) return &*it;
  }
  return nullptr;
}

std::map<std::size_t, double> pr_map(const ProfileMetrics& metrics) {
  std::map<std::size_t, double> out;
  for (const auto& [idx, m] : metrics) {
    if (m.mean_pr) out[idx] = *m.mean_pr;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path, std::vector<std::filesystem::path>& files) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  files.push_back(path);
  return out;
}

}  // namespace

nlohmann::json session_report(const SessionLog& log, const ProfileMetrics& metrics) {
  const LogHeader header = log.header();
  nlohmann::json r;
  r["session_id"] = header.session_id;
  r["mode"] = to_string(header.mode);
  const auto history = recorded_choices(log);
  r["comparisons"] = history.size();

  if (const auto* fin = find_last(log, "finished")) {
    r["finished"] = true;
    r["final_index"] = fin->payload.at("final_index");
    r["final_profile"] = fin->payload.value("final_profile", nlohmann::json(nullptr));
  } else {
    r["finished"] = false;
    r["final_index"] = nullptr;
    r["final_profile"] = nullptr;
  }
  r["weights_trajectory"] = weight_trajectory(log);

  std::vector<ValidationItem> items;
  for (const auto& e : log.events) {
    if (e.event != "validation_result") continue;
    ValidationItem v;
    v.target = feature_kind_from_string(e.payload.at("target").get<std::string>());
    v.sign = e.payload.at("sign").get<int>();
    if (!e.payload.at("kept").is_null()) v.kept = e.payload.at("kept").get<bool>();
    items.push_back(v);
  }
  nlohmann::json validation = nlohmann::json::object();
  for (const auto& [kind, counts] : summarize_validation(items)) {
    validation[to_string(kind)] = {{"keep", counts.keep}, {"lose", counts.lose}};
  }
  r["validation"] = validation;

  nlohmann::json traces = nlohmann::json::object();
  for (const auto& [idx, m] : metrics) traces[std::to_string(idx)] = m;
  r["trace_metrics"] = traces;
  if (!history.empty()) {
    r["pr_chosen_vs_discarded"] = chosen_vs_discarded_pr(history, pr_map(metrics));
  } else {
    r["pr_chosen_vs_discarded"] = nullptr;
  }
  return r;
}

ProfileMetrics load_profile_metrics(const std::filesystem::path& traces_dir,
                                    const SessionLog& log,
                                    std::vector<std::string>& omissions) {
  ProfileMetrics out;
  const auto header = log.header();
  const auto history = recorded_choices(log);
  const auto tested = partition_tested(history);
  std::set<std::size_t> wanted(tested.chosen.begin(), tested.chosen.end());
  wanted.insert(tested.discarded.begin(), tested.discarded.end());

  std::filesystem::path base = traces_dir / header.session_id;
  if (!std::filesystem::is_directory(base)) base = traces_dir;
  for (const auto idx : wanted) {
    const auto path = base / (std::to_string(idx) + ".csv");
    const std::string tag = header.session_id + "/" + std::to_string(idx);
    if (!std::filesystem::exists(path)) {
      omissions.push_back(tag + ": missing trace");
      continue;
    }
    try {
      std::ifstream in(path);
      out[idx] = trace_metrics(parse_gait_csv(in));
    } catch (const std::exception& e) {
      omissions.push_back(tag + ": " + e.what());
    }
  }
  return out;
}

ReportBundle write_report(std::span<const SessionLog> logs,
                          const std::optional<std::filesystem::path>& traces_dir,
                          const std::filesystem::path& out_dir) {
  if (logs.empty()) throw ValidationError("no session logs to analyze", {"logs"});
  std::filesystem::create_directories(out_dir);
  ReportBundle bundle;

  std::vector<ProfileMetrics> metrics(logs.size());
  if (traces_dir) {
    for (std::size_t s = 0; s < logs.size(); ++s) {
      metrics[s] = load_profile_metrics(*traces_dir, logs[s], bundle.omissions);
    }
  }

  nlohmann::json sessions = nlohmann::json::array();
  std::vector<TorqueProfileFeatures> finals;
  for (std::size_t s = 0; s < logs.size(); ++s) {
    auto report = session_report(logs[s], metrics[s]);
    const std::string id = report["session_id"].get<std::string>();
    if (!report["final_profile"].is_null()) {
      const auto profile = report["final_profile"].get<TorqueProfileFeatures>();
      finals.push_back(profile);
      auto out = open_out(out_dir / ("final_torque_" + id + ".csv"), bundle.files);
      write_curve_csv(out, interpolate(profile, logs[s].header().config.resolution));
    } else {
      bundle.omissions.push_back(id + ": session not finished, no final profile");
    }
    sessions.push_back(std::move(report));
  }

  {
    auto out = open_out(out_dir / "weights_trajectory.csv", bundle.files);
    out << "session_id,iteration,w1,w2,w3,w4,w5,w6\n";
    for (const auto& r : sessions) {
      const auto traj = r["weights_trajectory"].get<std::vector<WeightVector>>();
      for (std::size_t k = 0; k < traj.size(); ++k) {
        out << r["session_id"].get<std::string>() << ',' << (k + 1);
        for (double w : traj[k]) out << ',' << fmt(w);
        out << '\n';
      }
    }
  }

  nlohmann::json stats_json = nullptr;
  if (finals.size() >= 2) {
    const auto stats = feature_stats(finals);
    stats_json = stats;
    auto out = open_out(out_dir / "feature_stats.csv", bundle.files);
    out << "feature,mean,std\n";
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      out << to_string(static_cast<FeatureKind>(i)) << ',' << fmt(stats.mean[i], "%.1f")
          << ',' << fmt(stats.stddev[i], "%.1f") << '\n';
    }
  } else {
    bundle.omissions.push_back("feature_stats: needs at least two finished sessions");
  }

  if (traces_dir) {
    auto pr_out = open_out(out_dir / "pr_by_profile.csv", bundle.files);
    auto ss_out = open_out(out_dir / "stance_swing.csv", bundle.files);
    pr_out << "session_id,profile_index,chosen,mean_pr,cycles\n";
    ss_out << "session_id,profile_index,ratio_mean,ratio_std,cycles\n";
    for (std::size_t s = 0; s < logs.size(); ++s) {
      const std::string id = logs[s].header().session_id;
      const auto tested = partition_tested(recorded_choices(logs[s]));
      const std::set<std::size_t> chosen(tested.chosen.begin(), tested.chosen.end());
      for (const auto& [idx, m] : metrics[s]) {
        pr_out << id << ',' << idx << ',' << (chosen.contains(idx) ? 1 : 0) << ','
               << (m.mean_pr ? fmt(*m.mean_pr) : std::string("nan")) << ',' << m.cycles
               << '\n';
        ss_out << id << ',' << idx << ',' << fmt(m.stance_swing.mean) << ','
               << fmt(m.stance_swing.stddev) << ',' << m.stance_swing.ratios.size() << '\n';
      }
    }
  } else {
    bundle.omissions.push_back("pr_by_profile, stance_swing: no traces directory given");
  }

  bundle.summary = {{"sessions", sessions},
                    {"feature_stats", stats_json},
                    {"omissions", bundle.omissions}};
  {
    auto out = open_out(out_dir / "summary.json", bundle.files);
    out << bundle.summary.dump(2) << '\n';
  }
  return bundle;
}

}  // namespace prefgait

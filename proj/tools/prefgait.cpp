// prefgait: simulation campaigns, report generation, and the session service.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "prefgait/errors.hpp"
#include "prefgait/report.hpp"
#include "prefgait/session_service.hpp"
#include "prefgait/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prefgait;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidInput = 2,
  kNotFound = 3,
  kParse = 4,
  kBind = 5,
};

json read_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(std::string("cannot open ") + what + " file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + " file " + path.string() + ": " + e.what(),
                          {what});
  }
}

// Accepts a path to a JSON file or an inline JSON object.
json read_json_arg(const std::string& arg, const char* what) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return json::parse(arg);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("inline ") + what + ": " + e.what(), {what});
    }
  }
  return read_json_file(arg, what);
}

struct SimulateArgs {
  std::string config;
  std::string oracle;
  std::uint64_t seed_start = 0;
  std::size_t seed_count = 1;
  std::string out = "prefgait-campaign";
  std::string strategy;
  unsigned jobs = 0;
  bool validate = false;
};

int cmd_simulate(const SimulateArgs& a) {
  SessionConfig config;
  if (!a.config.empty()) {
    config = read_json_arg(a.config, "config").get<SessionConfig>();
  }
  if (!a.strategy.empty()) config.strategy = strategy_from_string(a.strategy);
  config.validate();

  OracleSpec oracle;
  oracle.has_weights = false;
  oracle.beta = config.sampler.beta;
  if (!a.oracle.empty()) oracle = read_json_arg(a.oracle, "oracle").get<OracleSpec>();

  CampaignOptions options;
  options.seed_start = a.seed_start;
  options.seed_count = a.seed_count;
  options.jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  options.run_validation = a.validate;
  options.log_dir = fs::path(a.out) / "logs";

  const CampaignSummary summary = run_campaign(config, oracle, options);
  const fs::path csv = fs::path(a.out) / "campaign.csv";
  std::ofstream out(csv, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot write " + csv.string());
  write_campaign_csv(out, summary);

  std::printf("sessions: %zu\n", summary.rows.size());
  std::printf("strategy: %s\n", to_string(config.strategy).c_str());
  std::printf("top-1 hit rate: %.3f\n", summary.top1_rate);
  std::printf("top-3 hit rate: %.3f\n", summary.top3_rate);
  std::printf("mean alignment: %.3f\n", summary.mean_alignment);
  std::printf("campaign csv: %s\n", csv.c_str());
  return kOk;
}

int cmd_analyze(const std::vector<std::string>& log_paths, const std::string& traces,
                const std::string& out_dir) {
  std::vector<fs::path> files;
  for (const auto& p : log_paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".jsonl") found.push_back(e.path());
        else if (fs::exists(e.path() / "session.jsonl")) found.push_back(e.path() / "session.jsonl");
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(p);
    }
  }
  std::vector<SessionLog> logs;
  for (const auto& f : files) logs.push_back(SessionLog::read_file(f));

  std::optional<fs::path> traces_dir;
  if (!traces.empty()) {
    if (!fs::is_directory(traces)) throw NotFoundError("traces directory " + traces + " not found");
    traces_dir = traces;
  }
  const ReportBundle bundle = write_report(logs, traces_dir, out_dir);
  for (const auto& f : bundle.files) std::printf("wrote %s\n", f.c_str());
  for (const auto& o : bundle.omissions) std::fprintf(stderr, "omitted: %s\n", o.c_str());
  return kOk;
}

int cmd_serve(const std::string& config_path) {
  std::optional<fs::path> file;
  if (!config_path.empty()) file = config_path;
  const ServiceConfig config = ServiceConfig::load(file);

  // Block termination signals before any thread starts so only the waiter
  // below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto manager = std::make_shared<SessionManager>(config.data_dir);
  const std::size_t recovered = manager->recover();
  HttpService service(manager);
  if (!service.bind(config.host, config.port)) {
    std::fprintf(stderr, "error: cannot bind %s:%d\n", config.host.c_str(), config.port);
    return kBind;
  }
  std::printf("prefgait serving on %s:%d (data dir %s, %zu sessions recovered)\n",
              config.host.c_str(), config.port, config.data_dir.c_str(), recovered);
  std::fflush(stdout);

  std::atomic<bool> signalled{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    signalled = true;
    service.stop();
  });
  service.listen_after_bind();
  // Release the waiter if the server stopped without a signal.
  if (!signalled) ::kill(::getpid(), SIGTERM);
  waiter.join();
  std::printf("prefgait stopped\n");
  return kOk;
}

int cmd_replay(const std::string& path) {
  const SessionLog log = SessionLog::read_file(path);
  const SessionState state = replay(log);
  json out{{"session_id", log.header().session_id},
           {"phase", to_string(state.phase)},
           {"iteration", state.iteration()},
           {"belief", state.belief},
           {"summary", posterior_summary(state.belief, state.batch, state.config.ranges)}};
  if (state.final_index) out["final_index"] = *state.final_index;
  std::printf("%s\n", out.dump(2).c_str());
  return kOk;
}

template <typename Fn>
int run_reporting_errors(Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kParse;
  } catch (const NotFoundError& e) {
    std::fprintf(stderr, "not found: %s\n", e.what());
    return kNotFound;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalidInput;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based personalization of exoskeleton assistance profiles"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a seeded campaign of simulated sessions");
  simulate->add_option("--config", sim.config, "Session config (JSON file or inline object)");
  simulate->add_option("--oracle", sim.oracle,
                       "Oracle spec (JSON file or inline object); default: random w*, "
                       "beta equal to the learner's");
  simulate->add_option("--seed-start", sim.seed_start, "First seed")->capture_default_str();
  simulate->add_option("--seed-count", sim.seed_count, "Number of seeds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();
  simulate->add_option("--strategy", sim.strategy, "Query strategy")
      ->check(CLI::IsMember({"mi", "random", "mutual_information"}));
  simulate->add_option("--jobs", sim.jobs, "Worker threads (0 = hardware concurrency)");
  simulate->add_flag("--validate", sim.validate, "Run the validation round after each session");

  std::vector<std::string> logs;
  std::string traces;
  std::string analyze_out = "prefgait-report";
  auto* analyze = app.add_subcommand("analyze", "Build report artifacts from session logs");
  analyze->add_option("logs", logs, "Session logs (.jsonl) or directories of logs")->required();
  analyze->add_option("--traces", traces, "Directory of per-profile gait traces");
  analyze->add_option("--out", analyze_out, "Output directory")->capture_default_str();

  std::string serve_config;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service until SIGTERM");
  serve->add_option("--config", serve_config, "Service config JSON {host, port, data_dir}");

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a session log and print its state");
  replay_cmd->add_option("log", replay_path, "Session log")->required();

  CLI11_PARSE(app, argc, argv);

  if (*simulate) return run_reporting_errors([&] { return cmd_simulate(sim); });
  if (*analyze) return run_reporting_errors([&] { return cmd_analyze(logs, traces, analyze_out); });
  if (*serve) return run_reporting_errors([&] { return cmd_serve(serve_config); });
  if (*replay_cmd) return run_reporting_errors([&] { return cmd_replay(replay_path); });
  return kFailure;
}

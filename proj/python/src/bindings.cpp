// Python bindings. Structured values (configs, oracle specs, results) cross
// the boundary as JSON text; the package wrapper converts them to dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "prefgait/errors.hpp"
#include "prefgait/gait.hpp"
#include "prefgait/metrics.hpp"
#include "prefgait/oracle.hpp"
#include "prefgait/profile.hpp"
#include "prefgait/simulation.hpp"

namespace py = pybind11;
using namespace prefgait;

namespace {

TorqueProfileFeatures features(const FeatureArray& v) {
  TorqueProfileFeatures f;
  f.values = v;
  return f;
}

SessionConfig parse_config(const std::string& text) {
  return text.empty() ? SessionConfig{} : nlohmann::json::parse(text).get<SessionConfig>();
}

nlohmann::json result_json(const SimulationResult& r) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : r.log.events) events.push_back(e.to_json());
  nlohmann::json j{{"final_index", r.state.final_index ? nlohmann::json(*r.state.final_index)
                                                       : nlohmann::json(nullptr)},
                   {"true_weights", r.true_weights},
                   {"true_rank", r.true_rank},
                   {"alignment", r.alignment},
                   {"weight_history", r.state.weight_history},
                   {"events", events}};
  if (r.state.final_index) j["final_profile"] = r.state.final_profile().values;
  return j;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "prefgait core";

  // Translators run newest first: register the base class before the
  // specific errors.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<UnsupportedInputError>(m, "UnsupportedInputError", PyExc_ValueError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_FileNotFoundError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  m.def("default_ranges", [] {
    std::vector<std::pair<double, double>> out;
    for (const auto& b : FeatureRanges::defaults().bounds) out.emplace_back(b.lower, b.upper);
    return out;
  });
  m.def("familiarization_profile", [] { return familiarization_profile().values; });
  m.def("torque_at", [](const FeatureArray& f, double phase) { return torque_at(features(f), phase); });
  m.def(
      "interpolate",
      [](const FeatureArray& f, int resolution) {
        auto c = interpolate(features(f), resolution);
        return std::make_pair(c.phase, c.torque_nm);
      },
      py::arg("features"), py::arg("resolution") = kDefaultResolution);
  m.def("sample_batch", [](std::size_t count, std::uint64_t seed) {
    std::vector<FeatureArray> out;
    for (const auto& p : sample_batch(FeatureRanges::defaults(), count, seed)) out.push_back(p.values);
    return out;
  });
  m.def("perturb", [](const FeatureArray& f, const std::string& target, int sign) {
    return perturb(features(f), feature_kind_from_string(target), sign).values;
  });
  m.def("reward", [](const WeightVector& w, const FeatureArray& f) {
    return reward(w, features(f), FeatureRanges::defaults());
  });
  m.def("choice_probability", &choice_probability, py::arg("reward_chosen"),
        py::arg("reward_other"), py::arg("beta"));
  m.def("prior_belief", [](std::size_t n, std::uint64_t seed) { return prior_belief(n, seed).samples; });
  m.def("power_ratio", [](const std::vector<double>& torque, const std::vector<double>& omega) {
    return power_ratio(power_profile(torque, omega)).value;
  });
  m.def("trace_metrics", [](const std::string& csv) {
    return nlohmann::json(trace_metrics(parse_gait_csv_string(csv))).dump();
  });

  m.def(
      "simulate",
      [](const std::string& config, const std::string& oracle, bool validate) {
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = run_simulated_session("py", parse_config(config),
                                    nlohmann::json::parse(oracle).get<OracleSpec>(), validate);
        }
        return result_json(r).dump();
      },
      py::arg("config"), py::arg("oracle"), py::arg("validate") = false);
  m.def(
      "campaign",
      [](const std::string& config, const std::string& oracle, std::uint64_t seed_start,
         std::size_t seed_count, unsigned jobs) {
        CampaignOptions opt;
        opt.seed_start = seed_start;
        opt.seed_count = seed_count;
        opt.jobs = jobs;
        CampaignSummary s;
        {
          py::gil_scoped_release release;
          s = run_campaign(parse_config(config), nlohmann::json::parse(oracle).get<OracleSpec>(),
                           opt);
        }
        std::ostringstream csv;
        write_campaign_csv(csv, s);
        return nlohmann::json{{"top1_rate", s.top1_rate},
                              {"top3_rate", s.top3_rate},
                              {"mean_alignment", s.mean_alignment},
                              {"csv", csv.str()}}
            .dump();
      },
      py::arg("config"), py::arg("oracle"), py::arg("seed_start") = 0,
      py::arg("seed_count") = 1, py::arg("jobs") = 1);
  m.def("replay", [](const std::string& path) {
    const auto s = replay(SessionLog::read_file(path));
    nlohmann::json j{{"iteration", s.iteration()},
                     {"phase", to_string(s.phase)},
                     {"weight_history", s.weight_history}};
    j["final_index"] = s.final_index ? nlohmann::json(*s.final_index) : nlohmann::json(nullptr);
    return j.dump();
  });
}

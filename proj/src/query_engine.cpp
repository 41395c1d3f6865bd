#include "prefgait/query_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "prefgait/errors.hpp"
#include "prefgait/rng.hpp"

namespace prefgait {

std::string to_string(Strategy s) {
  return s == Strategy::kMutualInformation ? "mutual_information" : "random";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "mutual_information" || s == "mi") return Strategy::kMutualInformation;
  if (s == "random") return Strategy::kRandom;
  throw ValidationError("unknown query strategy '" + s + "'", {"strategy"});
}

std::string to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::kInitialized: return "initialized";
    case SessionPhase::kAwaitingChoice: return "awaiting_choice";
    case SessionPhase::kUpdating: return "updating";
    case SessionPhase::kFinished: return "finished";
    case SessionPhase::kValidating: return "validating";
  }
  return "unknown";
}

void SessionConfig::validate() const {
  std::vector<std::string> bad;
  if (comparisons < 1) bad.emplace_back("comparisons");
  if (!(exposure_s > 0.0) || !std::isfinite(exposure_s)) bad.emplace_back("exposure_s");
  if (!(washout_s > 0.0) || !std::isfinite(washout_s)) bad.emplace_back("washout_s");
  if (resolution < 100) bad.emplace_back("resolution");
  if (batch.empty() && batch_size < 2) bad.emplace_back("batch_size");
  if (!batch.empty() && batch.size() < 2) bad.emplace_back("batch");
  if (!bad.empty()) {
    std::string msg = "invalid session config:";
    for (const auto& f : bad) msg += " " + f;
    throw ValidationError(msg, bad);
  }
  ranges.validate();
  sampler.validate();
  for (const auto& p : batch) validate_shape(p);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = i + 1; j < batch.size(); ++j) {
      if (batch[i].values == batch[j].values) {
        throw ValidationError("explicit batch profiles must be pairwise distinct",
                              {"batch"});
      }
    }
  }
}

const TorqueProfileFeatures& SessionState::final_profile() const {
  if (!final_index) throw StateError("session has no final profile yet");
  return batch.at(*final_index);
}

namespace {

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

Query make_query(const std::vector<TorqueProfileFeatures>& batch, std::size_t i,
                 std::size_t j) {
  Query q;
  q.a = batch[i];
  q.b = batch[j];
  q.index_a = i;
  q.index_b = j;
  return q;
}

bool same_pair(const Query& q, std::size_t i, std::size_t j) {
  return (q.index_a == i && q.index_b == j) || (q.index_a == j && q.index_b == i);
}

void require_phase(const SessionState& s, SessionPhase want, const char* op) {
  if (s.phase != want) {
    throw StateError(std::string(op) + " requires phase " + to_string(want) +
                     ", session is " + to_string(s.phase));
  }
}

}  // namespace

SessionState initialize(const SessionConfig& config) {
  config.validate();
  SessionState s;
  s.config = config;
  s.batch = config.batch.empty()
                ? sample_batch(config.ranges, config.batch_size, config.seed)
                : config.batch;
  s.config.batch_size = s.batch.size();
  s.belief = prior_belief(config.sampler.num_samples, config.seed);
  s.dummy_query = make_query(s.batch, 0, 1);
  s.current_query = s.dummy_query;
  s.phase = SessionPhase::kInitialized;
  return s;
}

double mutual_information(const Belief& belief, const TorqueProfileFeatures& a,
                          const TorqueProfileFeatures& b, double beta,
                          const FeatureRanges& ranges) {
  const auto phi_a = normalize_features(a, ranges);
  const auto phi_b = normalize_features(b, ranges);
  double p_sum = 0.0;
  double h_sum = 0.0;
  for (const auto& w : belief.samples) {
    const double p = choice_probability(dot(w, phi_a), dot(w, phi_b), beta);
    p_sum += p;
    h_sum += binary_entropy(p);
  }
  const double n = static_cast<double>(belief.samples.size());
  return std::clamp(binary_entropy(p_sum / n) - h_sum / n, 0.0, std::log(2.0));
}

Query optimize_query(const SessionState& state) {
  const auto& batch = state.batch;
  const std::size_t n = batch.size();
  if (n < 2) throw ValidationError("query selection needs a batch of at least 2", {"batch"});
  const Query& previous = state.current_query;
  const std::size_t total_pairs = n * (n - 1) / 2;

  if (state.config.strategy == Strategy::kRandom) {
    Rng rng(derive_seed(state.config.seed, streams::kQuery, state.history.size()));
    const bool exclude = total_pairs > 1 && previous.index_a < n && previous.index_b < n;
    std::uniform_int_distribution<std::size_t> pick(0, total_pairs - (exclude ? 2 : 1));
    std::size_t target = pick(rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (exclude && same_pair(previous, i, j)) continue;
        if (target-- == 0) return make_query(batch, i, j);
      }
    }
  }

  // Rewards per (profile, sample) once; MI over every unordered pair.
  const auto& samples = state.belief.samples;
  const std::size_t m = samples.size();
  const double beta = state.config.sampler.beta;
  std::vector<double> rewards(n * m);
  for (std::size_t k = 0; k < n; ++k) {
    const auto phi = normalize_features(batch[k], state.config.ranges);
    for (std::size_t s = 0; s < m; ++s) rewards[k * m + s] = dot(samples[s], phi);
  }
  double best = -1.0;
  std::size_t best_i = 0;
  std::size_t best_j = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (total_pairs > 1 && same_pair(previous, i, j)) continue;
      double p_sum = 0.0;
      double h_sum = 0.0;
      for (std::size_t s = 0; s < m; ++s) {
        const double p = choice_probability(rewards[i * m + s], rewards[j * m + s], beta);
        p_sum += p;
        h_sum += binary_entropy(p);
      }
      const double mi = binary_entropy(p_sum / static_cast<double>(m)) -
                        h_sum / static_cast<double>(m);
      if (mi > best) {
        best = mi;
        best_i = i;
        best_j = j;
      }
    }
  }
  return make_query(batch, best_i, best_j);
}

SessionState present_next_query(SessionState state) {
  require_phase(state, SessionPhase::kInitialized, "present_next_query");
  state.current_query = optimize_query(state);
  state.phase = SessionPhase::kAwaitingChoice;
  return state;
}

SessionState submit_choice(SessionState state, Option chosen, std::string timestamp,
                           Responder responder) {
  require_phase(state, SessionPhase::kAwaitingChoice, "submit_choice");
  state.phase = SessionPhase::kUpdating;
  state.history.push_back(
      Choice{state.current_query, chosen, std::move(timestamp), responder});
  state.belief = mh_update(state.belief, state.history, state.config.sampler,
                           state.config.ranges);
  const auto summary = posterior_summary(state.belief, state.batch, state.config.ranges);
  state.weight_history.push_back(summary.mean);

  if (state.history.size() >= state.config.comparisons) {
    state.final_index = summary.best_index;
    state.phase = SessionPhase::kFinished;
    return state;
  }
  state.current_query = optimize_query(state);
  state.phase = SessionPhase::kAwaitingChoice;
  return state;
}

std::vector<ValidationItem> validation_round(const SessionState& state,
                                             const TorqueProfileFeatures& preferred,
                                             std::span<const FeatureKind> targets) {
  std::size_t preferred_index = kNoIndex;
  for (std::size_t k = 0; k < state.batch.size(); ++k) {
    if (state.batch[k].values == preferred.values) {
      preferred_index = k;
      break;
    }
  }
  std::vector<ValidationItem> items;
  items.reserve(targets.size() * 2);
  for (const FeatureKind target : targets) {
    for (const int sign : {+1, -1}) {
      ValidationItem item;
      item.target = target;
      item.sign = sign;
      const auto perturbed = perturb(preferred, target, sign, state.config.perturbation,
                                     state.config.resolution);
      Rng rng(derive_seed(state.config.seed, streams::kValidation, items.size()));
      const bool swap = std::bernoulli_distribution(0.5)(rng);
      item.query.swapped = swap;
      if (swap) {
        item.query.a = perturbed;
        item.query.b = preferred;
        item.query.index_b = preferred_index;
        item.preferred_option = Option::kB;
      } else {
        item.query.a = preferred;
        item.query.b = perturbed;
        item.query.index_a = preferred_index;
        item.preferred_option = Option::kA;
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

SessionState begin_validation(SessionState state) {
  require_phase(state, SessionPhase::kFinished, "begin_validation");
  state.validation =
      validation_round(state, state.final_profile(), state.config.validation_targets);
  state.validation_cursor = 0;
  state.phase = SessionPhase::kValidating;
  return state;
}

const ValidationItem& current_validation_item(const SessionState& state) {
  require_phase(state, SessionPhase::kValidating, "current_validation_item");
  if (validation_complete(state)) throw StateError("validation round is complete");
  return state.validation[state.validation_cursor];
}

SessionState submit_validation_choice(SessionState state, Option chosen) {
  require_phase(state, SessionPhase::kValidating, "submit_validation_choice");
  if (validation_complete(state)) throw StateError("validation round is complete");
  auto& item = state.validation[state.validation_cursor++];
  item.kept = chosen == item.preferred_option;
  return state;
}

bool validation_complete(const SessionState& state) {
  return state.validation_cursor >= state.validation.size();
}

std::map<FeatureKind, KeepLose> summarize_validation(std::span<const ValidationItem> items) {
  std::map<FeatureKind, KeepLose> out;
  for (const auto& item : items) {
    if (!item.kept) continue;
    auto& counts = out[item.target];
    if (*item.kept) {
      ++counts.keep;
    } else {
      ++counts.lose;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const SessionConfig& c) {
  j = nlohmann::json::object();
  j["batch_size"] = c.batch_size;
  j["comparisons"] = c.comparisons;
  j["exposure_s"] = c.exposure_s;
  j["washout_s"] = c.washout_s;
  j["seed"] = c.seed;
  j["strategy"] = to_string(c.strategy);
  auto targets = nlohmann::json::array();
  for (auto t : c.validation_targets) targets.push_back(to_string(t));
  j["validation_targets"] = targets;
  j["ranges"] = c.ranges;
  j["perturbation"] = {{"torque_nm", c.perturbation.torque_nm},
                       {"time_pct_gc", c.perturbation.time_pct_gc}};
  j["sampler"] = c.sampler;
  j["resolution"] = c.resolution;
  if (!c.batch.empty()) j["batch"] = c.batch;
}

void from_json(const nlohmann::json& j, SessionConfig& c) {
  if (!j.is_object()) throw ValidationError("session config must be a JSON object", {"config"});
  static const std::set<std::string> kKnown = {
      "batch_size", "comparisons", "exposure_s", "washout_s",  "seed",  "strategy",
      "validation_targets", "ranges", "perturbation", "sampler", "resolution", "batch"};
  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.contains(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown session config fields:";
    for (const auto& u : unknown) msg += " " + u;
    throw ValidationError(msg, unknown);
  }

  c = SessionConfig{};
  std::string field;
  try {
    field = "batch_size";
    c.batch_size = j.value(field, c.batch_size);
    field = "comparisons";
    c.comparisons = j.value(field, c.comparisons);
    field = "exposure_s";
    c.exposure_s = j.value(field, c.exposure_s);
    field = "washout_s";
    c.washout_s = j.value(field, c.washout_s);
    field = "seed";
    c.seed = j.value(field, c.seed);
    field = "strategy";
    if (j.contains(field)) c.strategy = strategy_from_string(j[field].get<std::string>());
    field = "validation_targets";
    if (j.contains(field)) {
      c.validation_targets.clear();
      for (const auto& t : j[field]) {
        c.validation_targets.push_back(feature_kind_from_string(t.get<std::string>()));
      }
    }
    field = "ranges";
    if (j.contains(field)) c.ranges = j[field].get<FeatureRanges>();
    field = "perturbation";
    if (j.contains(field)) {
      c.perturbation.torque_nm = j[field].value("torque_nm", c.perturbation.torque_nm);
      c.perturbation.time_pct_gc = j[field].value("time_pct_gc", c.perturbation.time_pct_gc);
    }
    field = "sampler";
    if (j.contains(field)) c.sampler = j[field].get<MhConfig>();
    field = "resolution";
    c.resolution = j.value(field, c.resolution);
    field = "batch";
    if (j.contains(field)) c.batch = j[field].get<std::vector<TorqueProfileFeatures>>();
  } catch (const ValidationError& e) {
    std::vector<std::string> fields = e.fields();
    fields.insert(fields.begin(), field);
    throw ValidationError(field + ": " + e.what(), fields);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(field + ": " + e.what(), {field});
  }
  c.validate();
}

void to_json(nlohmann::json& j, const ValidationItem& v) {
  j = nlohmann::json{{"query", v.query},
                     {"target", to_string(v.target)},
                     {"sign", v.sign},
                     {"preferred_option", to_string(v.preferred_option)}};
  j["kept"] = v.kept ? nlohmann::json(*v.kept) : nlohmann::json(nullptr);
}

}  // namespace prefgait

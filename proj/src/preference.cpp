#include "prefgait/preference.hpp"

#include <algorithm>
#include <cmath>

#include "prefgait/errors.hpp"
#include "prefgait/rng.hpp"

namespace prefgait {

double dot(const FeatureArray& a, const FeatureArray& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += a[i] * b[i];
  return s;
}

double norm(const FeatureArray& a) { return std::sqrt(dot(a, a)); }

WeightVector normalized(const WeightVector& w) {
  const double n = norm(w);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ValidationError("cannot normalize a zero or non-finite weight vector", {"w"});
  }
  WeightVector out{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) out[i] = w[i] / n;
  return out;
}

std::string to_string(Option o) { return o == Option::kA ? "A" : "B"; }

Option option_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Option::kA;
  if (s == "B" || s == "b") return Option::kB;
  throw ValidationError("choice must be 'A' or 'B', got '" + s + "'", {"chosen"});
}

std::string to_string(Responder r) { return r == Responder::kHuman ? "human" : "oracle"; }

Responder responder_from_string(const std::string& s) {
  if (s == "human") return Responder::kHuman;
  if (s == "oracle") return Responder::kOracle;
  throw ValidationError("unknown responder '" + s + "'", {"responder"});
}

double reward(const WeightVector& w, const TorqueProfileFeatures& features,
              const FeatureRanges& ranges) {
  return dot(w, normalize_features(features, ranges));
}

double choice_probability(double reward_chosen, double reward_other, double beta) {
  // Evaluate the smaller probability as e/(1+e) with e = exp(-beta*|gap|) <= 1,
  // and the larger one as its complement.
  if (reward_chosen == reward_other) return 0.5;
  const double gap = beta * (reward_chosen - reward_other);
  const double e = std::exp(-std::abs(gap));
  const double low = e / (1.0 + e);
  return gap >= 0.0 ? 1.0 - low : low;
}

double choice_likelihood(const WeightVector& w, const Query& query, Option chosen,
                         double beta, const FeatureRanges& ranges) {
  if (!(beta > 0.0)) throw ValidationError("rationality beta must be positive", {"beta"});
  const double ra = reward(w, query.a, ranges);
  const double rb = reward(w, query.b, ranges);
  return chosen == Option::kA ? choice_probability(ra, rb, beta)
                              : choice_probability(rb, ra, beta);
}

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

void MhConfig::validate() const {
  std::vector<std::string> bad;
  if (!(proposal_step > 0.0) || !std::isfinite(proposal_step)) bad.emplace_back("proposal_step");
  if (num_samples < 2) bad.emplace_back("num_samples");
  if (thin < 1) bad.emplace_back("thin");
  if (!(beta > 0.0) || !std::isfinite(beta)) bad.emplace_back("beta");
  if (!bad.empty()) {
    std::string msg = "invalid sampler configuration:";
    for (const auto& f : bad) msg += " " + f;
    throw ValidationError(msg, bad);
  }
}

namespace {

void random_unit(std::vector<double>& out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : out) {
      x = normal(rng);
      n2 += x * x;
    }
  } while (n2 < 1e-24);
  const double n = std::sqrt(n2);
  for (auto& x : out) x /= n;
}

double log_likelihood(const std::vector<double>& w,
                      std::span<const std::vector<double>> differences, double beta) {
  double total = 0.0;
  for (const auto& d : differences) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * d[i];
    total += log_sigmoid(beta * s);
  }
  return total;
}

}  // namespace

Belief prior_belief(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("belief needs at least 2 samples", {"num_samples"});
  Rng rng(derive_seed(seed, streams::kPrior));
  Belief b;
  b.seed = seed;
  b.iteration = 0;
  b.samples.resize(n);
  std::vector<double> tmp(kNumFeatures);
  for (auto& s : b.samples) {
    random_unit(tmp, rng);
    std::copy(tmp.begin(), tmp.end(), s.begin());
  }
  return b;
}

std::vector<std::vector<double>> sample_sphere_posterior(
    std::span<const std::vector<double>> differences, std::size_t dim,
    const MhConfig& config, std::uint64_t seed) {
  config.validate();
  if (dim < 2) throw ValidationError("sphere dimension must be >= 2", {"dim"});
  for (const auto& d : differences) {
    if (d.size() != dim) {
      throw ValidationError("observation dimension mismatch", {"differences"});
    }
  }

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> current(dim);
  random_unit(current, rng);
  double current_ll = log_likelihood(current, differences, config.beta);
  std::vector<double> proposal(dim);

  auto step = [&] {
    double n2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      proposal[i] = current[i] + config.proposal_step * normal(rng);
      n2 += proposal[i] * proposal[i];
    }
    const double n = std::sqrt(n2);
    if (!(n > 0.0)) return;
    for (auto& x : proposal) x /= n;
    const double proposal_ll = log_likelihood(proposal, differences, config.beta);
    // The perturb-and-renormalize kernel depends only on the angle between
    // states, so it is symmetric and the prior is uniform: accept with the
    // likelihood ratio.
    const double log_ratio = proposal_ll - current_ll;
    if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) {
      current.swap(proposal);
      current_ll = proposal_ll;
    }
  };

  for (std::size_t i = 0; i < config.burn_in; ++i) step();
  std::vector<std::vector<double>> samples;
  samples.reserve(config.num_samples);
  while (samples.size() < config.num_samples) {
    for (std::size_t k = 0; k < config.thin; ++k) step();
    samples.push_back(current);
  }
  return samples;
}

Belief mh_update(const Belief& belief, std::span<const Choice> choices,
                 const MhConfig& config, const FeatureRanges& ranges) {
  config.validate();
  if (choices.empty()) return prior_belief(config.num_samples, belief.seed);

  std::vector<std::vector<double>> differences;
  differences.reserve(choices.size());
  for (const auto& c : choices) {
    const Option other = c.selected == Option::kA ? Option::kB : Option::kA;
    const auto chosen_phi = normalize_features(c.query.option(c.selected), ranges);
    const auto other_phi = normalize_features(c.query.option(other), ranges);
    std::vector<double> d(kNumFeatures);
    for (std::size_t i = 0; i < kNumFeatures; ++i) d[i] = chosen_phi[i] - other_phi[i];
    differences.push_back(std::move(d));
  }

  const auto raw = sample_sphere_posterior(
      differences, kNumFeatures, config,
      derive_seed(belief.seed, streams::kChain, choices.size()));

  Belief out;
  out.seed = belief.seed;
  out.iteration = choices.size();
  out.samples.resize(raw.size());
  for (std::size_t s = 0; s < raw.size(); ++s) {
    std::copy(raw[s].begin(), raw[s].end(), out.samples[s].begin());
  }
  return out;
}

PosteriorSummary posterior_summary(const Belief& belief,
                                   std::span<const TorqueProfileFeatures> batch,
                                   const FeatureRanges& ranges) {
  if (belief.samples.empty()) throw ValidationError("belief has no samples", {"samples"});
  PosteriorSummary out;
  const double n = static_cast<double>(belief.samples.size());
  WeightVector mean{};
  for (const auto& w : belief.samples) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) mean[i] += w[i];
  }
  for (auto& m : mean) m /= n;
  for (const auto& w : belief.samples) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      out.stddev[i] += (w[i] - mean[i]) * (w[i] - mean[i]);
    }
  }
  for (auto& s : out.stddev) s = std::sqrt(s / n);

  out.mean_norm = norm(mean);
  out.degenerate = out.mean_norm < kDegenerateMeanNorm;
  out.mean = out.mean_norm > 0.0 ? normalized(mean) : mean;

  if (!batch.empty()) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto phi = normalize_features(batch[k], ranges);
      double total = 0.0;
      for (const auto& w : belief.samples) total += dot(w, phi);
      const double avg = total / n;
      if (avg > best) {
        best = avg;
        out.best_index = k;
      }
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const Belief& b) {
  j = nlohmann::json{{"seed", b.seed}, {"iteration", b.iteration}, {"samples", b.samples}};
}

void from_json(const nlohmann::json& j, Belief& b) {
  b.seed = j.at("seed").get<std::uint64_t>();
  b.iteration = j.at("iteration").get<std::size_t>();
  b.samples = j.at("samples").get<std::vector<WeightVector>>();
}

void to_json(nlohmann::json& j, const Query& q) {
  j = nlohmann::json{{"a", q.a}, {"b", q.b}, {"swapped", q.swapped}};
  j["index_a"] = q.index_a == kNoIndex ? nlohmann::json(nullptr) : nlohmann::json(q.index_a);
  j["index_b"] = q.index_b == kNoIndex ? nlohmann::json(nullptr) : nlohmann::json(q.index_b);
}

void from_json(const nlohmann::json& j, Query& q) {
  q.a = j.at("a").get<TorqueProfileFeatures>();
  q.b = j.at("b").get<TorqueProfileFeatures>();
  q.swapped = j.value("swapped", false);
  const auto idx = [&](const char* key) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? kNoIndex : it->get<std::size_t>();
  };
  q.index_a = idx("index_a");
  q.index_b = idx("index_b");
}

void to_json(nlohmann::json& j, const MhConfig& c) {
  j = nlohmann::json{{"proposal_step", c.proposal_step},
                     {"burn_in", c.burn_in},
                     {"num_samples", c.num_samples},
                     {"thin", c.thin},
                     {"beta", c.beta}};
}

void from_json(const nlohmann::json& j, MhConfig& c) {
  c = MhConfig{};
  c.proposal_step = j.value("proposal_step", c.proposal_step);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.num_samples = j.value("num_samples", c.num_samples);
  c.thin = j.value("thin", c.thin);
  c.beta = j.value("beta", c.beta);
  c.validate();
}

void to_json(nlohmann::json& j, const PosteriorSummary& s) {
  j = nlohmann::json{{"mean", s.mean},
                     {"mean_norm", s.mean_norm},
                     {"stddev", s.stddev},
                     {"degenerate", s.degenerate}};
  j["best_index"] = s.best_index ? nlohmann::json(*s.best_index) : nlohmann::json(nullptr);
}

}  // namespace prefgait

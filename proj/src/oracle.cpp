#include "prefgait/oracle.hpp"

#include <cmath>

#include "prefgait/errors.hpp"

namespace prefgait {

WeightVector resolve_oracle_weights(const OracleSpec& spec) {
  if (spec.has_weights) return normalized(spec.true_weights);
  const Belief draw = prior_belief(2, derive_seed(spec.seed, streams::kOracle, 1));
  return draw.samples.front();
}

SimulatedUser::SimulatedUser(const OracleSpec& spec, FeatureRanges ranges)
    : weights_(resolve_oracle_weights(spec)),
      beta_(spec.beta),
      dropout_(spec.feature_dropout),
      ranges_(std::move(ranges)),
      rng_(derive_seed(spec.seed, streams::kOracle)) {
  if (std::isnan(beta_) || beta_ < 0.0) {
    throw ValidationError("oracle beta must be >= 0", {"beta"});
  }
  if (!(dropout_ >= 0.0 && dropout_ < 1.0)) {
    throw ValidationError("feature_dropout must lie in [0, 1)", {"feature_dropout"});
  }
}

double SimulatedUser::probability_a(const Query& query) const {
  const double ra = reward(weights_, query.a, ranges_);
  const double rb = reward(weights_, query.b, ranges_);
  if (std::isinf(beta_)) return ra >= rb ? 1.0 : 0.0;
  return choice_probability(ra, rb, beta_);
}

Option SimulatedUser::respond(const Query& query) {
  WeightVector w = weights_;
  if (dropout_ > 0.0) {
    std::bernoulli_distribution drop(dropout_);
    for (auto& x : w) {
      if (drop(rng_)) x = 0.0;
    }
  }
  const double ra = reward(w, query.a, ranges_);
  const double rb = reward(w, query.b, ranges_);
  if (std::isinf(beta_)) return ra >= rb ? Option::kA : Option::kB;
  const double p_a = choice_probability(ra, rb, beta_);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng_) < p_a ? Option::kA : Option::kB;
}

void to_json(nlohmann::json& j, const OracleSpec& spec) {
  j = nlohmann::json::object();
  if (spec.has_weights) j["w"] = spec.true_weights;
  if (std::isinf(spec.beta)) {
    j["beta"] = "inf";
  } else {
    j["beta"] = spec.beta;
  }
  j["seed"] = spec.seed;
  if (spec.feature_dropout > 0.0) j["feature_dropout"] = spec.feature_dropout;
}

void from_json(const nlohmann::json& j, OracleSpec& spec) {
  spec = OracleSpec{};
  if (const auto it = j.find("w"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != kNumFeatures) {
      throw ValidationError("oracle w must be an array of 6 numbers", {"w"});
    }
    spec.true_weights = it->get<WeightVector>();
    spec.has_weights = true;
    if (!(norm(spec.true_weights) > 0.0)) {
      throw ValidationError("oracle w must be non-zero", {"w"});
    }
  } else {
    spec.has_weights = false;
  }
  if (const auto it = j.find("beta"); it != j.end()) {
    if (it->is_string()) {
      const auto s = it->get<std::string>();
      if (s != "inf" && s != "infinity") {
        throw ValidationError("oracle beta must be a number or \"inf\"", {"beta"});
      }
      spec.beta = std::numeric_limits<double>::infinity();
    } else if (it->is_number()) {
      spec.beta = it->get<double>();
    } else {
      throw ValidationError("oracle beta must be a number or \"inf\"", {"beta"});
    }
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.feature_dropout = j.value("feature_dropout", 0.0);
  if (std::isnan(spec.beta) || spec.beta < 0.0) {
    throw ValidationError("oracle beta must be >= 0", {"beta"});
  }
}

}  // namespace prefgait

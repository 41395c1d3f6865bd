#pragma once

#include <cstdint>
#include <limits>

#include <json.hpp>

#include "prefgait/preference.hpp"
#include "prefgait/rng.hpp"

namespace prefgait {

/// Serializable description of a simulated responder.
struct OracleSpec {
  WeightVector true_weights{};
  /// Rationality; +infinity answers deterministically (ties pick A).
  double beta = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  /// Probability that each feature is ignored on a given response. Zero
  /// reproduces the learner's response model exactly.
  double feature_dropout = 0.0;
  /// When false the weights are drawn uniformly on the sphere from `seed`.
  bool has_weights = true;
};

/// Simulated user answering queries with the softmax choice model.
class SimulatedUser {
 public:
  SimulatedUser(const OracleSpec& spec, FeatureRanges ranges = FeatureRanges::defaults());

  Option respond(const Query& query);
  /// Probability of answering A under the noiseless model.
  double probability_a(const Query& query) const;

  const WeightVector& weights() const { return weights_; }
  double beta() const { return beta_; }

 private:
  WeightVector weights_;
  double beta_;
  double dropout_;
  FeatureRanges ranges_;
  Rng rng_;
};

/// Ground-truth weights for an oracle spec (drawn when `has_weights` is false).
WeightVector resolve_oracle_weights(const OracleSpec& spec);

void to_json(nlohmann::json& j, const OracleSpec& spec);
/// `beta` accepts a number or the string "inf"; a missing `w` draws random
/// weights from the seed.
void from_json(const nlohmann::json& j, OracleSpec& spec);

}  // namespace prefgait

#pragma once

// Linear reward over normalized profile features, softmax pairwise choice
// model, and a Metropolis-Hastings belief over unit-norm reward weights.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefgait/profile.hpp"

namespace prefgait {

using WeightVector = FeatureArray;

WeightVector normalized(const WeightVector& w);
double dot(const FeatureArray& a, const FeatureArray& b);
double norm(const FeatureArray& a);

enum class Option { kA, kB };
enum class Responder { kHuman, kOracle };

std::string to_string(Option o);
Option option_from_string(const std::string& s);
std::string to_string(Responder r);
Responder responder_from_string(const std::string& s);

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

struct Query {
  TorqueProfileFeatures a;
  TorqueProfileFeatures b;
  /// Batch indices of the options; kNoIndex for profiles outside the batch.
  std::size_t index_a = kNoIndex;
  std::size_t index_b = kNoIndex;
  /// Presentation order was randomized and the natural order swapped.
  bool swapped = false;

  const TorqueProfileFeatures& option(Option o) const { return o == Option::kA ? a : b; }
  std::size_t index(Option o) const { return o == Option::kA ? index_a : index_b; }
  bool operator==(const Query&) const = default;
};

struct Choice {
  Query query;
  Option selected = Option::kA;
  std::string timestamp;
  Responder responder = Responder::kHuman;
};

double reward(const WeightVector& w, const TorqueProfileFeatures& features,
              const FeatureRanges& ranges);

/// Softmax probability of picking the option with `reward_chosen` over the one
/// with `reward_other`. The two complementary probabilities sum to exactly 1.
double choice_probability(double reward_chosen, double reward_other, double beta);

double choice_likelihood(const WeightVector& w, const Query& query, Option chosen,
                         double beta, const FeatureRanges& ranges);

/// log sigmoid(x), stable for large |x|.
double log_sigmoid(double x);

struct MhConfig {
  double proposal_step = 0.3;
  std::size_t burn_in = 200;
  std::size_t num_samples = 100;
  /// Keep every `thin`-th state after burn-in.
  std::size_t thin = 10;
  double beta = 1.0;

  void validate() const;
  bool operator==(const MhConfig&) const = default;
};

struct Belief {
  std::vector<WeightVector> samples;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;

  bool operator==(const Belief&) const = default;
};

/// `n` i.i.d. samples, uniform on the unit sphere.
Belief prior_belief(std::size_t n, std::uint64_t seed);

/// Fresh chain over all choices, targeting uniform-prior x product of choice
/// likelihoods. Returns prior samples when `choices` is empty.
Belief mh_update(const Belief& belief, std::span<const Choice> choices,
                 const MhConfig& config, const FeatureRanges& ranges);

/// Dimension-generic sampler behind mh_update. Each observation is the
/// feature difference phi(chosen) - phi(rejected); the likelihood of one
/// observation is sigmoid(beta * w.d). Samples lie on the unit sphere in
/// R^dim. Deterministic in `seed`.
std::vector<std::vector<double>> sample_sphere_posterior(
    std::span<const std::vector<double>> differences, std::size_t dim,
    const MhConfig& config, std::uint64_t seed);

struct PosteriorSummary {
  WeightVector mean{};       // renormalized
  double mean_norm = 0.0;    // before renormalization
  WeightVector stddev{};
  bool degenerate = false;   // mean_norm < 0.1
  std::optional<std::size_t> best_index;
};

inline constexpr double kDegenerateMeanNorm = 0.1;

/// When `batch` is non-empty, `best_index` is the profile maximizing the mean
/// reward across samples, lowest index on ties.
PosteriorSummary posterior_summary(const Belief& belief,
                                   std::span<const TorqueProfileFeatures> batch = {},
                                   const FeatureRanges& ranges = FeatureRanges::defaults());

void to_json(nlohmann::json& j, const Belief& b);
void from_json(const nlohmann::json& j, Belief& b);
void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);
void to_json(nlohmann::json& j, const MhConfig& c);
void from_json(const nlohmann::json& j, MhConfig& c);
void to_json(nlohmann::json& j, const PosteriorSummary& s);

}  // namespace prefgait

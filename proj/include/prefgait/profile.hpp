#pragma once

// Six-feature hip torque profile: parameters, interpolation over the gait
// cycle, random batch generation and single-feature perturbation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace prefgait {

inline constexpr std::size_t kNumFeatures = 6;

/// Feature order matches the parameter vector (f1..f6).
enum class FeatureKind : std::uint8_t {
  kPeakTorqueExt = 0,  // f1 [Nm]
  kPeakTimeExt = 1,    // f2 [%GC]
  kRiseTimeExt = 2,    // f3 [%GC]
  kPeakTorqueFlex = 3, // f4 [Nm]
  kPeakTimeFlex = 4,   // f5 [%GC]
  kRiseTimeFlex = 5,   // f6 [%GC]
};

inline constexpr std::array<FeatureKind, kNumFeatures> kAllFeatureKinds = {
    FeatureKind::kPeakTorqueExt,  FeatureKind::kPeakTimeExt,
    FeatureKind::kRiseTimeExt,    FeatureKind::kPeakTorqueFlex,
    FeatureKind::kPeakTimeFlex,   FeatureKind::kRiseTimeFlex};

/// Wire names: peak_torque_ext, peak_time_ext, ...
std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);
bool is_peak_torque(FeatureKind kind) noexcept;
bool is_rise_time(FeatureKind kind) noexcept;

using FeatureArray = std::array<double, kNumFeatures>;

/// Actuator peak torque limit [Nm].
inline constexpr double kActuatorLimitNm = 32.0;
inline constexpr int kDefaultResolution = 1000;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool operator==(const Interval&) const = default;
};

struct FeatureRanges {
  std::array<Interval, kNumFeatures> bounds{};
  double step = 0.1;

  /// The nominal sampling ranges used for every experiment by default.
  static FeatureRanges defaults();

  const Interval& operator[](FeatureKind k) const {
    return bounds[static_cast<std::size_t>(k)];
  }
  /// Number of admissible discretized values for feature `i`.
  std::size_t levels(std::size_t i) const;
  /// Throws ValidationError unless lower < upper everywhere and step > 0.
  void validate() const;

  bool operator==(const FeatureRanges&) const = default;
};

struct TorqueProfileFeatures {
  FeatureArray values{};
  /// Perturbed profiles may leave the nominal ranges.
  bool perturbed = false;

  double operator[](FeatureKind k) const {
    return values[static_cast<std::size_t>(k)];
  }
  double& operator[](FeatureKind k) {
    return values[static_cast<std::size_t>(k)];
  }

  double ext_peak_torque() const { return values[0]; }
  double ext_peak_time() const { return values[1]; }
  double ext_rise_time() const { return values[2]; }
  double flex_peak_torque() const { return values[3]; }
  double flex_peak_time() const { return values[4]; }
  double flex_rise_time() const { return values[5]; }

  bool operator==(const TorqueProfileFeatures&) const = default;
};

/// Profile used for exoskeleton familiarization before a session.
TorqueProfileFeatures familiarization_profile();

/// Shape constraints every profile must satisfy regardless of ranges:
/// finite values, peak torques within [0, actuator limit], rise times in
/// (0, 50] %GC. Throws ValidationError naming each offending field.
void validate_shape(const TorqueProfileFeatures& features);

/// validate_shape plus, for non-perturbed profiles, range membership.
void validate(const TorqueProfileFeatures& features,
              const FeatureRanges& ranges);

/// Torque [Nm] at gait phase `phase` (any real; taken modulo 1).
/// Flexion positive, extension negative.
double torque_at(const TorqueProfileFeatures& features, double phase);

struct TorqueCurve {
  std::vector<double> phase;
  std::vector<double> torque_nm;

  std::size_t size() const noexcept { return phase.size(); }
  double max_abs() const;
};

/// Samples the torque profile at phases i/resolution, i in [0, resolution).
/// Throws ValidationError for invalid features or resolution < 100.
TorqueCurve interpolate(const TorqueProfileFeatures& features,
                        int resolution = kDefaultResolution);

/// `count` pairwise-distinct profiles with features drawn uniformly from
/// their discretized ranges. Deterministic in `seed`.
std::vector<TorqueProfileFeatures> sample_batch(const FeatureRanges& ranges,
                                                std::size_t count,
                                                std::uint64_t seed);

struct PerturbationMagnitudes {
  double torque_nm = 2.0;
  double time_pct_gc = 7.0;
  bool operator==(const PerturbationMagnitudes&) const = default;
};

/// Copy of `features` with one feature shifted by sign * magnitude.
/// Peak torques clamp to [0, 32] Nm; rise times clamp below at one
/// interpolation step (100 / resolution %GC).
TorqueProfileFeatures perturb(const TorqueProfileFeatures& features,
                              FeatureKind target, int sign,
                              const PerturbationMagnitudes& magnitudes = {},
                              int resolution = kDefaultResolution);

/// Min-max normalization; values outside the ranges are not clamped.
FeatureArray normalize_features(const TorqueProfileFeatures& features,
                                const FeatureRanges& ranges);

void to_json(nlohmann::json& j, const TorqueProfileFeatures& f);
void from_json(const nlohmann::json& j, TorqueProfileFeatures& f);
void to_json(nlohmann::json& j, const FeatureRanges& r);
void from_json(const nlohmann::json& j, FeatureRanges& r);

/// CSV with header `phase,torque_nm`.
void write_curve_csv(std::ostream& out, const TorqueCurve& curve);

}  // namespace prefgait

#include "prefgait/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "prefgait/errors.hpp"
#include "prefgait/rng.hpp"

namespace prefgait {

namespace {

constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "peak_torque_ext", "peak_time_ext",  "rise_time_ext",
    "peak_torque_flex", "peak_time_flex", "rise_time_flex"};

constexpr std::array<const char*, kNumFeatures> kShortNames = {"f1", "f2", "f3",
                                                               "f4", "f5", "f6"};

// Cubic smoothstep on [0, 1].
double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

// Zero-plateau symmetric trapezoid centred at `center` (cycle fraction) with
// half-width `half_width`, evaluated with wrap-around.
double bump(double phase, double center, double half_width) {
  double d = phase - center;
  d -= std::floor(d + 0.5);  // signed circular distance in [-0.5, 0.5)
  const double dist = std::abs(d);
  if (dist >= half_width) return 0.0;
  return smoothstep(1.0 - dist / half_width);
}

double round_to_step(double value, double step) {
  // Snap to the decimal grid so 5.0 + 3 * 0.1 prints as 5.3.
  const double scaled = std::round(value / step);
  return std::round(scaled * step * 1e9) / 1e9;
}

}  // namespace

std::string to_string(FeatureKind kind) {
  return kFeatureNames[static_cast<std::size_t>(kind)];
}

FeatureKind feature_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (name == kFeatureNames[i] || name == kShortNames[i]) {
      return static_cast<FeatureKind>(i);
    }
  }
  throw ValidationError("unknown feature kind '" + name + "'", {name});
}

bool is_peak_torque(FeatureKind kind) noexcept {
  return kind == FeatureKind::kPeakTorqueExt ||
         kind == FeatureKind::kPeakTorqueFlex;
}

bool is_rise_time(FeatureKind kind) noexcept {
  return kind == FeatureKind::kRiseTimeExt ||
         kind == FeatureKind::kRiseTimeFlex;
}

FeatureRanges FeatureRanges::defaults() {
  FeatureRanges r;
  r.bounds = {Interval{5.0, 8.0},   Interval{10.0, 20.0}, Interval{10.0, 20.0},
              Interval{5.0, 8.0},   Interval{55.0, 65.0}, Interval{10.0, 20.0}};
  r.step = 0.1;
  return r;
}

std::size_t FeatureRanges::levels(std::size_t i) const {
  const auto& b = bounds.at(i);
  return static_cast<std::size_t>(std::floor((b.upper - b.lower) / step + 1e-9)) +
         1;
}

void FeatureRanges::validate() const {
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto& b = bounds[i];
    if (!(std::isfinite(b.lower) && std::isfinite(b.upper) && b.lower < b.upper)) {
      bad.emplace_back(kShortNames[i]);
    }
  }
  if (!(step > 0.0) || !std::isfinite(step)) bad.emplace_back("step");
  if (!bad.empty()) {
    std::string msg = "invalid feature ranges:";
    for (const auto& f : bad) msg += " " + f;
    throw ValidationError(msg, bad);
  }
}

TorqueProfileFeatures familiarization_profile() {
  return TorqueProfileFeatures{{7.0, 10.0, 15.0, 7.0, 60.0, 15.0}, false};
}

void validate_shape(const TorqueProfileFeatures& features) {
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double v = features.values[i];
    const auto kind = static_cast<FeatureKind>(i);
    bool ok = std::isfinite(v);
    if (ok && is_peak_torque(kind)) ok = v >= 0.0 && v <= kActuatorLimitNm;
    if (ok && is_rise_time(kind)) ok = v > 0.0 && v <= 50.0;
    if (!ok) bad.emplace_back(kShortNames[i]);
  }
  if (!bad.empty()) {
    std::string msg = "invalid torque profile features:";
    for (const auto& f : bad) msg += " " + f;
    throw ValidationError(msg, bad);
  }
}

void validate(const TorqueProfileFeatures& features,
              const FeatureRanges& ranges) {
  validate_shape(features);
  if (features.perturbed) return;
  std::vector<std::string> bad;
  constexpr double kTol = 1e-9;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto& b = ranges.bounds[i];
    const double v = features.values[i];
    if (v < b.lower - kTol || v > b.upper + kTol) bad.emplace_back(kShortNames[i]);
  }
  if (!bad.empty()) {
    std::string msg = "features outside nominal ranges:";
    for (const auto& f : bad) msg += " " + f;
    throw ValidationError(msg, bad);
  }
}

double torque_at(const TorqueProfileFeatures& f, double phase) {
  const double ext = f.ext_peak_torque() *
                     bump(phase, f.ext_peak_time() / 100.0, f.ext_rise_time() / 100.0);
  const double flex =
      f.flex_peak_torque() *
      bump(phase, f.flex_peak_time() / 100.0, f.flex_rise_time() / 100.0);
  return flex - ext;
}

double TorqueCurve::max_abs() const {
  double m = 0.0;
  for (double t : torque_nm) m = std::max(m, std::abs(t));
  return m;
}

TorqueCurve interpolate(const TorqueProfileFeatures& features, int resolution) {
  if (resolution < 100) {
    throw ValidationError("interpolation resolution must be >= 100",
                          {"resolution"});
  }
  validate_shape(features);
  TorqueCurve curve;
  const auto n = static_cast<std::size_t>(resolution);
  curve.phase.resize(n);
  curve.torque_nm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = static_cast<double>(i) / resolution;
    curve.phase[i] = phase;
    curve.torque_nm[i] = torque_at(features, phase);
  }
  return curve;
}

std::vector<TorqueProfileFeatures> sample_batch(const FeatureRanges& ranges,
                                                std::size_t count,
                                                std::uint64_t seed) {
  ranges.validate();
  if (count < 1) throw ValidationError("batch count must be positive", {"count"});

  std::array<std::size_t, kNumFeatures> levels{};
  double distinct = 1.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    levels[i] = ranges.levels(i);
    distinct *= static_cast<double>(levels[i]);
  }
  if (static_cast<double>(count) > distinct) {
    throw ValidationError("batch count " + std::to_string(count) +
                              " exceeds the number of distinct discretized "
                              "profiles (" +
                              std::to_string(static_cast<long long>(distinct)) + ")",
                          {"count"});
  }

  Rng rng(derive_seed(seed, streams::kBatch));
  std::set<std::array<std::size_t, kNumFeatures>> seen;
  std::vector<TorqueProfileFeatures> batch;
  batch.reserve(count);
  while (batch.size() < count) {
    std::array<std::size_t, kNumFeatures> idx{};
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, levels[i] - 1);
      idx[i] = pick(rng);
    }
    if (!seen.insert(idx).second) continue;
    TorqueProfileFeatures f;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      f.values[i] = round_to_step(
          ranges.bounds[i].lower + static_cast<double>(idx[i]) * ranges.step,
          ranges.step);
    }
    batch.push_back(f);
  }
  return batch;
}

TorqueProfileFeatures perturb(const TorqueProfileFeatures& features,
                              FeatureKind target, int sign,
                              const PerturbationMagnitudes& magnitudes,
                              int resolution) {
  validate_shape(features);
  if (sign != 1 && sign != -1) {
    throw ValidationError("perturbation sign must be +1 or -1", {"sign"});
  }
  TorqueProfileFeatures out = features;
  out.perturbed = true;
  double& v = out[target];
  if (is_peak_torque(target)) {
    v = std::clamp(v + sign * magnitudes.torque_nm, 0.0, kActuatorLimitNm);
  } else {
    v += sign * magnitudes.time_pct_gc;
    if (is_rise_time(target)) {
      const double min_rise = 100.0 / std::max(resolution, 1);
      v = std::clamp(v, min_rise, 50.0);
    }
  }
  return out;
}

FeatureArray normalize_features(const TorqueProfileFeatures& features,
                                const FeatureRanges& ranges) {
  FeatureArray phi{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto& b = ranges.bounds[i];
    phi[i] = (features.values[i] - b.lower) / (b.upper - b.lower);
  }
  return phi;
}

void to_json(nlohmann::json& j, const TorqueProfileFeatures& f) {
  j = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumFeatures; ++i) j[kShortNames[i]] = f.values[i];
  j["perturbed"] = f.perturbed;
}

void from_json(const nlohmann::json& j, TorqueProfileFeatures& f) {
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const auto it = j.find(kShortNames[i]);
    if (it == j.end() || !it->is_number()) {
      missing.emplace_back(kShortNames[i]);
      continue;
    }
    f.values[i] = it->get<double>();
  }
  if (!missing.empty()) {
    std::string msg = "profile JSON missing numeric fields:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg, missing);
  }
  f.perturbed = j.value("perturbed", false);
}

void to_json(nlohmann::json& j, const FeatureRanges& r) {
  j = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    j[kShortNames[i]] = {r.bounds[i].lower, r.bounds[i].upper};
  }
  j["step"] = r.step;
}

void from_json(const nlohmann::json& j, FeatureRanges& r) {
  r = FeatureRanges::defaults();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (const auto it = j.find(kShortNames[i]); it != j.end()) {
      if (!it->is_array() || it->size() != 2) {
        throw ValidationError(std::string("range for ") + kShortNames[i] +
                                  " must be [lower, upper]",
                              {kShortNames[i]});
      }
      r.bounds[i] = Interval{(*it)[0].get<double>(), (*it)[1].get<double>()};
    }
  }
  r.step = j.value("step", r.step);
  r.validate();
}

void write_curve_csv(std::ostream& out, const TorqueCurve& curve) {
  out << "phase,torque_nm\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9g\n", curve.phase[i], curve.torque_nm[i]);
    out << buf;
  }
}

}  // namespace prefgait

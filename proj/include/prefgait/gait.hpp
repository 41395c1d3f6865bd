#pragma once

// Gait time-series ingestion, event detection, phase estimation and
// cycle segmentation.

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prefgait {

enum class Side { kLeft, kRight };

std::string to_string(Side side);

struct GaitSample {
  double time_s = 0.0;
  double hip_l_deg = 0.0;
  double hip_r_deg = 0.0;
  double knee_l_deg = 0.0;
  double knee_r_deg = 0.0;
  bool contact_l = false;
  bool contact_r = false;
  double tau_l_nm = 0.0;
  double tau_r_nm = 0.0;
  double omega_l_rads = 0.0;
  double omega_r_rads = 0.0;
};

/// Uniformly sampled lower-limb recording. Optional channels are flagged by
/// `has_*`; absent values are zero in `samples`.
struct GaitTrace {
  std::vector<GaitSample> samples;
  bool has_contact = false;
  bool has_torque = false;
  bool has_omega = false;

  std::size_t size() const noexcept { return samples.size(); }
  /// Mean sampling interval [s]; 0 for fewer than two samples.
  double sample_period() const;
  double sample_rate_hz() const;

  double hip(std::size_t i, Side s) const;
  double knee(std::size_t i, Side s) const;
  bool contact(std::size_t i, Side s) const;
  double torque(std::size_t i, Side s) const;

  /// Hip angular velocity [rad/s]: the recorded channel when present,
  /// otherwise central differences of the hip angle.
  std::vector<double> hip_velocity(Side s) const;

  /// Strictly increasing time with at most 1% interval jitter.
  void validate() const;
};

/// Parses the CSV format
/// `time_s,hip_l_deg,hip_r_deg,knee_l_deg,knee_r_deg,contact_l,contact_r[,tau_l_nm,tau_r_nm,omega_l_rads,omega_r_rads]`.
/// Contact columns may be empty, in which case the trace has no contact
/// channel. Throws ParseError with the offending row and column.
GaitTrace parse_gait_csv(std::istream& in);
GaitTrace parse_gait_csv_string(const std::string& text);
void write_gait_csv(std::ostream& out, const GaitTrace& trace);

struct GaitEvent {
  std::size_t heel_strike = 0;
  /// Absent when the recording ends during stance.
  std::optional<std::size_t> toe_off;

  bool operator==(const GaitEvent&) const = default;
};

inline constexpr double kDefaultDebounceS = 0.050;

/// Heel strike = false->true contact transition, toe off = true->false.
/// Contact runs shorter than `debounce_s` between transitions are treated as
/// noise. Throws UnsupportedInputError when the trace has no contact channel.
std::vector<GaitEvent> detect_events(const GaitTrace& trace, Side side,
                                     double debounce_s = kDefaultDebounceS);

struct GaitCycle {
  std::size_t start = 0;  // heel strike index
  std::size_t end = 0;    // next heel strike index (exclusive)
  double stance_s = 0.0;
  double swing_s = 0.0;
  std::vector<double> phase;  // one entry per sample in [start, end)

  double duration_s() const { return stance_s + swing_s; }
};

/// One cycle per pair of consecutive heel strikes.
std::vector<GaitCycle> segment_cycles(const GaitTrace& trace,
                                      std::span<const GaitEvent> events);

/// Phase = (t - last heel strike) / mean of the last `window` stride
/// durations, clamped to [0, 1). Returns nullopt with fewer than two heel
/// strikes.
std::optional<double> estimate_phase(std::span<const double> heel_strike_times,
                                     double now_s, std::size_t window = 3);

/// Online phase estimator. Owned by a single session; not thread-safe.
class PhaseEstimator {
 public:
  explicit PhaseEstimator(std::size_t window = 3) : window_(window) {}

  void record_heel_strike(double t_s);
  std::optional<double> phase(double now_s) const;
  bool ready() const { return heel_strikes_.size() >= 2; }

 private:
  std::size_t window_;
  std::vector<double> heel_strikes_;
};

struct RatioSummary {
  std::vector<double> ratios;
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1); 0 for a single ratio
  std::size_t excluded = 0;  // cycles with zero swing
};

/// Stance/swing duration ratio per cycle.
RatioSummary stance_swing_ratio(std::span<const GaitCycle> cycles);

struct SynergyRow {
  std::size_t cycle = 0;
  std::size_t point = 0;
  double phase = 0.0;
  double hip_deg = 0.0;
  double knee_deg = 0.0;
};

inline constexpr std::size_t kSynergyPoints = 100;

/// Hip vs knee angle pairs per cycle, linearly resampled to `points` phases.
std::vector<SynergyRow> synergy_export(const GaitTrace& trace,
                                       std::span<const GaitCycle> cycles,
                                       Side side,
                                       std::size_t points = kSynergyPoints);

}  // namespace prefgait

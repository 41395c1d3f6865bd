#pragma once

// Shared helpers for the unit tests: scratch directories and synthetic gait
// traces.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <unistd.h>

#include "prefgait/gait.hpp"

namespace prefgait::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("prefgait-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct SyntheticGait {
  double rate_hz = 100.0;
  double stride_s = 1.0;
  double stance_fraction = 0.6;
  std::size_t strides = 5;
  double torque_nm = 1.0;
  bool with_torque = true;
  bool with_contact = true;
};

// Both legs share the contact pattern (right leg offset by half a stride).
// Hip angle 20 sin(2 pi phase) deg, knee 30 cos(2 pi phase) deg, omega
// sin(2 pi phase) rad/s, constant torque.
inline GaitTrace synthetic_trace(const SyntheticGait& g) {
  GaitTrace trace;
  trace.has_contact = g.with_contact;
  trace.has_torque = g.with_torque;
  trace.has_omega = g.with_torque;
  const auto n = static_cast<std::size_t>(std::llround(g.strides * g.stride_s * g.rate_hz));
  for (std::size_t i = 0; i < n; ++i) {
    GaitSample s;
    s.time_s = static_cast<double>(i) / g.rate_hz;
    const double phase_l = std::fmod(s.time_s / g.stride_s, 1.0);
    const double phase_r = std::fmod(phase_l + 0.5, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    s.hip_l_deg = 20.0 * std::sin(two_pi * phase_l);
    s.hip_r_deg = 20.0 * std::sin(two_pi * phase_r);
    s.knee_l_deg = 30.0 * std::cos(two_pi * phase_l);
    s.knee_r_deg = 30.0 * std::cos(two_pi * phase_r);
    // Stance begins at the first sample of each stride.
    const auto k = i % static_cast<std::size_t>(std::llround(g.stride_s * g.rate_hz));
    const auto stance_n = static_cast<std::size_t>(std::llround(g.stance_fraction * g.stride_s * g.rate_hz));
    const auto half = static_cast<std::size_t>(std::llround(0.5 * g.stride_s * g.rate_hz));
    const auto stride_n = static_cast<std::size_t>(std::llround(g.stride_s * g.rate_hz));
    s.contact_l = g.with_contact && k < stance_n;
    s.contact_r = g.with_contact && ((k + stride_n - half) % stride_n) < stance_n;
    if (g.with_torque) {
      s.tau_l_nm = g.torque_nm;
      s.tau_r_nm = g.torque_nm;
      s.omega_l_rads = std::sin(two_pi * phase_l);
      s.omega_r_rads = std::sin(two_pi * phase_r);
    }
    trace.samples.push_back(s);
  }
  return trace;
}

}  // namespace prefgait::testing

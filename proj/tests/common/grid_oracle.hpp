#pragma once

// Brute-force posterior over unit vectors in the plane on a 1-degree grid.
// Each observation is the feature difference d = phi(chosen) - phi(other);
// its likelihood is the logistic sigmoid of beta * w.d.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace prefgait::testing {

inline constexpr int kGridBins = 360;

inline std::array<double, 2> grid_direction(int bin) {
  const double theta = (bin + 0.5) * 2.0 * std::numbers::pi / kGridBins;
  return {std::cos(theta), std::sin(theta)};
}

inline int grid_bin(double x, double y) {
  double theta = std::atan2(y, x);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  int bin = static_cast<int>(theta / (2.0 * std::numbers::pi) * kGridBins);
  return bin >= kGridBins ? kGridBins - 1 : bin;
}

inline std::vector<double> grid_posterior(std::span<const std::array<double, 2>> diffs,
                                          double beta) {
  std::vector<double> logp(kGridBins, 0.0);
  double max_logp = -INFINITY;
  for (int b = 0; b < kGridBins; ++b) {
    const auto w = grid_direction(b);
    for (const auto& d : diffs) {
      const double x = beta * (w[0] * d[0] + w[1] * d[1]);
      logp[b] += -std::log1p(std::exp(-x));
    }
    max_logp = std::max(max_logp, logp[b]);
  }
  std::vector<double> p(kGridBins);
  double total = 0.0;
  for (int b = 0; b < kGridBins; ++b) total += p[b] = std::exp(logp[b] - max_logp);
  for (double& v : p) v /= total;
  return p;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

inline std::vector<double> histogram(const std::vector<std::vector<double>>& samples) {
  std::vector<double> h(kGridBins, 0.0);
  for (const auto& s : samples) h[grid_bin(s[0], s[1])] += 1.0;
  for (double& v : h) v /= static_cast<double>(samples.size());
  return h;
}

// Posterior mass of directions within 90 degrees of `axis`.
inline double hemisphere_mass(std::span<const double> p, std::array<double, 2> axis) {
  double mass = 0.0;
  for (int b = 0; b < kGridBins; ++b) {
    const auto w = grid_direction(b);
    if (w[0] * axis[0] + w[1] * axis[1] > 0.0) mass += p[b];
  }
  return mass;
}

}  // namespace prefgait::testing

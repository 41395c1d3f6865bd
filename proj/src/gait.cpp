#include "prefgait/gait.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "prefgait/errors.hpp"

namespace prefgait {

std::string to_string(Side side) { return side == Side::kLeft ? "left" : "right"; }

double GaitTrace::sample_period() const {
  if (samples.size() < 2) return 0.0;
  return (samples.back().time_s - samples.front().time_s) /
         static_cast<double>(samples.size() - 1);
}

double GaitTrace::sample_rate_hz() const {
  const double dt = sample_period();
  return dt > 0.0 ? 1.0 / dt : 0.0;
}

double GaitTrace::hip(std::size_t i, Side s) const {
  return s == Side::kLeft ? samples[i].hip_l_deg : samples[i].hip_r_deg;
}
double GaitTrace::knee(std::size_t i, Side s) const {
  return s == Side::kLeft ? samples[i].knee_l_deg : samples[i].knee_r_deg;
}
bool GaitTrace::contact(std::size_t i, Side s) const {
  return s == Side::kLeft ? samples[i].contact_l : samples[i].contact_r;
}
double GaitTrace::torque(std::size_t i, Side s) const {
  return s == Side::kLeft ? samples[i].tau_l_nm : samples[i].tau_r_nm;
}

std::vector<double> GaitTrace::hip_velocity(Side s) const {
  const std::size_t n = samples.size();
  std::vector<double> omega(n, 0.0);
  if (has_omega) {
    for (std::size_t i = 0; i < n; ++i) {
      omega[i] = s == Side::kLeft ? samples[i].omega_l_rads : samples[i].omega_r_rads;
    }
    return omega;
  }
  if (n < 2) return omega;
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double dt = samples[hi].time_s - samples[lo].time_s;
    omega[i] = (hip(hi, s) - hip(lo, s)) * kDegToRad / dt;
  }
  return omega;
}

void GaitTrace::validate() const {
  if (samples.size() < 2) return;
  // Nominal interval: the median step, so one glitch does not move it.
  std::vector<double> steps(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    steps[i - 1] = samples[i].time_s - samples[i - 1].time_s;
  }
  std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
  const double dt = steps[steps.size() / 2];
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double step = samples[i].time_s - samples[i - 1].time_s;
    if (!(step > 0.0)) {
      throw ParseError("time must be strictly increasing", i + 2, 1);
    }
    if (std::abs(step - dt) > 0.01 * dt) {
      throw ParseError("sampling interval jitter exceeds 1%", i + 2, 1);
    }
  }
}

namespace {

const std::vector<std::string> kRequiredColumns = {
    "time_s", "hip_l_deg", "hip_r_deg", "knee_l_deg", "knee_r_deg",
    "contact_l", "contact_r"};
const std::vector<std::string> kOptionalColumns = {"tau_l_nm", "tau_r_nm",
                                                   "omega_l_rads", "omega_r_rads"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t\r");
    const auto e = c.find_last_not_of(" \t\r");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col,
                    const std::string& column_name) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw ParseError("invalid number '" + cell + "' in column " + column_name, row,
                     col);
  }
  return value;
}

}  // namespace

GaitTrace parse_gait_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty gait CSV", 1, 0);
  const auto header = split_csv_line(line);
  if (header.size() != kRequiredColumns.size() &&
      header.size() != kRequiredColumns.size() + kOptionalColumns.size()) {
    throw ParseError("expected 7 or 11 columns, got " + std::to_string(header.size()),
                     1, 0);
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& want = c < kRequiredColumns.size()
                                  ? kRequiredColumns[c]
                                  : kOptionalColumns[c - kRequiredColumns.size()];
    if (header[c] != want) {
      throw ParseError("expected column '" + want + "', got '" + header[c] + "'", 1,
                       c + 1);
    }
  }
  const bool extended = header.size() > kRequiredColumns.size();

  GaitTrace trace;
  trace.has_torque = extended;
  trace.has_omega = extended;
  std::size_t row = 1;
  std::size_t contact_rows = 0;
  std::size_t empty_contact_rows = 0;
  bool omega_present = extended;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       row, std::min(cells.size(), header.size()) + 1);
    }
    GaitSample s;
    s.time_s = parse_number(cells[0], row, 1, header[0]);
    s.hip_l_deg = parse_number(cells[1], row, 2, header[1]);
    s.hip_r_deg = parse_number(cells[2], row, 3, header[2]);
    s.knee_l_deg = parse_number(cells[3], row, 4, header[3]);
    s.knee_r_deg = parse_number(cells[4], row, 5, header[4]);
    for (std::size_t c = 5; c <= 6; ++c) {
      const std::string& v = cells[c];
      bool value = false;
      if (v.empty()) {
        ++empty_contact_rows;
      } else if (v == "0" || v == "1") {
        value = v == "1";
        ++contact_rows;
      } else {
        throw ParseError("contact must be 0 or 1, got '" + v + "'", row, c + 1);
      }
      (c == 5 ? s.contact_l : s.contact_r) = value;
    }
    if (extended) {
      s.tau_l_nm = parse_number(cells[7], row, 8, header[7]);
      s.tau_r_nm = parse_number(cells[8], row, 9, header[8]);
      if (cells[9].empty() && cells[10].empty()) {
        omega_present = false;
      } else {
        s.omega_l_rads = parse_number(cells[9], row, 10, header[9]);
        s.omega_r_rads = parse_number(cells[10], row, 11, header[10]);
      }
    }
    trace.samples.push_back(s);
  }
  if (contact_rows > 0 && empty_contact_rows > 0) {
    throw ParseError("contact columns must be filled in every row or in none", row,
                     6);
  }
  trace.has_contact = contact_rows > 0;
  trace.has_omega = omega_present;
  trace.validate();
  return trace;
}

GaitTrace parse_gait_csv_string(const std::string& text) {
  std::istringstream in(text);
  return parse_gait_csv(in);
}

void write_gait_csv(std::ostream& out, const GaitTrace& trace) {
  out << "time_s,hip_l_deg,hip_r_deg,knee_l_deg,knee_r_deg,contact_l,contact_r";
  const bool extended = trace.has_torque || trace.has_omega;
  if (extended) out << ",tau_l_nm,tau_r_nm,omega_l_rads,omega_r_rads";
  out << '\n';
  char buf[256];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9g,%.9g,%.9g,%.9g", s.time_s, s.hip_l_deg,
                  s.hip_r_deg, s.knee_l_deg, s.knee_r_deg);
    out << buf;
    if (trace.has_contact) {
      out << ',' << (s.contact_l ? 1 : 0) << ',' << (s.contact_r ? 1 : 0);
    } else {
      out << ",,";
    }
    if (extended) {
      std::snprintf(buf, sizeof buf, ",%.9g,%.9g", s.tau_l_nm, s.tau_r_nm);
      out << buf;
      if (trace.has_omega) {
        std::snprintf(buf, sizeof buf, ",%.9g,%.9g", s.omega_l_rads, s.omega_r_rads);
        out << buf;
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
}

std::vector<GaitEvent> detect_events(const GaitTrace& trace, Side side,
                                     double debounce_s) {
  if (!trace.has_contact) {
    throw UnsupportedInputError(
        "trace has no foot-contact channel; supply heel-strike events externally");
  }
  const std::size_t n = trace.size();
  if (n == 0) return {};

  struct Run {
    bool value;
    std::size_t begin;
    std::size_t length;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < n; ++i) {
    const bool c = trace.contact(i, side);
    if (runs.empty() || runs.back().value != c) {
      runs.push_back({c, i, 1});
    } else {
      ++runs.back().length;
    }
  }

  // Interior runs shorter than the debounce window take their neighbours'
  // value, merging three runs into one.
  const double dt = trace.sample_period();
  bool changed = true;
  while (changed && runs.size() >= 3) {
    changed = false;
    for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
      const double duration = static_cast<double>(runs[r].length) * dt;
      if (duration < debounce_s - 1e-12) {
        runs[r - 1].length += runs[r].length + runs[r + 1].length;
        runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(r),
                   runs.begin() + static_cast<std::ptrdiff_t>(r + 2));
        changed = true;
        break;
      }
    }
  }

  std::vector<GaitEvent> events;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].value) {
      events.push_back({runs[r].begin, std::nullopt});
    } else if (!events.empty()) {
      events.back().toe_off = runs[r].begin;
    }
  }
  return events;
}

std::vector<GaitCycle> segment_cycles(const GaitTrace& trace,
                                      std::span<const GaitEvent> events) {
  std::vector<GaitCycle> cycles;
  if (events.size() < 2) return cycles;
  const double dt = trace.sample_period();
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    GaitCycle c;
    c.start = events[k].heel_strike;
    c.end = events[k + 1].heel_strike;
    if (c.end <= c.start || c.end > trace.size()) {
      throw ValidationError("heel-strike events must be increasing and within the trace",
                            {"events"});
    }
    const std::size_t length = c.end - c.start;
    std::size_t toe_off = c.end;
    if (events[k].toe_off && *events[k].toe_off > c.start && *events[k].toe_off < c.end) {
      toe_off = *events[k].toe_off;
    }
    c.stance_s = static_cast<double>(toe_off - c.start) * dt;
    c.swing_s = static_cast<double>(c.end - toe_off) * dt;
    c.phase.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
      c.phase[i] = static_cast<double>(i) / static_cast<double>(length);
    }
    cycles.push_back(std::move(c));
  }
  return cycles;
}

std::optional<double> estimate_phase(std::span<const double> heel_strike_times,
                                     double now_s, std::size_t window) {
  const std::size_t n = heel_strike_times.size();
  if (n < 2 || window == 0) return std::nullopt;
  const std::size_t strides = std::min(window, n - 1);
  const double stride_mean =
      (heel_strike_times[n - 1] - heel_strike_times[n - 1 - strides]) /
      static_cast<double>(strides);
  if (!(stride_mean > 0.0)) return std::nullopt;
  const double phase = (now_s - heel_strike_times[n - 1]) / stride_mean;
  return std::clamp(phase, 0.0, std::nextafter(1.0, 0.0));
}

void PhaseEstimator::record_heel_strike(double t_s) {
  if (!heel_strikes_.empty() && t_s <= heel_strikes_.back()) {
    throw ValidationError("heel strikes must be strictly increasing in time", {"t"});
  }
  heel_strikes_.push_back(t_s);
  // Only the last `window_` strides are needed.
  if (heel_strikes_.size() > window_ + 1) {
    heel_strikes_.erase(heel_strikes_.begin());
  }
}

std::optional<double> PhaseEstimator::phase(double now_s) const {
  return estimate_phase(heel_strikes_, now_s, window_);
}

RatioSummary stance_swing_ratio(std::span<const GaitCycle> cycles) {
  RatioSummary out;
  for (const auto& c : cycles) {
    if (!(c.swing_s > 0.0)) {
      ++out.excluded;
      continue;
    }
    out.ratios.push_back(c.stance_s / c.swing_s);
  }
  const std::size_t n = out.ratios.size();
  if (n == 0) return out;
  out.mean = std::accumulate(out.ratios.begin(), out.ratios.end(), 0.0) /
             static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double r : out.ratios) ss += (r - out.mean) * (r - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return out;
}

std::vector<SynergyRow> synergy_export(const GaitTrace& trace,
                                       std::span<const GaitCycle> cycles, Side side,
                                       std::size_t points) {
  std::vector<SynergyRow> rows;
  rows.reserve(cycles.size() * points);
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    const auto& c = cycles[k];
    const std::size_t length = c.end - c.start;
    // The next heel strike sample closes the cycle when available.
    const std::size_t last = std::min(c.end, trace.size() - 1);
    for (std::size_t p = 0; p < points; ++p) {
      const double phase = static_cast<double>(p) / static_cast<double>(points);
      const double pos = static_cast<double>(c.start) + phase * static_cast<double>(length);
      const auto i0 = std::min(static_cast<std::size_t>(std::floor(pos)), last);
      const std::size_t i1 = std::min(i0 + 1, last);
      const double frac = pos - static_cast<double>(i0);
      SynergyRow row;
      row.cycle = k;
      row.point = p;
      row.phase = phase;
      row.hip_deg = trace.hip(i0, side) + frac * (trace.hip(i1, side) - trace.hip(i0, side));
      row.knee_deg =
          trace.knee(i0, side) + frac * (trace.knee(i1, side) - trace.knee(i0, side));
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace prefgait

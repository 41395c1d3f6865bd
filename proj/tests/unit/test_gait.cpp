#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "prefgait/errors.hpp"
#include "prefgait/gait.hpp"
#include "support.hpp"

using namespace prefgait;
using prefgait::testing::SyntheticGait;
using prefgait::testing::synthetic_trace;

namespace {

GaitTrace contact_trace(const std::vector<bool>& contact, double rate_hz = 100.0) {
  GaitTrace t;
  t.has_contact = true;
  for (std::size_t i = 0; i < contact.size(); ++i) {
    GaitSample s;
    s.time_s = static_cast<double>(i) / rate_hz;
    s.contact_l = contact[i];
    s.contact_r = contact[i];
    t.samples.push_back(s);
  }
  return t;
}

std::vector<bool> square_wave(std::size_t periods, std::size_t on, std::size_t off) {
  std::vector<bool> v;
  for (std::size_t p = 0; p < periods; ++p) {
    v.insert(v.end(), on, true);
    v.insert(v.end(), off, false);
  }
  return v;
}

}  // namespace

TEST_SUITE("gait") {

TEST_CASE("square-wave contact yields periodic heel strikes and toe-offs") {
  const auto trace = contact_trace(square_wave(5, 60, 40));
  const auto events = detect_events(trace, Side::kLeft);
  REQUIRE(events.size() == 4);
  for (std::size_t k = 0; k < events.size(); ++k) {
    CHECK(events[k].heel_strike == 100 * (k + 1));
    REQUIRE(events[k].toe_off.has_value());
    CHECK(*events[k].toe_off == events[k].heel_strike + 60);
  }
}

TEST_CASE("short dropout during stance is debounced") {
  auto contact = square_wave(5, 60, 40);
  const auto clean = detect_events(contact_trace(contact), Side::kLeft);
  // 20 ms dropout in the middle of the third stance.
  contact[230] = false;
  contact[231] = false;
  const auto noisy = detect_events(contact_trace(contact), Side::kLeft);
  CHECK(noisy == clean);
  // Without debounce the dropout produces an extra heel strike.
  CHECK(detect_events(contact_trace(contact), Side::kLeft, 0.0).size() == clean.size() + 1);
}

TEST_CASE("short spurious contact during swing is debounced") {
  auto contact = square_wave(5, 60, 40);
  const auto clean = detect_events(contact_trace(contact), Side::kLeft);
  contact[180] = true;
  contact[181] = true;
  contact[182] = true;
  CHECK(detect_events(contact_trace(contact), Side::kLeft) == clean);
}

TEST_CASE("no contact means no events; missing channel is unsupported") {
  CHECK(detect_events(contact_trace(std::vector<bool>(300, false)), Side::kRight).empty());
  SyntheticGait g;
  g.with_contact = false;
  CHECK_THROWS_AS(detect_events(synthetic_trace(g), Side::kLeft), UnsupportedInputError);
}

TEST_CASE("segmentation covers samples between first and last heel strike") {
  const auto trace = synthetic_trace({.strides = 6});
  for (Side side : {Side::kLeft, Side::kRight}) {
    const auto events = detect_events(trace, side);
    const auto cycles = segment_cycles(trace, events);
    REQUIRE(cycles.size() == events.size() - 1);
    std::size_t expected = events.front().heel_strike;
    for (const auto& c : cycles) {
      CHECK(c.start == expected);
      CHECK(c.phase.size() == c.end - c.start);
      CHECK(c.phase.front() == 0.0);
      CHECK(c.phase.back() < 1.0);
      expected = c.end;
    }
    CHECK(expected == events.back().heel_strike);
  }
}

TEST_CASE("phase estimation") {
  const std::vector<double> regular{0.0, 1.0, 2.0, 3.0};
  CHECK(*estimate_phase(regular, 3.25) == doctest::Approx(0.25));
  const double clamped = *estimate_phase(regular, 4.3);
  CHECK(clamped < 1.0);
  CHECK(clamped == doctest::Approx(1.0));
  CHECK(*estimate_phase(regular, 2.9) == 0.0);

  const std::vector<double> varied{0.0, 0.9, 1.9, 3.0};
  CHECK(*estimate_phase(varied, 3.5) == doctest::Approx(0.5));

  CHECK_FALSE(estimate_phase(std::vector<double>{1.0}, 1.5).has_value());
  CHECK_FALSE(estimate_phase(std::vector<double>{}, 1.5).has_value());
}

TEST_CASE("phase estimation is invariant to time translation") {
  const std::vector<double> hs{0.0, 1.1, 2.05, 3.2};
  for (double shift : {-5.0, 0.37, 1000.0}) {
    std::vector<double> moved;
    for (double t : hs) moved.push_back(t + shift);
    CHECK(*estimate_phase(moved, 3.6 + shift) == doctest::Approx(*estimate_phase(hs, 3.6)));
  }
}

TEST_CASE("phase estimator keeps a rolling window") {
  PhaseEstimator est(3);
  CHECK_FALSE(est.phase(0.5).has_value());
  est.record_heel_strike(0.0);
  CHECK_FALSE(est.ready());
  est.record_heel_strike(2.0);
  est.record_heel_strike(3.0);
  est.record_heel_strike(4.0);
  est.record_heel_strike(5.0);
  // Last three strides are 1.0 s each; the initial 2.0 s stride dropped out.
  CHECK(*est.phase(5.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(est.record_heel_strike(5.0), ValidationError);
}

TEST_CASE("stance to swing ratio") {
  auto cycle = [](double stance, double swing) {
    GaitCycle c;
    c.stance_s = stance;
    c.swing_s = swing;
    return c;
  };
  const std::vector<GaitCycle> a{cycle(0.6, 0.4)};
  CHECK(stance_swing_ratio(a).mean == doctest::Approx(1.5));
  CHECK(stance_swing_ratio(a).stddev == 0.0);
  const std::vector<GaitCycle> b{cycle(0.5, 0.5)};
  CHECK(stance_swing_ratio(b).mean == doctest::Approx(1.0));
  const std::vector<GaitCycle> c{cycle(0.5, 0.5), cycle(0.6, 0.5), cycle(0.7, 0.5)};
  const auto rc = stance_swing_ratio(c);
  CHECK(rc.mean == doctest::Approx(1.2));
  CHECK(rc.stddev == doctest::Approx(0.2));
  const std::vector<GaitCycle> d{cycle(1.0, 0.0), cycle(0.6, 0.4)};
  const auto rd = stance_swing_ratio(d);
  CHECK(rd.excluded == 1);
  CHECK(rd.ratios.size() == 1);
}

TEST_CASE("constant cadence gives zero ratio spread") {
  const auto trace = synthetic_trace({.strides = 8});
  const auto cycles = segment_cycles(trace, detect_events(trace, Side::kLeft));
  const auto r = stance_swing_ratio(cycles);
  // No heel strike at the first sample: 7 strikes, 6 complete cycles.
  REQUIRE(r.ratios.size() == 6);
  CHECK(r.mean == doctest::Approx(1.5));
  CHECK(r.stddev == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("synergy export resamples each cycle") {
  const auto trace = synthetic_trace({.strides = 4});
  const auto events = detect_events(trace, Side::kLeft);
  const auto cycles = segment_cycles(trace, events);
  REQUIRE(cycles.size() >= 2);

  const std::vector<GaitCycle> one{cycles.front()};
  const auto rows = synergy_export(trace, one, Side::kLeft);
  CHECK(rows.size() == 100);

  // Sine hip and cosine knee trace an ellipse with semi-axes 20 and 30.
  for (const auto& r : rows) {
    const double e = (r.hip_deg / 20.0) * (r.hip_deg / 20.0) + (r.knee_deg / 30.0) * (r.knee_deg / 30.0);
    CHECK(e == doctest::Approx(1.0).epsilon(0.01));
  }

  const auto both = synergy_export(trace, std::span(cycles).first(2), Side::kLeft);
  REQUIRE(both.size() == 200);
  for (std::size_t p = 0; p < 100; ++p) {
    CHECK(both[p].hip_deg == doctest::Approx(both[100 + p].hip_deg).epsilon(1e-9));
    CHECK(both[p].knee_deg == doctest::Approx(both[100 + p].knee_deg).epsilon(1e-9));
    CHECK(both[100 + p].cycle == 1);
  }
}

TEST_CASE("CSV round trip") {
  const auto trace = synthetic_trace({.strides = 2});
  std::ostringstream out;
  write_gait_csv(out, trace);
  const auto back = parse_gait_csv_string(out.str());
  REQUIRE(back.size() == trace.size());
  CHECK(back.has_contact);
  CHECK(back.has_torque);
  CHECK(back.has_omega);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(back.samples[i].hip_l_deg == doctest::Approx(trace.samples[i].hip_l_deg));
    CHECK(back.samples[i].contact_r == trace.samples[i].contact_r);
    CHECK(back.samples[i].omega_l_rads == doctest::Approx(trace.samples[i].omega_l_rads));
  }
}

TEST_CASE("CSV without contact columns parses with no contact channel") {
  const std::string csv =
      "time_s,hip_l_deg,hip_r_deg,knee_l_deg,knee_r_deg,contact_l,contact_r\n"
      "0.00,1,2,3,4,,\n"
      "0.01,1,2,3,4,,\n";
  const auto t = parse_gait_csv_string(csv);
  CHECK_FALSE(t.has_contact);
  CHECK_FALSE(t.has_torque);
  CHECK(t.size() == 2);
}

TEST_CASE("CSV errors carry row and column") {
  const std::string header =
      "time_s,hip_l_deg,hip_r_deg,knee_l_deg,knee_r_deg,contact_l,contact_r\n";
  auto expect_error = [](const std::string& text, std::size_t row, std::size_t column) {
    try {
      parse_gait_csv_string(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == row);
      CHECK(e.column() == column);
    }
  };
  expect_error(header + "0.00,1,2,3,4,1,0\n0.01,1,x,3,4,1,0\n", 3, 3);
  expect_error(header + "0.00,1,2,3,4,2,0\n", 2, 6);
  expect_error(header + "0.00,1,2,3,4,1\n", 2, 7);
  expect_error("time,hip_l_deg,hip_r_deg,knee_l_deg,knee_r_deg,contact_l,contact_r\n", 1, 1);
  expect_error(header + "0.00,1,2,3,4,1,0\n0.01,1,2,3,4,,\n", 3, 6);
  CHECK_THROWS_AS(parse_gait_csv_string(""), ParseError);
}

TEST_CASE("trace validation rejects non-monotonic and jittery time") {
  const std::string header =
      "time_s,hip_l_deg,hip_r_deg,knee_l_deg,knee_r_deg,contact_l,contact_r\n";
  auto expect_row = [](const std::string& text, std::size_t row) {
    try {
      parse_gait_csv_string(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == row);
      CHECK(e.column() == 1);
    }
  };
  expect_row(header + "0.00,0,0,0,0,1,1\n0.00,0,0,0,0,1,1\n", 3);
  expect_row(header +
                 "0.00,0,0,0,0,1,1\n0.01,0,0,0,0,1,1\n0.02,0,0,0,0,1,1\n0.03,0,0,0,0,1,1\n"
                 "0.045,0,0,0,0,1,1\n0.055,0,0,0,0,1,1\n0.065,0,0,0,0,1,1\n",
             6);
}

TEST_CASE("hip velocity falls back to differentiated angles") {
  auto trace = synthetic_trace({.strides = 2, .with_torque = false});
  const auto v = trace.hip_velocity(Side::kLeft);
  REQUIRE(v.size() == trace.size());
  // d/dt of 20 sin(2 pi t) deg at t = 0.25 s is zero; at t = 0 it is 40 pi deg/s.
  CHECK(v[25] == doctest::Approx(0.0).epsilon(1e-2));
  CHECK(std::abs(v[100]) == doctest::Approx(40.0 * std::numbers::pi * std::numbers::pi / 180.0).epsilon(0.01));
}

}  // TEST_SUITE

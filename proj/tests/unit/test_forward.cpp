#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "wavesrc/errors.hpp"
#include "wavesrc/forward.hpp"

using namespace wavesrc;

namespace {

const TimeGrid kGrid(15.0, 32768);

SourceSupport point_at(Point3 p, double tau = 1.0) { return SourceSupport(PointSet{{{p, tau}}}); }

std::size_t first_nonzero(const Recording& r, std::size_t i, double floor = 0.0) {
  const auto row = r.row(i);
  for (std::size_t k = 0; k < row.size(); ++k)
    if (std::abs(row[k]) > floor) return k;
  return row.size();
}

}  // namespace

TEST(Simulate, PointSourceValue) {
  const SensorArray sensors({{3.5, 0, 0}});
  const Recording r = simulate(point_at({0, 0, 0}), Signal::windowed_sine(), sensors, kGrid, 1.0, 0.01);
  const std::size_t k = 14200;
  const double t = kGrid.at(k);
  const double expected = Signal::windowed_sine()(t - 3.5) / (4 * std::numbers::pi * 3.5);
  EXPECT_NEAR(r.at(0, k), expected, 1e-15);
  const Recording r2 = simulate(point_at({0, 0, 0}), Signal::windowed_sine(), sensors, TimeGrid(13.0, 26), 1.0, 0.01);
  EXPECT_NEAR(r2.at(0, 13), 0.00320856383598514, 1e-14);  // t = 6.5
  EXPECT_EQ(r2.at(0, 6), 0.0);                              // t = 3.0 < 3.5
}

TEST(Simulate, CausalBeforeTravelTime) {
  const SensorArray sensors({{3.5, 0, 0}});
  const Recording r = simulate(point_at({0, 0, 0}), Signal::windowed_sine(), sensors, TimeGrid(3.4, 34), 1.0, 0.01);
  for (double v : r.values) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, NearestSourceGovernsOnset) {
  const SourceSupport s(PointSet{{{{0, 1, 0}, 3}, {{0, -1, 0}, 2}}});
  const SensorArray sensors({{0, 3.5, 0}});
  const Recording r = simulate(s, Signal::windowed_sine(), sensors, kGrid, 1.0, 0.01);
  const std::size_t k = first_nonzero(r, 0);
  EXPECT_GT(kGrid.at(k), 2.5);
  EXPECT_LE(kGrid.at(k), 2.5 + kGrid.dt());
}

TEST(Simulate, Superposition) {
  const SensorArray sensors({{3.5, 0, 0}, {0, -3.5, 0}});
  const Signal p = Signal::windowed_sine();
  const Recording both = simulate(SourceSupport(PointSet{{{{0, 1, 0}, 3}, {{0, -1, 0}, 2}}}), p, sensors, kGrid, 1, 0.01);
  const Recording a = simulate(point_at({0, 1, 0}, 3), p, sensors, kGrid, 1, 0.01);
  const Recording b = simulate(point_at({0, -1, 0}, 2), p, sensors, kGrid, 1, 0.01);
  for (std::size_t i = 0; i < both.values.size(); ++i) EXPECT_NEAR(both.values[i], a.values[i] + b.values[i], 1e-12);
}

TEST(Simulate, AmplitudeDecay) {
  const Signal p = Signal::windowed_sine();
  const TimeGrid g(40.0, 80000);
  const Recording near = simulate(point_at({0, 0, 0}), p, SensorArray({{2, 0, 0}}), g, 1, 0.01);
  const Recording far = simulate(point_at({0, 0, 0}), p, SensorArray({{4, 0, 0}}), g, 1, 0.01);
  double pn = 0, pf = 0;
  for (double v : near.values) pn = std::max(pn, std::abs(v));
  for (double v : far.values) pf = std::max(pf, std::abs(v));
  // shifting the time grid by 2 keeps the sample phases identical (2 / dt is integral)
  EXPECT_NEAR(pf / pn, 0.5, 1e-9);
}

TEST(Simulate, ExtendedSupportIsCausal) {
  const SourceSupport seg(Segment{{-0.08, -2.4, 0}, {0.08, 2.4, 0}});
  const SensorArray sensors({{5, 0, 0}, {0, 5, 0}, {-3, 4, 0}});
  for (ForwardMethod m : {ForwardMethod::Direct, ForwardMethod::Binned}) {
    const Recording r = simulate(seg, Signal::windowed_sine(), sensors, kGrid, 1.0, 0.01, m);
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      const double d = min_distance(seg, sensors[i]).distance;
      const std::size_t k = first_nonzero(r, i, 1e-12);
      ASSERT_LT(k, kGrid.size());
      EXPECT_GE(kGrid.at(k), d - 1e-12);
      EXPECT_LE(kGrid.at(k), d + 0.15);
    }
  }
}

TEST(Simulate, BinnedMatchesDirect) {
  const SourceSupport seg(Segment{{-1, 0, 0}, {1, 0.5, 0}});
  const SensorArray sensors({{4, 1, 0}, {-2, -3, 1}});
  const Recording d = simulate(seg, Signal::windowed_sine(), sensors, kGrid, 1.0, 0.01, ForwardMethod::Direct);
  const Recording b = simulate(seg, Signal::windowed_sine(), sensors, kGrid, 1.0, 0.01, ForwardMethod::Binned);
  double peak = 0, err = 0;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    peak = std::max(peak, std::abs(d.values[i]));
    err = std::max(err, std::abs(d.values[i] - b.values[i]));
  }
  EXPECT_LT(err, 1e-3 * peak);
}

TEST(Simulate, QuadratureConvergence) {
  const SourceSupport seg(Segment{{0, -1, 0}, {0, 1, 0}});
  const SensorArray sensors({{3, 0.3, 0}});
  std::vector<double> peaks;
  for (double h : {0.4, 0.2, 0.1, 0.05}) {
    const Recording r = simulate(seg, Signal::windowed_sine(), sensors, kGrid, 1.0, h, ForwardMethod::Direct);
    double p = 0;
    for (double v : r.values) p = std::max(p, std::abs(v));
    peaks.push_back(p);
  }
  for (std::size_t i = 2; i < peaks.size(); ++i)
    EXPECT_LE(std::abs(peaks[i] - peaks[i - 1]), std::abs(peaks[i - 1] - peaks[i - 2]) + 1e-15);
}

TEST(Simulate, Rejections) {
  const SensorArray on({{0, 0, 0}});
  EXPECT_THROW(simulate(point_at({0, 0, 0}), Signal::windowed_sine(), on, kGrid, 1, 0.01), ValidationError);
  EXPECT_THROW(simulate(point_at({0, 0, 0}), Signal::windowed_sine(), SensorArray({{1, 0, 0}}), kGrid, 0, 0.01),
               ValidationError);
  EXPECT_THROW(SensorArray({{1, 0, 0}, {1, 0, 0}}), ValidationError);
}

TEST(RecordingCsv, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "wavesrc_rec";
  std::filesystem::create_directories(dir);
  const SensorArray sensors({{3.5, 0, 0}, {0, 3.5, 0}});
  const Recording r = simulate(point_at({0, 0.2, 0}), Signal::windowed_sine(), sensors, TimeGrid(15, 300), 1, 0.01);
  write_recording_csv(r, (dir / "r.csv").string());
  write_sensors_csv(sensors, (dir / "s.csv").string());
  const Recording back = read_recording_csv((dir / "r.csv").string(), (dir / "s.csv").string());
  ASSERT_EQ(back.values.size(), r.values.size());
  EXPECT_EQ(back.grid.size(), r.grid.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) EXPECT_NEAR(back.values[i], r.values[i], 5e-9 * std::abs(r.values[i]));
  EXPECT_EQ(back.sensors.positions[1], sensors.positions[1]);
  std::filesystem::remove_all(dir);
}

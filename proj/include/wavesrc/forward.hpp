#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavesrc/geometry.hpp"
#include "wavesrc/signal.hpp"

namespace wavesrc {

struct SensorArray {
  std::vector<Point3> positions;
  double radius_hint = 0.0;

  SensorArray() = default;
  SensorArray(std::vector<Point3> positions, double radius_hint = 0.0);
  std::size_t size() const { return positions.size(); }
  const Point3& operator[](std::size_t i) const { return positions[i]; }
};

// Wave field samples u(x_i, t_k), one row per sensor.
struct Recording {
  TimeGrid grid{1.0, 1};
  SensorArray sensors;
  std::vector<double> values;  // row-major, sensors.size() x grid.size()
  double noise_level = 0.0;
  std::optional<std::uint64_t> seed;
  double c = 1.0;

  std::size_t sensor_count() const { return sensors.size(); }
  std::size_t sample_count() const { return grid.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * grid.size(), grid.size()}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * grid.size(), grid.size()}; }
  double at(std::size_t i, std::size_t k) const { return values[i * grid.size() + k]; }
};

enum class ForwardMethod {
  Auto,    // Direct for atomic supports and small quadratures, Binned otherwise
  Direct,  // lambda evaluated at t_k - |x - y_q|/c for every node
  Binned,  // per-sensor retarded-time histogram convolved with lambda by FFT
};

inline constexpr double kDefaultQuadSpacing2D = 0.01;
inline constexpr double kDefaultQuadSpacing3D = 0.05;

// Superposes w_q tau_q lambda(t - r/c) / (4 pi r) over the support's quadrature.
Recording simulate(const SourceSupport& support, const Signal& signal, const SensorArray& sensors,
                   const TimeGrid& grid, double c, double quad_spacing,
                   ForwardMethod method = ForwardMethod::Auto);

// recordings.csv: header "t,s0,...,s{N-1}", one row per time sample, 9 significant digits.
void write_recording_csv(const Recording& rec, const std::string& path);
// sensors.csv: header "index,x1,x2,x3".
void write_sensors_csv(const SensorArray& sensors, const std::string& path);
SensorArray read_sensors_csv(const std::string& path);
// The time grid is rebuilt from the t column (T = last t, N_T = rows - 1).
Recording read_recording_csv(const std::string& recordings_path, const std::string& sensors_path, double c = 1.0,
                             double noise_level = 0.0);

}  // namespace wavesrc

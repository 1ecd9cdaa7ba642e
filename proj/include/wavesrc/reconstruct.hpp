#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wavesrc/forward.hpp"
#include "wavesrc/geometry.hpp"
#include "wavesrc/measurement.hpp"

namespace wavesrc {

inline constexpr double kDefaultCap = 1e6;
inline constexpr double kDefaultCarveMargin = 0.15;

// Rectangular lattice of probe points with inclusive end points
// (linspace-style). Plane grids enumerate row-major with u fastest:
// index = iv * n + iu. Box grids use index = (i3 * n + i2) * n + i1.
class SamplingGrid {
 public:
  enum class Mode { Plane, Box3 };

  static SamplingGrid plane(const PlaneFrame& frame, Vec2 lo, Vec2 hi, std::size_t n);
  static SamplingGrid box(Point3 lo, Point3 hi, std::size_t n);

  Mode mode() const { return mode_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return mode_ == Mode::Plane ? n_ * n_ : n_ * n_ * n_; }
  Point3 point(std::size_t index) const;
  // Per-axis spacing (two axes used for Plane grids).
  std::array<double, 3> spacing() const;
  double max_spacing() const;

  const PlaneFrame& frame() const { return frame_; }
  const std::array<double, 3>& lo() const { return lo_; }
  const std::array<double, 3>& hi() const { return hi_; }

  std::vector<Point3> corners() const;

 private:
  SamplingGrid() = default;

  Mode mode_ = Mode::Plane;
  PlaneFrame frame_;
  std::array<double, 3> lo_{};
  std::array<double, 3> hi_{};
  std::size_t n_ = 0;
};

enum class Kernel {
  Sqrt,  // 1/sqrt|d|
  Abs,   // 1/|d|
};

struct IndicatorField {
  SamplingGrid grid;
  std::vector<double> values;
  Kernel kernel = Kernel::Abs;
  double cap = kDefaultCap;
};

struct CarveResult {
  SamplingGrid grid;
  std::vector<std::uint8_t> kept;
  std::vector<double> radii;  // per usable sensor, c * (arrival - onset)

  std::size_t kept_count() const;
};

double kernel_value(Kernel kernel, double mismatch, double cap);

// Sum over usable sensors of kernel(| |z - x_i| - c (arrival_i - onset) |),
// each term capped at `cap`. Sensors without an arrival are skipped.
class IndicatorSum {
 public:
  IndicatorSum(const ArrivalSet& arrivals, const SensorArray& sensors, double onset, double c, Kernel kernel,
               double cap);
  double operator()(Point3 z) const;
  std::size_t sensor_count() const { return positions_.size(); }

 private:
  std::vector<Point3> positions_;
  std::vector<double> radii_;
  Kernel kernel_;
  double cap_;
};

IndicatorField indicator(const ArrivalSet& arrivals, const SensorArray& sensors, const SamplingGrid& grid,
                         double onset, double c, Kernel kernel = Kernel::Abs, double cap = kDefaultCap,
                         unsigned workers = 0);

// Keeps z iff |z - x_i| >= R_i - margin for every usable sensor.
CarveResult carve(const ArrivalSet& arrivals, const SensorArray& sensors, const SamplingGrid& grid, double onset,
                  double c, double margin = kDefaultCarveMargin);

struct ThresholdRule {
  enum class Kind { Absolute, Quantile };
  Kind kind = Kind::Quantile;
  double value = 0.999;

  // "absolute:5000" or "quantile:0.999"
  static ThresholdRule parse(const std::string& text);
  std::string to_string() const;
};

struct FieldPoint {
  Point3 position;
  double value = 0.0;
  std::size_t index = 0;
};

// Points strictly above the rule's level, sorted by descending value
// (row-major index breaks ties).
std::vector<FieldPoint> threshold_points(const IndicatorField& field, const ThresholdRule& rule);

enum class PeakRanking {
  Value,               // raw field value
  NeighborhoodMedian,  // median over the point and its grid neighbours, raw value breaks ties
};

// Greedy peak picking in descending rank order with a minimum separation.
std::vector<FieldPoint> local_maxima(const IndicatorField& field, double min_separation, std::size_t count,
                                     PeakRanking ranking = PeakRanking::Value);
// Median over the 3x3 (plane) or 3x3x3 (box) neighbourhood, clipped at the grid edge.
std::vector<double> neighborhood_median(const SamplingGrid& grid, const std::vector<double>& values);

// Export helpers.
void write_field_csv(const IndicatorField& field, const std::string& path);
void write_field_pgm(const IndicatorField& field, const std::string& path, bool log_scale = false);
void write_points_xyz(const std::vector<FieldPoint>& points, const std::string& path);
// peaks.csv: header "rank,x1,x2,x3,value".
void write_peaks_csv(const std::vector<FieldPoint>& peaks, const std::string& path);
void write_carve_csv(const CarveResult& carve, const std::string& path);
void write_carve_pgm(const CarveResult& carve, const std::string& path);

// Binary P5 image of a plane-grid scalar field, row 0 at the largest v.
std::string encode_pgm(const SamplingGrid& grid, const std::vector<double>& values, bool log_scale);

}  // namespace wavesrc

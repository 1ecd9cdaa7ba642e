#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wavesrc/forward.hpp"
#include "wavesrc/geometry.hpp"

namespace wavesrc {

inline constexpr double kDefaultEta = 1e-3;

struct ArrivalSet {
  std::vector<std::optional<double>> arrivals;  // indexed by sensor
  double eta = kDefaultEta;                     // relative threshold actually applied
  double u_max = 0.0;
  double bias_correction = 0.0;                 // subtracted by corrected()

  std::size_t size() const { return arrivals.size(); }
  std::size_t usable() const;
  std::optional<double> corrected(std::size_t i) const;
};

// u + eps * r * u_max with r ~ U[-1, 1] i.i.d. from a seeded mt19937_64.
Recording add_noise(const Recording& rec, double eps, std::uint64_t seed);

// Per sensor, the first t_k with |u| > max(eta, rec.noise_level) * u_max, where
// u_max is the largest |u| of the recording itself.
ArrivalSet detect_arrivals(const Recording& rec, double eta = kDefaultEta, double bias_correction = 0.0);

// Geometric first arrivals onset + dist(support, x_i)/c (not grid-quantised).
ArrivalSet oracle_arrivals(const SourceSupport& support, const SensorArray& sensors, double onset, double c);

// arrivals.csv: "index,x1,x2,x3,arrival" with NA for a missing arrival.
void write_arrivals_csv(const ArrivalSet& arrivals, const SensorArray& sensors, const std::string& path);
// Reads arrivals and the sensor positions stored alongside them.
ArrivalSet read_arrivals_csv(const std::string& path, SensorArray* sensors = nullptr);

}  // namespace wavesrc

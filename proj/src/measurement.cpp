#include "wavesrc/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "wavesrc/errors.hpp"
#include "wavesrc/parallel.hpp"
#include "wavesrc/text_io.hpp"

namespace wavesrc {
namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Uniform on [-1, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double symmetric_unit(std::mt19937_64& gen) {
  return 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
}

}  // namespace

std::size_t ArrivalSet::usable() const {
  return static_cast<std::size_t>(std::count_if(arrivals.begin(), arrivals.end(), [](const auto& a) { return a.has_value(); }));
}

std::optional<double> ArrivalSet::corrected(std::size_t i) const {
  if (!arrivals[i]) return std::nullopt;
  return *arrivals[i] - bias_correction;
}

Recording add_noise(const Recording& rec, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ValidationError("noise level must be >= 0");
  Recording out = rec;
  out.noise_level = eps;
  out.seed = seed;
  if (eps == 0.0) return out;
  const double scale = eps * max_abs(rec.values);
  std::mt19937_64 gen(seed);
  for (double& v : out.values) v += scale * symmetric_unit(gen);
  return out;
}

ArrivalSet detect_arrivals(const Recording& rec, double eta, double bias_correction) {
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("detection threshold eta must lie in (0, 1)");
  ArrivalSet set;
  set.eta = std::max(eta, rec.noise_level);
  set.u_max = max_abs(rec.values);
  set.bias_correction = bias_correction;
  set.arrivals.assign(rec.sensor_count(), std::nullopt);
  const double level = set.eta * set.u_max;
  parallel_for(rec.sensor_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = rec.row(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (std::abs(row[k]) > level) {
          set.arrivals[i] = rec.grid.at(k);
          break;
        }
      }
    }
  });
  return set;
}

ArrivalSet oracle_arrivals(const SourceSupport& support, const SensorArray& sensors, double onset, double c) {
  if (!(c > 0.0)) throw ValidationError("sound speed must be positive");
  ArrivalSet set;
  set.eta = 0.0;
  set.arrivals.reserve(sensors.size());
  for (const Point3& x : sensors.positions) set.arrivals.emplace_back(onset + min_distance(support, x).distance / c);
  return set;
}

void write_arrivals_csv(const ArrivalSet& arrivals, const SensorArray& sensors, const std::string& path) {
  if (arrivals.size() != sensors.size()) throw ValidationError("arrivals and sensors are not index-aligned");
  std::string out = "index,x1,x2,x3,arrival\n";
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    out += std::to_string(i);
    for (double v : {sensors[i].x1, sensors[i].x2, sensors[i].x3}) out += "," + text::format_double(v, 17);
    out += "," + (arrivals.arrivals[i] ? text::format_double(*arrivals.arrivals[i], 17) : std::string("NA"));
    out += '\n';
  }
  text::write_file_atomic(path, out);
}

ArrivalSet read_arrivals_csv(const std::string& path, SensorArray* sensors) {
  std::istringstream in(text::read_file(path));
  std::string line;
  std::size_t lineno = 0;
  ArrivalSet set;
  std::vector<Point3> pos;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = text::trim(line);
    if (s.empty()) continue;
    if (lineno == 1) {
      if (s != "index,x1,x2,x3,arrival") throw ValidationError(path + ": expected header 'index,x1,x2,x3,arrival'");
      continue;
    }
    const auto cols = text::split(s, ',');
    if (cols.size() != 5) throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 5 columns");
    pos.push_back({text::parse_double(cols[1]), text::parse_double(cols[2]), text::parse_double(cols[3])});
    const std::string a = text::trim(cols[4]);
    if (a == "NA")
      set.arrivals.emplace_back(std::nullopt);
    else
      set.arrivals.emplace_back(text::parse_double(a));
  }
  if (sensors) *sensors = SensorArray(std::move(pos));
  return set;
}

}  // namespace wavesrc

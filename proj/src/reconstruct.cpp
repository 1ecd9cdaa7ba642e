#include "wavesrc/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wavesrc/errors.hpp"
#include "wavesrc/parallel.hpp"
#include "wavesrc/text_io.hpp"

namespace wavesrc {
namespace {

double lerp_axis(double lo, double hi, std::size_t i, std::size_t n) {
  if (i + 1 == n) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

void append_g9(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::size_t> descending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

void check_alignment(const ArrivalSet& arrivals, const SensorArray& sensors) {
  if (arrivals.size() != sensors.size()) throw ValidationError("arrivals and sensors are not index-aligned");
  if (arrivals.usable() == 0) throw ValidationError("no sensor has a usable arrival");
}

}  // namespace

// --------------------------------------------------------------- SamplingGrid

SamplingGrid SamplingGrid::plane(const PlaneFrame& frame, Vec2 lo, Vec2 hi, std::size_t n) {
  if (n < 2) throw ValidationError("sampling grid needs n >= 2");
  if (!(hi.u > lo.u && hi.v > lo.v)) throw ValidationError("sampling box must have positive extent");
  SamplingGrid g;
  g.mode_ = Mode::Plane;
  g.frame_ = frame;
  g.lo_ = {lo.u, lo.v, 0.0};
  g.hi_ = {hi.u, hi.v, 0.0};
  g.n_ = n;
  return g;
}

SamplingGrid SamplingGrid::box(Point3 lo, Point3 hi, std::size_t n) {
  if (n < 2) throw ValidationError("sampling grid needs n >= 2");
  if (!(hi.x1 > lo.x1 && hi.x2 > lo.x2 && hi.x3 > lo.x3)) throw ValidationError("sampling box must have positive extent");
  SamplingGrid g;
  g.mode_ = Mode::Box3;
  g.lo_ = {lo.x1, lo.x2, lo.x3};
  g.hi_ = {hi.x1, hi.x2, hi.x3};
  g.n_ = n;
  return g;
}

Point3 SamplingGrid::point(std::size_t index) const {
  const std::size_t i = index % n_;
  const std::size_t j = (index / n_) % n_;
  if (mode_ == Mode::Plane) return frame_.to_world({lerp_axis(lo_[0], hi_[0], i, n_), lerp_axis(lo_[1], hi_[1], j, n_)});
  const std::size_t k = index / (n_ * n_);
  return {lerp_axis(lo_[0], hi_[0], i, n_), lerp_axis(lo_[1], hi_[1], j, n_), lerp_axis(lo_[2], hi_[2], k, n_)};
}

std::array<double, 3> SamplingGrid::spacing() const {
  const double d = static_cast<double>(n_ - 1);
  return {(hi_[0] - lo_[0]) / d, (hi_[1] - lo_[1]) / d, mode_ == Mode::Plane ? 0.0 : (hi_[2] - lo_[2]) / d};
}

double SamplingGrid::max_spacing() const {
  const auto s = spacing();
  return std::max({s[0], s[1], s[2]});
}

std::vector<Point3> SamplingGrid::corners() const {
  std::vector<Point3> out;
  if (mode_ == Mode::Plane) {
    for (double v : {lo_[1], hi_[1]})
      for (double u : {lo_[0], hi_[0]}) out.push_back(frame_.to_world({u, v}));
  } else {
    for (double z : {lo_[2], hi_[2]})
      for (double y : {lo_[1], hi_[1]})
        for (double x : {lo_[0], hi_[0]}) out.push_back({x, y, z});
  }
  return out;
}

// ------------------------------------------------------------------ indicator

double kernel_value(Kernel kernel, double mismatch, double cap) {
  const double d = std::abs(mismatch);
  if (d == 0.0) return cap;
  const double v = kernel == Kernel::Sqrt ? 1.0 / std::sqrt(d) : 1.0 / d;
  return std::min(v, cap);
}

IndicatorSum::IndicatorSum(const ArrivalSet& arrivals, const SensorArray& sensors, double onset, double c,
                           Kernel kernel, double cap)
    : kernel_(kernel), cap_(cap) {
  if (!(cap > 0.0) || !std::isfinite(cap)) throw ValidationError("indicator cap must be positive");
  if (!(c > 0.0)) throw ValidationError("sound speed must be positive");
  check_alignment(arrivals, sensors);
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const auto a = arrivals.corrected(i);
    if (!a) continue;
    positions_.push_back(sensors[i]);
    radii_.push_back(c * (*a - onset));
  }
}

double IndicatorSum::operator()(Point3 z) const {
  double sum = 0.0;
  if (kernel_ == Kernel::Abs) {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      const double d = std::abs(distance(z, positions_[i]) - radii_[i]);
      sum += (d * cap_ <= 1.0) ? cap_ : 1.0 / d;
    }
  } else {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      const double d = std::abs(distance(z, positions_[i]) - radii_[i]);
      sum += (d * cap_ * cap_ <= 1.0) ? cap_ : 1.0 / std::sqrt(d);
    }
  }
  return sum;
}

IndicatorField indicator(const ArrivalSet& arrivals, const SensorArray& sensors, const SamplingGrid& grid, double onset,
                         double c, Kernel kernel, double cap, unsigned workers) {
  const IndicatorSum sum(arrivals, sensors, onset, c, kernel, cap);
  IndicatorField field{grid, std::vector<double>(grid.size()), kernel, cap};
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t l = begin; l < end; ++l) field.values[l] = sum(grid.point(l));
      },
      workers);
  return field;
}

std::size_t CarveResult::kept_count() const {
  return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), std::uint8_t{1}));
}

CarveResult carve(const ArrivalSet& arrivals, const SensorArray& sensors, const SamplingGrid& grid, double onset,
                  double c, double margin) {
  if (!(margin >= 0.0)) throw ValidationError("carving margin must be >= 0");
  if (!(c > 0.0)) throw ValidationError("sound speed must be positive");
  check_alignment(arrivals, sensors);
  std::vector<Point3> centers;
  CarveResult out{grid, std::vector<std::uint8_t>(grid.size(), 0), {}};
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const auto a = arrivals.corrected(i);
    if (!a) continue;
    centers.push_back(sensors[i]);
    out.radii.push_back(std::max(0.0, c * (*a - onset)));
  }
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t l = begin; l < end; ++l) {
      const Point3 z = grid.point(l);
      bool keep = true;
      for (std::size_t i = 0; i < centers.size() && keep; ++i)
        keep = distance(z, centers[i]) >= out.radii[i] - margin;
      out.kept[l] = keep ? 1 : 0;
    }
  });
  return out;
}

// ----------------------------------------------------------- post-processing

ThresholdRule ThresholdRule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("threshold must be 'absolute:<v>' or 'quantile:<q>'");
  const std::string kind = text::trim(text.substr(0, colon));
  const double v = text::parse_double(text.substr(colon + 1));
  ThresholdRule r;
  if (kind == "absolute") {
    r.kind = Kind::Absolute;
  } else if (kind == "quantile") {
    r.kind = Kind::Quantile;
    if (!(v > 0.0 && v < 1.0)) throw ValidationError("quantile must lie in (0, 1)");
  } else {
    throw ValidationError("unknown threshold kind '" + kind + "'");
  }
  r.value = v;
  return r;
}

std::string ThresholdRule::to_string() const {
  return std::string(kind == Kind::Absolute ? "absolute:" : "quantile:") + text::format_double(value);
}

std::vector<FieldPoint> threshold_points(const IndicatorField& field, const ThresholdRule& rule) {
  if (field.values.empty()) return {};
  double level = rule.value;
  if (rule.kind == ThresholdRule::Kind::Quantile) {
    if (!(rule.value > 0.0 && rule.value < 1.0)) throw ValidationError("quantile must lie in (0, 1)");
    std::vector<double> sorted = field.values;
    // nearest-rank quantile
    const auto n = static_cast<double>(sorted.size());
    const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(rule.value * n))) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
    level = sorted[rank];
  }
  std::vector<FieldPoint> out;
  for (std::size_t l = 0; l < field.values.size(); ++l)
    if (field.values[l] > level) out.push_back({field.grid.point(l), field.values[l], l});
  std::stable_sort(out.begin(), out.end(), [](const FieldPoint& a, const FieldPoint& b) { return a.value > b.value; });
  return out;
}

std::vector<double> neighborhood_median(const SamplingGrid& grid, const std::vector<double>& values) {
  const std::size_t n = grid.n();
  const bool plane = grid.mode() == SamplingGrid::Mode::Plane;
  std::vector<double> out(values.size());
  parallel_for(values.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> window;
    window.reserve(27);
    for (std::size_t l = begin; l < end; ++l) {
      const std::size_t i1 = l % n;
      const std::size_t i2 = (l / n) % n;
      const std::size_t i3 = plane ? 0 : l / (n * n);
      window.clear();
      const std::size_t k_lo = plane ? 0 : (i3 > 0 ? i3 - 1 : 0);
      const std::size_t k_hi = plane ? 0 : std::min(i3 + 1, n - 1);
      for (std::size_t k = k_lo; k <= k_hi; ++k)
        for (std::size_t j = (i2 > 0 ? i2 - 1 : 0); j <= std::min(i2 + 1, n - 1); ++j)
          for (std::size_t i = (i1 > 0 ? i1 - 1 : 0); i <= std::min(i1 + 1, n - 1); ++i)
            window.push_back(values[(k * n + j) * n + i]);
      auto mid = window.begin() + static_cast<std::ptrdiff_t>((window.size() - 1) / 2);
      std::nth_element(window.begin(), mid, window.end());
      out[l] = *mid;
    }
  });
  return out;
}

std::vector<FieldPoint> local_maxima(const IndicatorField& field, double min_separation, std::size_t count,
                                     PeakRanking ranking) {
  if (!(min_separation > 0.0)) throw ValidationError("peak separation must be positive");
  if (count < 1) throw ValidationError("peak count must be >= 1");
  std::vector<std::size_t> order;
  if (ranking == PeakRanking::Value) {
    order = descending_order(field.values);
  } else {
    const std::vector<double> score = neighborhood_median(field.grid, field.values);
    order.resize(score.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (score[a] != score[b]) return score[a] > score[b];
      return field.values[a] > field.values[b];
    });
  }
  std::vector<FieldPoint> peaks;
  for (std::size_t l : order) {
    const Point3 p = field.grid.point(l);
    const bool separated = std::all_of(peaks.begin(), peaks.end(),
                                       [&](const FieldPoint& q) { return distance(p, q.position) >= min_separation; });
    if (!separated) continue;
    peaks.push_back({p, field.values[l], l});
    if (peaks.size() == count) break;
  }
  return peaks;
}

void write_field_csv(const IndicatorField& field, const std::string& path) {
  std::string out = "x1,x2,x3,value\n";
  out.reserve(field.values.size() * 48);
  for (std::size_t l = 0; l < field.values.size(); ++l) {
    const Point3 p = field.grid.point(l);
    append_g9(out, p.x1);
    out += ',';
    append_g9(out, p.x2);
    out += ',';
    append_g9(out, p.x3);
    out += ',';
    append_g9(out, field.values[l]);
    out += '\n';
  }
  text::write_file_atomic(path, out);
}

void write_peaks_csv(const std::vector<FieldPoint>& peaks, const std::string& path) {
  std::string out = "rank,x1,x2,x3,value\n";
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    out += std::to_string(i) + ',';
    append_g9(out, peaks[i].position.x1);
    out += ',';
    append_g9(out, peaks[i].position.x2);
    out += ',';
    append_g9(out, peaks[i].position.x3);
    out += ',';
    append_g9(out, peaks[i].value);
    out += '\n';
  }
  text::write_file_atomic(path, out);
}

std::string encode_pgm(const SamplingGrid& grid, const std::vector<double>& values, bool log_scale) {
  if (grid.mode() != SamplingGrid::Mode::Plane) throw ValidationError("PGM export needs a plane grid");
  const std::size_t n = grid.n();
  std::vector<double> v(values);
  if (log_scale)
    for (double& x : v) x = std::log1p(std::max(x, 0.0));
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  out.reserve(out.size() + n * n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t iv = n - 1 - r;
    for (std::size_t iu = 0; iu < n; ++iu) {
      const double x = v[iv * n + iu];
      const double level = hi > lo ? std::round(255.0 * (x - lo) / (hi - lo)) : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0.0, 255.0))));
    }
  }
  return out;
}

void write_field_pgm(const IndicatorField& field, const std::string& path, bool log_scale) {
  text::write_file_atomic(path, encode_pgm(field.grid, field.values, log_scale));
}

void write_points_xyz(const std::vector<FieldPoint>& points, const std::string& path) {
  std::string out;
  for (const FieldPoint& p : points) {
    append_g9(out, p.position.x1);
    out += ' ';
    append_g9(out, p.position.x2);
    out += ' ';
    append_g9(out, p.position.x3);
    out += ' ';
    append_g9(out, p.value);
    out += '\n';
  }
  text::write_file_atomic(path, out);
}

void write_carve_csv(const CarveResult& carve, const std::string& path) {
  std::string out = "x1,x2,x3,kept\n";
  for (std::size_t l = 0; l < carve.kept.size(); ++l) {
    const Point3 p = carve.grid.point(l);
    append_g9(out, p.x1);
    out += ',';
    append_g9(out, p.x2);
    out += ',';
    append_g9(out, p.x3);
    out += carve.kept[l] ? ",1\n" : ",0\n";
  }
  text::write_file_atomic(path, out);
}

void write_carve_pgm(const CarveResult& carve, const std::string& path) {
  const SamplingGrid& grid = carve.grid;
  if (grid.mode() != SamplingGrid::Mode::Plane) throw ValidationError("PGM export needs a plane grid");
  const std::size_t n = grid.n();
  std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t iu = 0; iu < n; ++iu) out.push_back(carve.kept[(n - 1 - r) * n + iu] ? '\xff' : '\0');
  text::write_file_atomic(path, out);
}

}  // namespace wavesrc

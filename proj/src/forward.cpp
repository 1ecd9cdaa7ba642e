#include "wavesrc/forward.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

#include "wavesrc/errors.hpp"
#include "wavesrc/parallel.hpp"
#include "wavesrc/text_io.hpp"

namespace wavesrc {
namespace {

// Retarded times are split into this many sub-step classes per time step; each
// class is convolved with lambda shifted to the class's upper edge, so no
// contribution is ever earlier than its true arrival and none is later by more
// than dt / kFractionClasses.
constexpr std::size_t kFractionClasses = 4;
constexpr std::size_t kDirectNodeLimit = 64;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwFree {
  void operator()(T* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwFree<double>>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree<fftw_complex>>;

RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

class FftPlans {
 public:
  explicit FftPlans(std::size_t n) : n_(n) {
    auto in = alloc_real(n);
    auto out = alloc_complex(n / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), out.get(), in.get(), FFTW_ESTIMATE);
  }
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  std::size_t size() const { return n_; }
  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
  void inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inverse_, in, out); }

 private:
  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

bool atomic_only(const SourceSupport& support) {
  return std::all_of(support.parts().begin(), support.parts().end(),
                     [](const SupportPart& p) { return std::holds_alternative<PointSet>(p.shape); });
}

void simulate_direct(const QuadratureSet& quad, const Signal& signal, Recording& rec) {
  const TimeGrid& grid = rec.grid;
  const double c = rec.c;
  const double dt = grid.dt();
  const double t_on = signal.onset();
  parallel_for(rec.sensor_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto row = rec.row(i);
      const Point3 x = rec.sensors[i];
      for (std::size_t q = 0; q < quad.size(); ++q) {
        const double r = distance(x, quad.nodes[q]);
        const double amp = quad.weights[q] * quad.intensities[q] / (4.0 * std::numbers::pi * r);
        const double shift = r / c;
        const double first = std::floor((shift + t_on) / dt);
        if (first >= static_cast<double>(grid.size())) continue;
        const auto k0 = static_cast<std::size_t>(std::max(0.0, first));
        for (std::size_t k = k0; k < grid.size(); ++k) row[k] += amp * signal(grid.at(k) - shift);
      }
    }
  });
}

void simulate_binned(const QuadratureSet& quad, const Signal& signal, Recording& rec) {
  const TimeGrid& grid = rec.grid;
  const std::size_t samples = grid.size();
  const double dt = grid.dt();
  const double c = rec.c;
  const double t_on = signal.onset();
  std::size_t fft_size = 1;
  while (fft_size < 2 * samples) fft_size *= 2;
  const std::size_t spectrum = fft_size / 2 + 1;
  const FftPlans plans(fft_size);

  // Spectra of lambda sampled at n dt - (m + 1) dt / M.
  std::vector<ComplexBuffer> kernels;
  {
    auto buf = alloc_real(fft_size);
    for (std::size_t m = 0; m < kFractionClasses; ++m) {
      const double lag = static_cast<double>(m + 1) * dt / static_cast<double>(kFractionClasses);
      std::fill(buf.get(), buf.get() + fft_size, 0.0);
      for (std::size_t n = 0; n < samples; ++n) buf.get()[n] = signal(grid.at(n) - lag);
      kernels.push_back(alloc_complex(spectrum));
      plans.forward(buf.get(), kernels.back().get());
    }
  }

  parallel_for(rec.sensor_count(), [&](std::size_t begin, std::size_t end) {
    auto hist = alloc_real(fft_size);
    auto hspec = alloc_complex(spectrum);
    auto acc = alloc_complex(spectrum);
    auto out = alloc_real(fft_size);
    struct Bin {
      std::size_t step;
      std::size_t cls;
      double amp;
    };
    std::vector<Bin> bins;
    bins.reserve(quad.size());
    for (std::size_t i = begin; i < end; ++i) {
      const Point3 x = rec.sensors[i];
      bins.clear();
      double earliest = std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < quad.size(); ++q) {
        const double r = distance(x, quad.nodes[q]);
        const double pos = r / c / dt;
        const double whole = std::floor(pos);
        if (whole >= static_cast<double>(samples)) continue;
        const auto cls = std::min(kFractionClasses - 1,
                                  static_cast<std::size_t>((pos - whole) * static_cast<double>(kFractionClasses)));
        const auto step = static_cast<std::size_t>(whole);
        bins.push_back({step, cls, quad.weights[q] * quad.intensities[q] / (4.0 * std::numbers::pi * r)});
        earliest = std::min(earliest, (whole + static_cast<double>(cls + 1) / kFractionClasses) * dt);
      }
      auto row = rec.row(i);
      std::fill(row.begin(), row.end(), 0.0);
      if (bins.empty()) continue;

      std::fill(reinterpret_cast<double*>(acc.get()), reinterpret_cast<double*>(acc.get()) + 2 * spectrum, 0.0);
      for (std::size_t m = 0; m < kFractionClasses; ++m) {
        std::fill(hist.get(), hist.get() + fft_size, 0.0);
        bool any = false;
        for (const Bin& b : bins) {
          if (b.cls != m) continue;
          hist.get()[b.step] += b.amp;
          any = true;
        }
        if (!any) continue;
        plans.forward(hist.get(), hspec.get());
        const fftw_complex* ker = kernels[m].get();
        for (std::size_t f = 0; f < spectrum; ++f) {
          const double re = hspec.get()[f][0] * ker[f][0] - hspec.get()[f][1] * ker[f][1];
          const double im = hspec.get()[f][0] * ker[f][1] + hspec.get()[f][1] * ker[f][0];
          acc.get()[f][0] += re;
          acc.get()[f][1] += im;
        }
      }
      plans.inverse(acc.get(), out.get());
      const double scale = 1.0 / static_cast<double>(fft_size);
      for (std::size_t k = 0; k < samples; ++k) {
        // exact zeros before the earliest representable arrival
        row[k] = (grid.at(k) - earliest < t_on) ? 0.0 : out.get()[k] * scale;
      }
    }
  });
}

void append_number(std::string& out, double v, int digits) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(text::read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

SensorArray::SensorArray(std::vector<Point3> pos, double radius) : positions(std::move(pos)), radius_hint(radius) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!is_finite(positions[i])) throw ValidationError("sensor position is not finite");
    for (std::size_t j = 0; j < i; ++j)
      if (positions[i] == positions[j])
        throw ValidationError("sensors " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
  }
  if (radius_hint == 0.0)
    for (const Point3& p : positions) radius_hint = std::max(radius_hint, norm(p));
}

Recording simulate(const SourceSupport& support, const Signal& signal, const SensorArray& sensors,
                   const TimeGrid& grid, double c, double quad_spacing, ForwardMethod method) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("sound speed must be positive");
  if (sensors.size() == 0) throw ValidationError("no sensors");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (min_distance(support, sensors[i]).distance <= 0.0)
      throw ValidationError("sensor " + std::to_string(i) + " lies on the source support");
  }
  const QuadratureSet quad = quadrature(support, quad_spacing);

  Recording rec;
  rec.grid = grid;
  rec.sensors = sensors;
  rec.c = c;
  rec.values.assign(sensors.size() * grid.size(), 0.0);

  if (method == ForwardMethod::Auto)
    method = (atomic_only(support) || quad.size() <= kDirectNodeLimit) ? ForwardMethod::Direct : ForwardMethod::Binned;
  if (method == ForwardMethod::Binned && signal.onset() < 0.0) method = ForwardMethod::Direct;

  if (method == ForwardMethod::Direct)
    simulate_direct(quad, signal, rec);
  else
    simulate_binned(quad, signal, rec);
  return rec;
}

void write_recording_csv(const Recording& rec, const std::string& path) {
  std::string out;
  out.reserve(rec.sample_count() * (rec.sensor_count() + 1) * 16 + 64);
  out += "t";
  for (std::size_t i = 0; i < rec.sensor_count(); ++i) out += ",s" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < rec.sample_count(); ++k) {
    append_number(out, rec.grid.at(k), 9);
    for (std::size_t i = 0; i < rec.sensor_count(); ++i) {
      out += ',';
      append_number(out, rec.at(i, k), 9);
    }
    out += '\n';
  }
  text::write_file_atomic(path, out);
}

void write_sensors_csv(const SensorArray& sensors, const std::string& path) {
  std::string out = "index,x1,x2,x3\n";
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    out += std::to_string(i);
    for (double v : {sensors[i].x1, sensors[i].x2, sensors[i].x3}) {
      out += ',';
      append_number(out, v, 17);
    }
    out += '\n';
  }
  text::write_file_atomic(path, out);
}

SensorArray read_sensors_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || text::trim(lines[0]) != "index,x1,x2,x3")
    throw ValidationError(path + ": expected header 'index,x1,x2,x3'");
  std::vector<Point3> pos;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto cols = text::split(lines[n], ',');
    if (cols.size() != 4) throw ValidationError(path + ":" + std::to_string(n + 1) + ": expected 4 columns");
    if (static_cast<std::size_t>(text::parse_double(cols[0])) != pos.size())
      throw ValidationError(path + ":" + std::to_string(n + 1) + ": sensor indices must be 0..N-1 in order");
    pos.push_back({text::parse_double(cols[1]), text::parse_double(cols[2]), text::parse_double(cols[3])});
  }
  if (pos.empty()) throw ValidationError(path + ": no sensors");
  return SensorArray(std::move(pos));
}

Recording read_recording_csv(const std::string& recordings_path, const std::string& sensors_path, double c,
                             double noise_level) {
  const auto lines = read_lines(recordings_path);
  SensorArray sensors = read_sensors_csv(sensors_path);
  if (lines.size() < 3) throw ValidationError(recordings_path + ": needs a header and at least two samples");
  const auto header = text::split(lines[0], ',');
  if (header.empty() || text::trim(header[0]) != "t" || header.size() != sensors.size() + 1)
    throw ValidationError(recordings_path + ": header must be t,s0,...,s" + std::to_string(sensors.size() - 1));
  const std::size_t samples = lines.size() - 1;
  std::vector<double> t(samples);
  std::vector<double> values(sensors.size() * samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const auto cols = text::split(lines[k + 1], ',');
    if (cols.size() != header.size())
      throw ValidationError(recordings_path + ":" + std::to_string(k + 2) + ": wrong column count");
    t[k] = text::parse_double(cols[0]);
    for (std::size_t i = 0; i < sensors.size(); ++i) values[i * samples + k] = text::parse_double(cols[i + 1]);
  }
  if (t[0] != 0.0) throw ValidationError(recordings_path + ": time column must start at 0");
  Recording rec;
  rec.grid = TimeGrid(t.back(), samples - 1);
  for (std::size_t k = 0; k < samples; ++k)
    if (std::abs(t[k] - rec.grid.at(k)) > 1e-6 * std::max(1.0, rec.grid.terminal()))
      throw ValidationError(recordings_path + ": time column is not uniform");
  rec.sensors = std::move(sensors);
  rec.values = std::move(values);
  rec.c = c;
  rec.noise_level = noise_level;
  return rec;
}

}  // namespace wavesrc

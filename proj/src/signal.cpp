#include "wavesrc/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "wavesrc/errors.hpp"
#include "wavesrc/text_io.hpp"

namespace wavesrc {
namespace {

constexpr double kActivityWindow = 0.1;
constexpr double kActivityStep = 1e-4;
constexpr double kTableZero = 1e-12;

double interpolate(const SampleTable& tab, double t) {
  if (t < tab.t.front() || t > tab.t.back()) return 0.0;
  const auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
  if (it == tab.t.end()) return tab.value.back();
  const auto j = static_cast<std::size_t>(it - tab.t.begin());
  if (j == 0) return tab.value.front();
  const double t0 = tab.t[j - 1];
  const double t1 = tab.t[j];
  const double a = (t - t0) / (t1 - t0);
  return (1.0 - a) * tab.value[j - 1] + a * tab.value[j];
}

}  // namespace

Signal::Signal(Kind kind, double onset) : kind_(std::move(kind)), onset_(onset) { check_activity(); }

Signal Signal::windowed_sine() { return Signal(WindowedSine{}, 0.0); }

Signal Signal::gaussian_modulated(double onset, double center, double width, double carrier) {
  if (!(width > 0.0) || !std::isfinite(width)) throw ValidationError("gaussian width must be positive");
  if (!std::isfinite(onset) || !std::isfinite(center) || !std::isfinite(carrier))
    throw ValidationError("gaussian parameters must be finite");
  return Signal(GaussianModulated{onset, center, width, carrier}, onset);
}

Signal Signal::custom(std::vector<double> t, std::vector<double> value) {
  if (t.size() != value.size()) throw ValidationError("signal table columns differ in length");
  if (t.size() < 2) throw ValidationError("signal table needs at least two rows");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(value[i])) throw ValidationError("signal table has non-finite entries");
    if (i > 0 && !(t[i] > t[i - 1])) throw ValidationError("signal table times must be strictly increasing");
  }
  std::size_t first = 0;
  while (first < value.size() && std::abs(value[first]) <= kTableZero) ++first;
  if (first == value.size()) throw ValidationError("signal table is identically zero");
  // The interpolant becomes nonzero right after the preceding (zero) sample.
  const double onset = first == 0 ? t[0] : t[first - 1];
  return Signal(SampleTable{std::move(t), std::move(value)}, onset);
}

Signal Signal::from_csv(const std::string& path) {
  std::istringstream in(text::read_file(path));
  std::vector<double> t;
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = text::trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (t.empty() && lineno == 1 && (std::isalpha(static_cast<unsigned char>(s[0])) != 0)) continue;
    const auto cols = text::split(s, ',');
    if (cols.size() != 2) throw ValidationError(path + ":" + std::to_string(lineno) + ": expected two columns");
    try {
      t.push_back(text::parse_double(cols[0]));
      v.push_back(text::parse_double(cols[1]));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return custom(std::move(t), std::move(v));
}

double Signal::operator()(double t) const {
  if (t < onset_) return 0.0;
  return std::visit(
      [t](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, WindowedSine>) {
          return std::exp(-0.01 * (t - 3.0) * (t - 3.0)) * std::sin(t);
        } else if constexpr (std::is_same_v<T, GaussianModulated>) {
          const double x = (t - k.center) / k.width;
          return std::sin(k.carrier * (t - k.onset)) * std::exp(-0.5 * x * x);
        } else {
          return interpolate(k, t);
        }
      },
      kind_);
}

void Signal::check_activity() const {
  const auto steps = static_cast<int>(std::lround(kActivityWindow / kActivityStep));
  for (int i = 1; i <= steps; ++i) {
    if (std::abs((*this)(onset_ + i * kActivityStep)) > 0.0) return;
  }
  throw ValidationError("signal is not active right after its onset");
}

TimeGrid::TimeGrid(double terminal, std::size_t steps) : terminal_(terminal), steps_(steps) {
  if (!(terminal > 0.0) || !std::isfinite(terminal)) throw ValidationError("terminal time must be positive");
  if (steps < 1) throw ValidationError("time grid needs at least one step");
}

}  // namespace wavesrc

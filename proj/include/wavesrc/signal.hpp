#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace wavesrc {

// lambda(t) = exp(-0.01 (t-3)^2) sin t for t >= 0, else 0.
struct WindowedSine {};

// sin(carrier (t - onset)) * exp(-(t - center)^2 / (2 width^2)) for t >= onset.
struct GaussianModulated {
  double onset = 0.0;
  double center = 3.0;
  double width = 1.0;
  double carrier = 1.0;
};

// Linear interpolation of a sample table, zero outside [onset, t.back()].
struct SampleTable {
  std::vector<double> t;
  std::vector<double> value;
};

// Causal excitation signal. Construction verifies causality around the onset:
// |lambda| must become nonzero somewhere in (onset, onset + 0.1].
class Signal {
 public:
  using Kind = std::variant<WindowedSine, GaussianModulated, SampleTable>;

  static Signal windowed_sine();
  static Signal gaussian_modulated(double onset, double center, double width, double carrier);
  static Signal custom(std::vector<double> t, std::vector<double> value);
  // Two columns "t,value"; a non-numeric first line is treated as a header.
  static Signal from_csv(const std::string& path);

  double operator()(double t) const;
  double onset() const { return onset_; }
  const Kind& kind() const { return kind_; }

 private:
  Signal(Kind kind, double onset);
  void check_activity() const;

  Kind kind_;
  double onset_ = 0.0;
};

inline double evaluate(const Signal& s, double t) { return s(t); }
inline double onset(const Signal& s) { return s.onset(); }

// t_k = k T / N_T for k = 0..N_T.
class TimeGrid {
 public:
  TimeGrid(double terminal, std::size_t steps);

  double terminal() const { return terminal_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double dt() const { return terminal_ / static_cast<double>(steps_); }
  double at(std::size_t k) const { return static_cast<double>(k) * terminal_ / static_cast<double>(steps_); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double terminal_;
  std::size_t steps_;
};

}  // namespace wavesrc

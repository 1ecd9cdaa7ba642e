#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavesrc/arrays.hpp"
#include "wavesrc/errors.hpp"
#include "wavesrc/forward.hpp"
#include "wavesrc/geometry.hpp"
#include "wavesrc/measurement.hpp"
#include "wavesrc/reconstruct.hpp"
#include "wavesrc/signal.hpp"

namespace wavesrc {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kScenarioSchema = 1;

// Raised for malformed or inconsistent scenario files; message carries
// "<origin>:<line>: " context where a line is known.
class ScenarioError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Flat view of a scenario file. Keys are "section.key" (top-level keys have no
// section). Indexed sections "[source.1]" keep their index; a bare "[source]"
// or "[array]" is stored as index 0.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;           // 0 for overrides and applied defaults
    bool defaulted = false;
  };

  // A trailing "# default" comment marks the entry as an applied default.
  static Config parse(std::string_view text, std::string origin);

  // "noise.epsilon=0" style; the key is normalised like a section header.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, std::string value, int line = 0, bool defaulted = false);

  const Entry* find(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

  // Section-grouped text that parses back to the same entries.
  std::string serialize() const;

  // Error prefixed with "origin:line: key: ".
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  static std::string normalize_key(std::string_view key);

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

struct ScenarioOutputs {
  bool field = true;
  bool carve = false;
  bool peaks = false;
  bool points = false;
};

struct Scenario {
  Config config;  // every parameter, defaults filled in and flagged
  std::string name;
  std::uint64_t seed = 1;

  SourceSupport support{PointSet{{PointSource{}}}};
  Signal signal = Signal::windowed_sine();
  ArraySpec arrays;
  TimeGrid time{15.0, 32768};
  double c = 1.0;

  double quad_spacing = kDefaultQuadSpacing2D;
  double epsilon = 0.05;
  double eta = kDefaultEta;
  double bias_correction = 0.0;
  bool oracle_arrivals = false;

  SamplingGrid grid = SamplingGrid::plane(PlaneFrame::x1x2(), {-1.0, -1.0}, {1.0, 1.0}, 2);
  Kernel kernel = Kernel::Abs;
  double cap = kDefaultCap;
  double margin = kDefaultCarveMargin;
  bool log_scale = false;
  ThresholdRule threshold;
  std::size_t peak_count = 2;
  double peak_separation = 0.5;
  PeakRanking peak_ranking = PeakRanking::Value;
  ScenarioOutputs outputs;

  std::vector<std::string> assumed;   // keys whose values are not given by the source experiment
  std::vector<std::string> warnings;  // non-fatal validation findings

  bool has_support = true;
  bool has_arrays = true;
};

// With require_geometry = false, [source] and [array] sections are optional;
// stage commands that read recordings from disk use this.
Scenario build_scenario(Config config, bool require_geometry = true);
Scenario parse_scenario(std::string_view text, const std::string& origin,
                        const std::vector<std::string>& overrides = {}, bool require_geometry = true);
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {},
                       bool require_geometry = true);
std::string serialize(const Scenario& scenario);

std::uint64_t fnv1a64(std::string_view data);
// Stage sub-seed: splitmix64 of the run seed mixed with the stage name hash.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

struct RunOptions {
  std::string out_dir;           // empty: nothing written
  bool write_recordings = true;
  bool pick = true;              // false stops after the forward simulation
  bool reconstruct = true;       // false stops after arrival picking
  std::vector<std::string> extra_manifest_warnings;
};

struct RunResult {
  Recording recording;
  ArrivalSet arrivals;
  std::optional<IndicatorField> field;
  std::optional<CarveResult> carve;
  std::vector<FieldPoint> peaks;
  std::vector<FieldPoint> points;
  std::vector<std::string> files;  // relative to out_dir
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
};

// simulate -> add_noise -> detect_arrivals -> requested reconstructions.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

struct ManifestInfo {
  std::string command = "run";
  std::vector<std::string> inputs;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> derived;
};

// Writes scenario.scn (resolved parameters) and manifest.json into out_dir.
void write_manifest(const std::string& out_dir, const Scenario& scenario, const ManifestInfo& info);

// Counts usable sensors whose carving ball, shrunk by the margin, still
// reaches past the true support distance.
std::size_t intruding_sensors(const SourceSupport& support, const SensorArray& sensors, const ArrivalSet& arrivals,
                              const CarveResult& carve, double margin);
std::string intrusion_warning(std::size_t count);

}  // namespace wavesrc

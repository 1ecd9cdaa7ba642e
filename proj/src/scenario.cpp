#include "wavesrc/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wavesrc/parallel.hpp"
#include "wavesrc/text_io.hpp"

namespace wavesrc {
namespace {

namespace fs = std::filesystem;

bool is_index(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
}

std::string normalize_section(std::string_view name) {
  std::string s = text::trim(name);
  for (const char* indexed : {"source", "array"}) {
    if (s == indexed) return s + ".0";
  }
  return s;
}

// ------------------------------------------------------------------ reader

// Typed access to a Config that records applied defaults and flags keys that
// were never consumed.
class Reader {
 public:
  explicit Reader(Config& cfg) : cfg_(cfg) {}

  bool has(const std::string& key) const { return cfg_.has(key); }

  std::string str(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    if (const auto* e = cfg_.find(key)) return e->value;
    cfg_.set(key, fallback, 0, true);
    return fallback;
  }
  std::string str(const std::string& key) {
    used_.insert(key);
    if (const auto* e = cfg_.find(key)) return e->value;
    cfg_.fail(key, "missing required key");
  }
  double num(const std::string& key, double fallback) {
    if (!has(key)) str(key, text::format_double(fallback));
    return num(key);
  }
  double num(const std::string& key) {
    const std::string v = str(key);
    try {
      const double d = text::parse_double(v);
      if (!std::isfinite(d)) cfg_.fail(key, "value must be finite");
      return d;
    } catch (const ScenarioError&) {
      throw;
    } catch (const ValidationError& e) {
      cfg_.fail(key, e.what());
    }
  }
  double positive(const std::string& key, double fallback) {
    const double v = num(key, fallback);
    if (!(v > 0.0)) cfg_.fail(key, "must be > 0");
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    const double v = num(key, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v) || v > 1e9) cfg_.fail(key, "must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  std::size_t count(const std::string& key) {
    const double v = num(key);
    if (v < 0 || v != std::floor(v) || v > 1e9) cfg_.fail(key, "must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  bool flag(const std::string& key, bool fallback) {
    const std::string v = str(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    cfg_.fail(key, "expected true or false");
  }
  std::vector<double> numbers(const std::string& key, std::size_t n) {
    return numbers_from(key, str(key), n);
  }
  std::vector<double> numbers(const std::string& key, std::size_t n, const std::string& fallback) {
    return numbers_from(key, str(key, fallback), n);
  }
  Point3 point(const std::string& key) {
    const auto v = numbers(key, 3);
    return {v[0], v[1], v[2]};
  }
  Point3 point(const std::string& key, const std::string& fallback) {
    const auto v = numbers(key, 3, fallback);
    return {v[0], v[1], v[2]};
  }
  // "a b c; d e f" tuples of `width` numbers; `alt` > 0 also accepts tuples of that size.
  std::vector<std::vector<double>> tuples(const std::string& key, std::size_t width, std::size_t alt = 0) {
    std::vector<std::vector<double>> out;
    for (const std::string& part : text::split(str(key), ';')) {
      if (text::trim(part).empty()) continue;
      auto v = numbers_from(key, part, 0);
      if (v.size() != width && (alt == 0 || v.size() != alt))
        cfg_.fail(key, "each ';'-separated entry needs " + std::to_string(width) + " numbers");
      out.push_back(std::move(v));
    }
    if (out.empty()) cfg_.fail(key, "needs at least one entry");
    return out;
  }
  std::string choice(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const std::string v = fallback.empty() ? str(key) : str(key, fallback);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    cfg_.fail(key, "expected one of: " + list);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { cfg_.fail(key, msg); }

  void reject_unused() const {
    for (const auto& [key, entry] : cfg_.entries()) {
      if (used_.count(key) || key.rfind("expect.", 0) == 0 || key == "description") continue;
      cfg_.fail(key, "unknown key");
    }
  }

 private:
  std::vector<double> numbers_from(const std::string& key, const std::string& text, std::size_t n) {
    std::vector<double> v;
    try {
      v = text::parse_numbers(text);
    } catch (const ValidationError& e) {
      cfg_.fail(key, e.what());
    }
    if (n > 0 && v.size() != n) cfg_.fail(key, "expected " + std::to_string(n) + " numbers");
    return v;
  }

  Config& cfg_;
  std::set<std::string> used_;
};

std::vector<std::string> indexed_sections(const Config& cfg, const std::string& prefix) {
  std::set<std::size_t> idx;
  for (const auto& [key, e] : cfg.entries()) {
    if (key.rfind(prefix + ".", 0) != 0) continue;
    const auto rest = key.substr(prefix.size() + 1);
    const auto dot = rest.find('.');
    if (dot == std::string::npos || !is_index(rest.substr(0, dot))) continue;
    idx.insert(std::stoul(rest.substr(0, dot)));
  }
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(prefix + "." + std::to_string(i));
  return out;
}

PlaneFrame read_frame(Reader& r, const std::string& s) {
  const Point3 origin = r.point(s + ".origin", "0 0 0");
  const Point3 u = r.point(s + ".u", "1 0 0");
  const Point3 v = r.point(s + ".v", "0 1 0");
  try {
    return PlaneFrame::from_directions(origin, u, v);
  } catch (const ValidationError& e) {
    r.fail(s + ".u", e.what());
  }
}

SupportPart read_source(Reader& r, const std::string& s, const fs::path& base_dir) {
  (void)base_dir;
  const std::string kind =
      r.choice(s + ".kind", "", {"points", "segment", "line", "curve", "polygon", "region", "polyhedron"});
  const double tau = r.positive(s + ".intensity", 1.0);
  try {
    if (kind == "points") {
      PointSet ps;
      for (const auto& t : r.tuples(s + ".points", 4, 3))
        ps.sources.push_back({{t[0], t[1], t[2]}, t.size() == 4 ? t[3] : tau});
      return {std::move(ps), tau};
    }
    if (kind == "segment") return {Segment{r.point(s + ".a"), r.point(s + ".b")}, tau};
    if (kind == "line") {
      const Point3 o = r.point(s + ".origin");
      const Point3 d = r.point(s + ".direction");
      const auto range = r.numbers(s + ".range", 2);
      return {Segment{o + range[0] * d, o + range[1] * d}, tau};
    }
    if (kind == "curve") {
      const std::string family = r.choice(s + ".family", "", {"parabola", "helix", "circle"});
      const double spacing = r.positive(s + ".spacing", 0.01);
      ParamCurve::Fn fn;
      std::vector<double> range;
      if (family == "parabola") {
        const double a = r.num(s + ".scale", 1.0);
        const double b = r.num(s + ".offset", -1.0);
        range = r.numbers(s + ".range", 2);
        fn = [a, b](double z) { return Point3{z, a * z * z + b, 0.0}; };
      } else if (family == "helix") {
        const double radius = r.positive(s + ".radius", 1.0);
        const double pitch = r.num(s + ".pitch", 1.0);
        range = r.numbers(s + ".range", 2, "0 " + text::format_double(2.0 * std::numbers::pi));
        fn = [radius, pitch](double z) {
          return Point3{radius * std::cos(z), radius * std::sin(z), pitch * z / (2.0 * std::numbers::pi)};
        };
      } else {
        const PlaneFrame f = read_frame(r, s);
        const double radius = r.positive(s + ".radius", 1.0);
        range = r.numbers(s + ".range", 2, "0 " + text::format_double(2.0 * std::numbers::pi));
        fn = [f, radius](double z) { return f.to_world({radius * std::cos(z), radius * std::sin(z)}); };
      }
      return {ParamCurve::with_spacing(fn, range[0], range[1], spacing), tau};
    }
    if (kind == "polygon") {
      std::vector<Point3> v;
      for (const auto& t : r.tuples(s + ".vertices", 3, 2)) v.push_back({t[0], t[1], t.size() == 3 ? t[2] : 0.0});
      return {PlanarPolygon(std::move(v)), tau};
    }
    if (kind == "region") {
      const std::string family = r.choice(s + ".family", "", {"disk", "egg", "star"});
      const PlaneFrame f = read_frame(r, s);
      const auto c = r.numbers(s + ".center", 2, "0 0");
      const double scale = r.positive(s + ".scale", 1.0);
      const double spacing = r.positive(s + ".spacing", 0.01);
      std::function<double(double)> radius;
      if (family == "disk") {
        const double rad = r.positive(s + ".radius", 1.0);
        radius = [rad](double) { return rad; };
      } else if (family == "egg") {
        radius = [](double z) { return (1.0 + 0.6 * std::cos(z)) / (1.0 + 0.8 * std::cos(z)); };
      } else {
        radius = [](double z) { return 0.6 * std::sqrt(17.0 / (4.0 + 2.0 * std::cos(3.0 * z))); };
      }
      auto boundary = [=](double z) {
        const double rr = scale * radius(z);
        return Vec2{c[0] + rr * std::cos(z), c[1] + rr * std::sin(z)};
      };
      return {PlanarRegion::from_curve(f, boundary, 0.0, 2.0 * std::numbers::pi, spacing), tau};
    }
    std::vector<Point3> v;
    for (const auto& t : r.tuples(s + ".vertices", 3)) v.push_back({t[0], t[1], t[2]});
    return {ConvexPolyhedron(std::move(v)), tau};
  } catch (const ScenarioError&) {
    throw;
  } catch (const ValidationError& e) {
    r.fail(s + ".kind", e.what());
  }
}

ArrayComponent read_array(Reader& r, const std::string& s) {
  const std::string kind = r.choice(s + ".kind", "", {"circle", "fibonacci", "line"});
  if (kind == "circle") {
    CircleArray a;
    a.radius = r.positive(s + ".radius", 1.0);
    a.count = r.count(s + ".count");
    a.half_circle = r.flag(s + ".half_circle", false);
    const Point3 center = r.point(s + ".center", "0 0 0");
    PlaneFrame f = PlaneFrame::x1x2();
    try {
      f = PlaneFrame::from_directions(center, r.point(s + ".u", "1 0 0"), r.point(s + ".v", "0 1 0"));
    } catch (const ValidationError& e) {
      r.fail(s + ".u", e.what());
    }
    a.frame = f;
    if (a.count < 1) r.fail(s + ".count", "must be >= 1");
    return a;
  }
  if (kind == "fibonacci") {
    FibonacciSphereArray a;
    a.radius = r.positive(s + ".radius", 1.0);
    a.count = r.count(s + ".count");
    a.center = r.point(s + ".center", "0 0 0");
    if (a.count < 2) r.fail(s + ".count", "fibonacci sphere needs at least 2 sensors");
    return a;
  }
  LineArray a;
  a.start = r.point(s + ".start");
  a.step = r.point(s + ".step");
  a.count = r.count(s + ".count");
  if (a.count < 1) r.fail(s + ".count", "must be >= 1");
  return a;
}

// Points that bound the support's extent for containment checks.
std::vector<Point3> outline(const SourceSupport& support) {
  std::vector<Point3> pts;
  for (const SupportPart& part : support.parts()) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, PointSet>) {
            for (const auto& p : s.sources) pts.push_back(p.position);
          } else if constexpr (std::is_same_v<T, Segment>) {
            pts.push_back(s.a);
            pts.push_back(s.b);
          } else if constexpr (std::is_same_v<T, ParamCurve>) {
            pts.insert(pts.end(), s.samples().begin(), s.samples().end());
          } else if constexpr (std::is_same_v<T, PlanarPolygon> || std::is_same_v<T, ConvexPolyhedron>) {
            pts.insert(pts.end(), s.vertices().begin(), s.vertices().end());
          } else {
            for (const Vec2& b : s.boundary()) pts.push_back(s.frame().to_world(b));
          }
        },
        part.shape);
  }
  return pts;
}

std::vector<Point3> probe_directions() {
  std::vector<Point3> dirs;
  const std::size_t n = 400;
  const double beta = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double rho = std::sqrt(1.0 - y * y);
    dirs.push_back({rho * std::cos(beta * static_cast<double>(i)), y, rho * std::sin(beta * static_cast<double>(i))});
  }
  for (const Point3& a : {Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{0, 0, 1}}) {
    dirs.push_back(a);
    dirs.push_back(-1.0 * a);
  }
  return dirs;
}

// Every probe direction must have some sensor strictly ahead of p, measured in
// the plane of the sensors when they are coplanar.
bool enclosed_by(const SensorArray& sensors, Point3 p, const std::vector<Point3>& dirs) {
  for (const Point3& u : dirs) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Point3& x : sensors.positions) best = std::max(best, dot(x - p, u));
    if (best < -1e-9) return false;
    if (best <= 1e-9) {
      // degenerate direction: only acceptable when it is normal to a coplanar array
      double spread = 0.0;
      for (const Point3& x : sensors.positions) spread = std::max(spread, std::abs(dot(x - p, u)));
      if (spread > 1e-9) return false;
    }
  }
  return true;
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string kernel_name(Kernel k) { return k == Kernel::Abs ? "abs" : "sqrt"; }

}  // namespace

// ------------------------------------------------------------------- Config

std::string Config::normalize_key(std::string_view key) {
  std::string k = text::trim(key);
  const auto dot = k.find('.');
  if (dot == std::string::npos) return k;
  const std::string head = k.substr(0, dot);
  const std::string rest = k.substr(dot + 1);
  if (head == "source" || head == "array") {
    const auto d2 = rest.find('.');
    if (d2 == std::string::npos || !is_index(rest.substr(0, d2))) return head + ".0." + rest;
  }
  return k;
}

Config Config::parse(std::string_view text, std::string origin) {
  Config cfg;
  cfg.origin_ = std::move(origin);
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    std::string comment;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      comment = text::trim(line.substr(hash + 1));
      line = line.substr(0, hash);
    }
    line = text::trim(line);
    if (line.empty()) continue;
    auto err = [&](const std::string& msg) {
      throw ScenarioError(cfg.origin_ + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (line.front() == '[') {
      if (line.back() != ']') err("unterminated section header");
      section = normalize_section(line.substr(1, line.size() - 2));
      if (section.empty()) err("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) err("expected 'key = value'");
    const std::string key = text::trim(line.substr(0, eq));
    if (key.empty() || key.find('.') != std::string::npos) err("invalid key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full)) err("duplicate key '" + full + "'");
    cfg.entries_[full] = {text::trim(line.substr(eq + 1)), lineno, comment == "default"};
  }
  return cfg;
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ScenarioError("override must look like key=value: " + std::string(assignment));
  const std::string key = normalize_key(assignment.substr(0, eq));
  if (key.empty()) throw ScenarioError("override has an empty key");
  entries_[key] = {text::trim(assignment.substr(eq + 1)), 0, false};
}

void Config::set(const std::string& key, std::string value, int line, bool defaulted) {
  entries_[normalize_key(key)] = {std::move(value), line, defaulted};
}

const Config::Entry* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Config::serialize() const {
  std::map<std::string, std::vector<std::pair<std::string, const Entry*>>> sections;
  for (const auto& [key, e] : entries_) {
    const auto dot = key.rfind('.');
    if (dot == std::string::npos)
      sections[""].push_back({key, &e});
    else
      sections[key.substr(0, dot)].push_back({key.substr(dot + 1), &e});
  }
  std::string out;
  for (const auto& [name, items] : sections) {
    if (!name.empty()) out += "\n[" + name + "]\n";
    for (const auto& [k, e] : items) {
      out += k + " = " + e->value;
      if (e->defaulted) out += "  # default";
      out += '\n';
    }
  }
  return out;
}

void Config::fail(const std::string& key, const std::string& message) const {
  const Entry* e = find(key);
  std::string where = origin_;
  if (e && e->line > 0) where += ":" + std::to_string(e->line);
  throw ScenarioError(where + ": " + key + ": " + message);
}

// ------------------------------------------------------------------ building

Scenario build_scenario(Config config, bool require_geometry) {
  Scenario sc;
  Reader r(config);

  const auto schema = r.count("schema", static_cast<std::size_t>(kScenarioSchema));
  if (schema != static_cast<std::size_t>(kScenarioSchema))
    r.fail("schema", "unsupported schema version " + std::to_string(schema));
  sc.name = r.str("name", fs::path(config.origin()).stem().string());
  {
    const double seed = r.num("seed", 1.0);
    if (seed < 0 || seed != std::floor(seed) || seed >= 18446744073709551616.0)
      r.fail("seed", "must be a non-negative 64-bit integer");
    const std::string text = r.str("seed");
    sc.seed = std::stoull(text.find_first_of(".eE") == std::string::npos ? text : std::to_string(static_cast<unsigned long long>(seed)));
  }
  if (r.has("assumed")) {
    for (const std::string& k : text::split(r.str("assumed"), ' ')) {
      const std::string key = Config::normalize_key(text::trim(k));
      if (key.empty()) continue;
      sc.assumed.push_back(key);
    }
  }

  sc.c = r.positive("medium.c", 1.0);

  const std::string sig = r.choice("signal.kind", "windowed_sine", {"windowed_sine", "gaussian", "custom"});
  try {
    if (sig == "gaussian") {
      sc.signal = Signal::gaussian_modulated(r.num("signal.onset", 0.0), r.num("signal.center", 3.0),
                                             r.positive("signal.width", 1.0), r.num("signal.carrier", 1.0));
    } else if (sig == "custom") {
      fs::path p = r.str("signal.file");
      if (p.is_relative()) p = fs::path(config.origin()).parent_path() / p;
      sc.signal = Signal::from_csv(p.string());
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const ValidationError& e) {
    r.fail("signal.kind", e.what());
  }

  {
    const double T = r.positive("time.T", 15.0);
    const std::size_t steps = r.count("time.steps", 32768);
    if (steps < 1) r.fail("time.steps", "must be >= 1");
    sc.time = TimeGrid(T, steps);
  }

  const fs::path base_dir = fs::path(config.origin()).parent_path();
  std::vector<SupportPart> parts;
  const auto source_sections = indexed_sections(config, "source");
  if (source_sections.empty() && require_geometry) throw ScenarioError(config.origin() + ": no [source] section");
  sc.has_support = !source_sections.empty();
  for (const std::string& s : source_sections) parts.push_back(read_source(r, s, base_dir));
  if (sc.has_support) {
    try {
      sc.support = SourceSupport(std::move(parts));
    } catch (const ValidationError& e) {
      r.fail(source_sections.front() + ".kind", e.what());
    }
  }

  const auto array_sections = indexed_sections(config, "array");
  if (array_sections.empty() && require_geometry) throw ScenarioError(config.origin() + ": no [array] section");
  sc.has_arrays = !array_sections.empty();
  sc.arrays = ArraySpec{};
  for (const std::string& s : array_sections) sc.arrays.components.push_back(read_array(r, s));

  const std::string mode = r.choice("grid.mode", "plane", {"plane", "box"});
  try {
    if (mode == "plane") {
      const PlaneFrame f = read_frame(r, "grid");
      const auto lo = r.numbers("grid.min", 2, "-2 -2");
      const auto hi = r.numbers("grid.max", 2, "2 2");
      sc.grid = SamplingGrid::plane(f, {lo[0], lo[1]}, {hi[0], hi[1]}, r.count("grid.n", 200));
    } else {
      const auto lo = r.numbers("grid.min", 3, "-4 -4 -4");
      const auto hi = r.numbers("grid.max", 3, "4 4 4");
      sc.grid = SamplingGrid::box({lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}, r.count("grid.n", 200));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const ValidationError& e) {
    r.fail("grid.n", e.what());
  }

  sc.quad_spacing =
      r.positive("forward.quad_spacing", mode == "plane" ? kDefaultQuadSpacing2D : kDefaultQuadSpacing3D);
  sc.epsilon = r.num("noise.epsilon", 0.05);
  if (sc.epsilon < 0.0) r.fail("noise.epsilon", "must be >= 0");

  sc.eta = r.num("detect.eta", kDefaultEta);
  if (!(sc.eta > 0.0 && sc.eta < 1.0)) r.fail("detect.eta", "must lie in (0, 1)");
  sc.bias_correction = r.num("detect.bias_correction", 0.0);
  sc.oracle_arrivals = r.choice("detect.mode", "detected", {"detected", "oracle"}) == "oracle";

  sc.kernel = r.choice("reconstruct.kernel", "abs", {"abs", "sqrt"}) == "abs" ? Kernel::Abs : Kernel::Sqrt;
  sc.cap = r.positive("reconstruct.cap", kDefaultCap);
  sc.margin = r.num("reconstruct.margin", kDefaultCarveMargin);
  if (sc.margin < 0.0) r.fail("reconstruct.margin", "must be >= 0");
  sc.log_scale = r.flag("reconstruct.log_scale", false);
  try {
    sc.threshold = ThresholdRule::parse(r.str("reconstruct.threshold", "quantile:0.999"));
  } catch (const ValidationError& e) {
    r.fail("reconstruct.threshold", e.what());
  }
  sc.peak_count = r.count("reconstruct.peaks", 2);
  if (sc.peak_count < 1) r.fail("reconstruct.peaks", "must be >= 1");
  sc.peak_separation = r.positive("reconstruct.peak_separation", 0.5);
  sc.peak_ranking = r.choice("reconstruct.peak_ranking", "value", {"value", "median"}) == "median"
                        ? PeakRanking::NeighborhoodMedian
                        : PeakRanking::Value;
  sc.outputs = ScenarioOutputs{false, false, false, false};
  for (const std::string& o : text::split(r.str("reconstruct.outputs", "field"), ',')) {
    const std::string t = text::trim(o);
    if (t == "field") sc.outputs.field = true;
    else if (t == "carve") sc.outputs.carve = true;
    else if (t == "peaks") sc.outputs.peaks = true;
    else if (t == "points") sc.outputs.points = true;
    else if (!t.empty()) r.fail("reconstruct.outputs", "unknown output '" + t + "'");
  }

  r.reject_unused();
  for (const std::string& k : sc.assumed)
    if (!config.has(k)) r.fail("assumed", "names unknown key '" + k + "'");

  sc.config = std::move(config);
  if (!sc.has_support || !sc.has_arrays) return sc;
  const Config& cfg = sc.config;
  auto fail = [&cfg](const std::string& key, const std::string& msg) { cfg.fail(key, msg); };

  // geometric consistency
  SensorArray sensors;
  try {
    sensors = generate(sc.arrays);
  } catch (const ValidationError& e) {
    fail(array_sections.front() + ".kind", e.what());
  }
  const auto pts = outline(sc.support);
  const double tol = 1e-6;
  const auto& lo = sc.grid.lo();
  const auto& hi = sc.grid.hi();
  for (const Point3& p : pts) {
    bool inside = true;
    if (sc.grid.mode() == SamplingGrid::Mode::Plane) {
      const Vec2 q = sc.grid.frame().to_local(p);
      inside = std::abs(sc.grid.frame().height(p)) <= tol && q.u >= lo[0] - tol && q.u <= hi[0] + tol &&
               q.v >= lo[1] - tol && q.v <= hi[1] + tol;
    } else {
      inside = p.x1 >= lo[0] - tol && p.x1 <= hi[0] + tol && p.x2 >= lo[1] - tol && p.x2 <= hi[1] + tol &&
               p.x3 >= lo[2] - tol && p.x3 <= hi[2] + tol;
    }
    if (!inside) fail(source_sections.front() + ".kind", "support lies outside the sampling grid");
  }
  const auto dirs = probe_directions();
  for (const Point3& p : pts)
    if (!enclosed_by(sensors, p, dirs))
      fail(array_sections.front() + ".kind", "support is not enclosed by the sensor array");
  std::size_t outside = 0;
  for (const Point3& corner : sc.grid.corners())
    if (!enclosed_by(sensors, corner, dirs)) ++outside;
  if (outside > 0)
    sc.warnings.push_back("sampling grid extends beyond the sensor hull at " + std::to_string(outside) + " corner(s)");

  return sc;
}

Scenario parse_scenario(std::string_view text, const std::string& origin, const std::vector<std::string>& overrides,
                        bool require_geometry) {
  Config cfg = Config::parse(text, origin);
  for (const std::string& o : overrides) cfg.apply_override(o);
  return build_scenario(std::move(cfg), require_geometry);
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides, bool require_geometry) {
  return parse_scenario(text::read_file(path), path, overrides, require_geometry);
}

std::string serialize(const Scenario& scenario) { return scenario.config.serialize(); }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t z = seed ^ fnv1a64(stage);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ----------------------------------------------------------------------- run

std::size_t intruding_sensors(const SourceSupport& support, const SensorArray& sensors, const ArrivalSet& arrivals,
                              const CarveResult& carve, double margin) {
  std::size_t count = 0;
  for (std::size_t i = 0, u = 0; i < sensors.size() && u < carve.radii.size(); ++i) {
    if (!arrivals.arrivals[i]) continue;
    const double exact = min_distance(support, sensors[i]).distance;
    if (carve.radii[u++] - margin > exact + 1e-12) ++count;
  }
  return count;
}

std::string intrusion_warning(std::size_t count) {
  return std::to_string(count) +
         " sensor(s) have arrivals implying R_x - margin beyond the true support distance; the carved set may "
         "erode the support";
}

void write_manifest(const std::string& out_dir, const Scenario& sc, const ManifestInfo& info) {
  const fs::path out = out_dir;
  fs::create_directories(out);
  const std::string resolved = serialize(sc);
  text::write_file_atomic((out / "scenario.scn").string(),
                          "# resolved parameters; rerun with: wavesrc run --scenario scenario.scn\n" + resolved);

  nlohmann::ordered_json m;
  m["tool"] = "wavesrc";
  m["version"] = kToolVersion;
  m["command"] = info.command;
  m["scenario"] = sc.name;
  m["scenario_source"] = sc.config.origin();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved)));
  m["scenario_hash"] = std::string("fnv1a64:") + hash;
  m["seed"] = sc.seed;
  m["sub_seeds"] = {{"noise", derive_seed(sc.seed, "noise")}};
  m["threads"] = thread_count();
  if (!info.inputs.empty()) m["inputs"] = info.inputs;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [key, e] : sc.config.entries()) {
    nlohmann::ordered_json p = {{"value", e.value}, {"default", e.defaulted}};
    if (std::find(sc.assumed.begin(), sc.assumed.end(), key) != sc.assumed.end()) p["assumed"] = true;
    params[key] = p;
  }
  m["parameters"] = params;
  nlohmann::ordered_json derived = nlohmann::ordered_json::object();
  for (const auto& [k, v] : info.derived) derived[k] = v;
  m["derived"] = derived;
  auto files = info.files;
  files.push_back("scenario.scn");
  files.push_back("manifest.json");
  m["outputs"] = files;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (const auto& [stage, secs] : info.timings) timings[stage] = secs;
  m["timings_seconds"] = timings;
  m["warnings"] = info.warnings;
  text::write_file_atomic((out / "manifest.json").string(), m.dump(2) + "\n");
}

RunResult run(const Scenario& sc, const RunOptions& options) {
  if (!sc.has_support || !sc.has_arrays)
    throw ScenarioError(sc.config.origin() + ": a full run needs [source] and [array] sections");
  RunResult res;
  res.warnings = sc.warnings;
  res.warnings.insert(res.warnings.end(), options.extra_manifest_warnings.begin(),
                      options.extra_manifest_warnings.end());
  const bool to_disk = !options.out_dir.empty();
  const fs::path out = options.out_dir;
  if (to_disk) fs::create_directories(out);
  auto path = [&](const std::string& name) {
    res.files.push_back(name);
    return (out / name).string();
  };
  auto stage_error = [&](const std::string& stage, const std::exception& e) {
    return ScenarioError(sc.config.origin() + ": " + stage + ": " + e.what());
  };

  const SensorArray sensors = generate(sc.arrays);
  const std::uint64_t noise_seed = derive_seed(sc.seed, "noise");
  ManifestInfo info;

  auto t0 = std::chrono::steady_clock::now();
  try {
    res.recording = simulate(sc.support, sc.signal, sensors, sc.time, sc.c, sc.quad_spacing);
    res.recording = add_noise(res.recording, sc.epsilon, noise_seed);
  } catch (const ValidationError& e) {
    throw stage_error("simulate", e);
  }
  res.timings.emplace_back("simulate", elapsed(t0));

  if (to_disk) {
    t0 = std::chrono::steady_clock::now();
    if (options.write_recordings) write_recording_csv(res.recording, path("recordings.csv"));
    write_sensors_csv(sensors, path("sensors.csv"));
    res.timings.emplace_back("write_recordings", elapsed(t0));
  }

  if (options.pick) {
    t0 = std::chrono::steady_clock::now();
    try {
      if (sc.oracle_arrivals)
        res.arrivals = oracle_arrivals(sc.support, sensors, sc.signal.onset(), sc.c);
      else
        res.arrivals = detect_arrivals(res.recording, sc.eta, sc.bias_correction);
    } catch (const ValidationError& e) {
      throw stage_error("detect", e);
    }
    res.timings.emplace_back("detect", elapsed(t0));
    if (to_disk) write_arrivals_csv(res.arrivals, sensors, path("arrivals.csv"));
  }

  if (options.pick && options.reconstruct) {
    try {
      if (sc.outputs.field || sc.outputs.peaks || sc.outputs.points) {
        t0 = std::chrono::steady_clock::now();
        res.field = indicator(res.arrivals, sensors, sc.grid, sc.signal.onset(), sc.c, sc.kernel, sc.cap);
        if (sc.outputs.peaks) res.peaks = local_maxima(*res.field, sc.peak_separation, sc.peak_count, sc.peak_ranking);
        if (sc.outputs.points) res.points = threshold_points(*res.field, sc.threshold);
        res.timings.emplace_back("indicator", elapsed(t0));
      }
      if (sc.outputs.carve) {
        t0 = std::chrono::steady_clock::now();
        res.carve = carve(res.arrivals, sensors, sc.grid, sc.signal.onset(), sc.c, sc.margin);
        res.timings.emplace_back("carve", elapsed(t0));
        if (const auto n = intruding_sensors(sc.support, sensors, res.arrivals, *res.carve, sc.margin))
          res.warnings.push_back(intrusion_warning(n));
      }
    } catch (const ValidationError& e) {
      throw stage_error("reconstruct", e);
    }
  }

  if (!to_disk) return res;

  t0 = std::chrono::steady_clock::now();
  const bool plane = sc.grid.mode() == SamplingGrid::Mode::Plane;
  if (res.field) {
    if (sc.outputs.field) {
      write_field_csv(*res.field, path("field.csv"));
      if (plane) write_field_pgm(*res.field, path("field.pgm"), sc.log_scale);
    }
    if (sc.outputs.points) write_points_xyz(res.points, path("points.xyz"));
    if (sc.outputs.peaks) write_peaks_csv(res.peaks, path("peaks.csv"));
  }
  if (res.carve) {
    write_carve_csv(*res.carve, path("carve.csv"));
    if (plane) write_carve_pgm(*res.carve, path("carve.pgm"));
  }
  res.timings.emplace_back("write_outputs", elapsed(t0));

  info.files = res.files;
  info.timings = res.timings;
  info.warnings = res.warnings;
  info.derived = {{"sensor_count", std::to_string(sensors.size())},
                  {"grid_points", std::to_string(sc.grid.size())},
                  {"kernel", kernel_name(sc.kernel)},
                  {"noise_level", text::format_double(res.recording.noise_level)}};
  if (options.pick) {
    info.derived.emplace_back("u_max", text::format_double(res.arrivals.u_max));
    info.derived.emplace_back("usable_arrivals", std::to_string(res.arrivals.usable()));
  }
  write_manifest(options.out_dir, sc, info);
  res.files.push_back("scenario.scn");
  res.files.push_back("manifest.json");
  return res;
}

}  // namespace wavesrc

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "wavesrc/parallel.hpp"
#include "wavesrc/scenario.hpp"
#include "wavesrc/text_io.hpp"

using namespace wavesrc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string scenario_path(const std::string& name) { return (fs::path(WAVESRC_SCENARIO_DIR) / (name + ".scn")).string(); }

Scenario scenario(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_scenario(scenario_path(name), overrides);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string str(Point3 p) {
  std::ostringstream s;
  s << '(' << fmt("%.3f", p.x1) << ", " << fmt("%.3f", p.x2) << ", " << fmt("%.3f", p.x3) << ')';
  return s.str();
}

std::vector<Point3> parse_points(const std::string& text) {
  std::vector<Point3> out;
  for (const std::string& item : text::split(text, ';')) {
    const auto v = text::parse_numbers(item);
    if (v.size() == 3) out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

std::string expect_value(const Scenario& sc, const std::string& key) {
  const auto* e = sc.config.find("expect." + key);
  if (!e) throw std::runtime_error(sc.name + " has no expect." + key);
  return e->value;
}

double nearest(Point3 p, const std::vector<FieldPoint>& pts) {
  double best = INFINITY;
  for (const FieldPoint& q : pts) best = std::min(best, distance(p, q.position));
  return best;
}

bool report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
  return ok;
}

// 1: detected arrival minus the geometric arrival stays within [0, 0.15].
bool arrival_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> box(-2.0, 2.0), dist(1.5, 8.0), tau(1.0, 4.0), unit(-1.0, 1.0);
  const Signal pulse = Signal::windowed_sine();
  const TimeGrid grid(15.0, 32768);
  double lo = INFINITY, hi = -INFINITY;
  std::size_t missing = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Point3 src{box(rng), box(rng), box(rng)};
    Point3 dir;
    do dir = {unit(rng), unit(rng), unit(rng)};
    while (norm(dir) < 1e-3 || norm(dir) > 1.0);
    const double d = dist(rng);
    const Point3 sensor = src + (d / norm(dir)) * dir;
    const SourceSupport support(PointSet{{PointSource{src, tau(rng)}}});
    const Recording rec = simulate(support, pulse, SensorArray({sensor}), grid, 1.0, kDefaultQuadSpacing2D);
    const ArrivalSet a = detect_arrivals(rec, 1e-3);
    if (!a.arrivals[0]) {
      ++missing;
      continue;
    }
    const double bias = *a.arrivals[0] - (pulse.onset() + distance(src, sensor));
    lo = std::min(lo, bias);
    hi = std::max(hi, bias);
  }
  const double secs = since(t0);
  return report(1, missing == 0 && lo >= 0.0 && hi <= 0.15 && secs < 20.0,
                "bias in [" + fmt("%.5f", lo) + ", " + fmt("%.5f", hi) + "], missing " + std::to_string(missing) +
                    ", " + fmt("%.2f", secs) + " s");
}

// 2: exact arrivals make the control residual vanish for every support variant.
bool control_area() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), radius(4.0, 8.0);
  const std::vector<SourceSupport> supports = {
      SourceSupport(PointSet{{{{0, 1, 0}, 3}, {{0, -1, 0}, 2}, {{0.5, 0.2, -0.3}, 1}}}),
      SourceSupport(ParamCurve::with_spacing(
          [](double z) { return Point3{2 * std::cos(z), 2 * std::sin(z), 3 * z / (2 * std::numbers::pi)}; }, 0,
          2 * std::numbers::pi, 0.01)),
      SourceSupport(PlanarPolygon({{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}})),
      SourceSupport(ConvexPolyhedron({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {0, 0, 2}})),
  };
  const double dt = 15.0 / 32768;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SourceSupport& s = supports[static_cast<std::size_t>(trial) % supports.size()];
    Point3 dir;
    do dir = {unit(rng), unit(rng), unit(rng)};
    while (norm(dir) < 1e-3 || norm(dir) > 1.0);
    const Point3 sensor = (radius(rng) / norm(dir)) * dir;
    const ArrivalSet a = oracle_arrivals(s, SensorArray({sensor}), 0.0, 1.0);
    worst = std::max(worst, std::abs(control_residual(s, sensor, *a.arrivals[0], 0.0, 1.0)));
  }
  const double secs = since(t0);
  return report(2, worst <= dt && secs < 5.0,
                "max |residual| " + fmt("%.3g", worst) + " (dt " + fmt("%.3g", dt) + "), " + fmt("%.2f", secs) + " s");
}

bool peaks_within(const std::vector<FieldPoint>& peaks, const std::vector<Point3>& truth, double tol,
                  std::string& detail) {
  bool ok = true;
  for (const Point3& p : truth) {
    const double d = nearest(p, peaks);
    ok = ok && d <= tol;
    detail += " " + str(p) + "->" + fmt("%.3f", d);
  }
  return ok;
}

std::string list(const std::vector<FieldPoint>& peaks) {
  std::string s;
  for (const FieldPoint& p : peaks) s += (s.empty() ? "" : " ") + str(p.position);
  return s;
}

// 3: Example 1 peaks at three noise levels.
bool example1_peaks() {
  bool all = true;
  std::string detail;
  for (const auto& [eps, tol] : {std::pair{"0.05", 0.15}, std::pair{"0.1", 0.2}, std::pair{"0.15", 0.2}}) {
    const auto t0 = Clock::now();
    const Scenario sc = scenario("example1", {std::string("noise.epsilon=") + eps});
    const RunResult r = run(sc);
    const double secs = since(t0);
    std::string d;
    const bool ok = r.peaks.size() == 2 && peaks_within(r.peaks, parse_points(expect_value(sc, "peaks")), tol, d) &&
                    secs < 10.0;
    all = all && ok;
    detail += std::string(" eps ") + eps + ":" + d + " " + fmt("%.2f", secs) + " s;";
    std::cout << "  info: eps " << eps << " raw-value peaks "
              << list(local_maxima(*r.field, sc.peak_separation, sc.peak_count)) << '\n';
  }
  return report(3, all, detail);
}

// 4: Example 2 recovers the peripheral sources but not the hidden one.
bool example2_peaks() {
  const Scenario sc = scenario("example2");
  const RunResult r = run(sc);
  const double tol = text::parse_double(expect_value(sc, "tolerance"));
  std::string d;
  const bool found = peaks_within(r.peaks, parse_points(expect_value(sc, "peaks")), tol, d);
  const Point3 hidden = parse_points(expect_value(sc, "hidden")).at(0);
  const double dh = nearest(hidden, r.peaks);
  std::cout << "  info: raw-value peaks " << list(local_maxima(*r.field, sc.peak_separation, sc.peak_count)) << '\n';
  return report(4, found && dh > tol && r.peaks.size() == 4,
                "peaks " + list(r.peaks) + ";" + d + "; hidden " + str(hidden) + "->" + fmt("%.3f", dh));
}

// 5: carving a disk from exact arrivals.
bool disk_carving() {
  const auto t0 = Clock::now();
  const Scenario sc = scenario("disk_carve");
  const RunResult r = run(sc);
  const CarveResult& c = *r.carve;
  const auto sp = c.grid.spacing();
  const double cell = sp[0] * sp[1];
  std::size_t mismatch = 0, inside = 0, inside_lost = 0;
  for (std::size_t l = 0; l < c.kept.size(); ++l) {
    const bool in = min_distance(sc.support, c.grid.point(l)).distance <= 1e-12;
    inside += in;
    if (in && !c.kept[l]) ++inside_lost;
    if (in != static_cast<bool>(c.kept[l])) ++mismatch;
  }
  const double disk = measure(sc.support);
  const double frac = static_cast<double>(mismatch) * cell / disk;
  const double secs = since(t0);
  return report(5, frac <= 0.05 && inside_lost == 0 && secs < 10.0,
                "symmetric difference " + fmt("%.4f", frac) + " of disk area, kept " + std::to_string(c.kept_count()) +
                    ", inside " + std::to_string(inside) + ", inside removed " + std::to_string(inside_lost) + ", " +
                    fmt("%.2f", secs) + " s");
}

// 6: Example 3 quantile points hug the segment and reach both ends.
bool example3_segment() {
  const Scenario sc = scenario("example3");
  const RunResult r = run(sc);
  const double tol = text::parse_double(expect_value(sc, "near_support"));
  double worst = 0.0;
  for (const FieldPoint& p : r.points) worst = std::max(worst, min_distance(sc.support, p.position).distance);
  const auto& seg = std::get<Segment>(sc.support.parts().at(0).shape);
  const double da = nearest(seg.a, r.points), db = nearest(seg.b, r.points);
  return report(6, !r.points.empty() && worst <= tol && da <= tol && db <= tol,
                std::to_string(r.points.size()) + " points, farthest " + fmt("%.4f", worst) + ", endpoints " +
                    fmt("%.4f", da) + " / " + fmt("%.4f", db));
}

// 7: helix at 80^3.
bool helix() {
  const auto t0 = Clock::now();
  const Scenario sc = scenario("example12", {"grid.n=80"});
  const RunResult r = run(sc);
  const double secs = since(t0);
  const double tol = text::parse_double(expect_value(sc, "near_support"));
  const double want = text::parse_double(expect_value(sc, "coverage"));
  std::size_t near = 0;
  double worst = 0.0;
  for (const FieldPoint& p : r.points) {
    const double d = min_distance(sc.support, p.position).distance;
    worst = std::max(worst, d);
    near += d <= tol;
  }
  const auto& curve = std::get<ParamCurve>(sc.support.parts().at(0).shape);
  std::size_t covered = 0;
  for (int i = 0; i < 200; ++i) {
    const double z = curve.z0() + (curve.z1() - curve.z0()) * i / 199.0;
    covered += nearest(curve.at(z), r.points) <= tol;
  }
  const double near_frac = r.points.empty() ? 0.0 : static_cast<double>(near) / static_cast<double>(r.points.size());
  const double coverage = covered / 200.0;
  return report(7, !r.points.empty() && near == r.points.size() && coverage >= want && secs < 60.0,
                std::to_string(r.points.size()) + " points, " + fmt("%.3f", near_frac) + " within " + fmt("%.2f", tol) +
                    " (farthest " + fmt("%.3f", worst) + "), coverage " + fmt("%.3f", coverage) + ", " +
                    fmt("%.2f", secs) + " s");
}

// Largest field value over the corners of the grid cell containing p.
double containing_cell_max(const IndicatorField& f, Point3 p) {
  const SamplingGrid& g = f.grid;
  const Vec2 q = g.frame().to_local(p);
  const auto sp = g.spacing();
  auto cell = [&](double v, double lo, double h) {
    const double i = std::floor((v - lo) / h);
    return static_cast<std::size_t>(std::clamp(i, 0.0, static_cast<double>(g.n() - 2)));
  };
  const std::size_t iu = cell(q.u, g.lo()[0], sp[0]);
  const std::size_t iv = cell(q.v, g.lo()[1], sp[1]);
  double best = 0.0;
  for (std::size_t dv = 0; dv < 2; ++dv)
    for (std::size_t du = 0; du < 2; ++du) best = std::max(best, f.values[(iv + dv) * g.n() + iu + du]);
  return best;
}

// 8: on-support contrast with exact arrivals. Probes are the nearest-support
// witness points of the sensors; the grid-cell value around each is printed too.
bool contrast() {
  bool all = true;
  std::string detail;
  for (const std::string name : {"example1", "example3", "example6"}) {
    const Scenario sc = scenario(name, {"detect.mode=oracle", "noise.epsilon=0", "reconstruct.cap=1e6"});
    const RunResult r = run(sc);
    const IndicatorField& f = *r.field;
    const SensorArray sensors = generate(sc.arrays);
    const IndicatorSum sum(r.arrivals, sensors, sc.signal.onset(), sc.c, f.kernel, f.cap);
    double on = INFINITY, on_cell = INFINITY;
    for (const Point3& x : sensors.positions) {
      const Point3 w = min_distance(sc.support, x).nearest;
      on = std::min(on, sum(w));
      on_cell = std::min(on_cell, containing_cell_max(f, w));
    }
    const double far_dist = 5.0 * f.grid.max_spacing();
    std::vector<double> far;
    for (std::size_t l = 0; l < f.values.size(); ++l)
      if (min_distance(sc.support, f.grid.point(l)).distance > far_dist) far.push_back(f.values[l]);
    auto mid = far.begin() + static_cast<std::ptrdiff_t>(far.size() / 2);
    std::nth_element(far.begin(), mid, far.end());
    const double ratio = on / *mid;
    all = all && ratio >= 10.0;
    detail += " " + name + " min on-support " + fmt("%.4g", on) + " / far median " + fmt("%.4g", *mid) + " = " +
              fmt("%.3g", ratio) + ";";
    std::cout << "  info: " << name << " grid-cell ratio " << fmt("%.3g", on_cell / *mid) << '\n';
  }
  return report(8, all, detail);
}

double time_indicator(const ArrivalSet& a, const SensorArray& s, const SamplingGrid& g, unsigned workers, int reps) {
  double best = INFINITY;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    const IndicatorField f = indicator(a, s, g, 0.0, 1.0, Kernel::Abs, kDefaultCap, workers);
    best = std::min(best, since(t0));
    if (f.values.empty()) return 0.0;
  }
  return best;
}

// 9: indicator throughput.
bool performance() {
  const Scenario s2 = scenario("example1", {"detect.mode=oracle"});
  const SensorArray c64 = generate(s2.arrays);
  const ArrivalSet a2 = oracle_arrivals(s2.support, c64, 0.0, 1.0);
  const double t2 = time_indicator(a2, c64, s2.grid, 1, 3);

  const Scenario s3 = scenario("example12", {"grid.n=80", "detect.mode=oracle"});
  const SensorArray f100 = generate(s3.arrays);
  const ArrivalSet a3 = oracle_arrivals(s3.support, f100, 0.0, 1.0);
  const double one = time_indicator(a3, f100, s3.grid, 1, 2);
  const double eight = time_indicator(a3, f100, s3.grid, 8, 2);
  const double speedup = one / eight;
  const unsigned cores = std::thread::hardware_concurrency();
  const bool ok2 = t2 < 1.0;
  const bool ok3 = speedup >= 3.0;
  std::cout << "  info: 2D single-thread " << (ok2 ? "PASS" : "FAIL") << ", 3D speedup " << (ok3 ? "PASS" : "FAIL")
            << '\n';
  return report(9, ok2 && ok3,
                "2D 200^2 x 64 single-thread " + fmt("%.3f", t2) + " s; 3D 80^3 x 100 " + fmt("%.3f", one) +
                    " s at 1 worker, " + fmt("%.3f", eight) + " s at 8 workers, speedup " + fmt("%.2f", speedup) +
                    " on " + std::to_string(cores) + " hardware threads");
}

// 10: two runs of every bundled scenario agree byte for byte.
bool determinism() {
  const fs::path base = fs::temp_directory_path() / "wavesrc_determinism";
  fs::remove_all(base);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(WAVESRC_SCENARIO_DIR))
    if (e.path().extension() == ".scn") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const std::string& name : names) {
    Scenario probe = scenario(name);
    std::vector<std::string> overrides;
    if (probe.grid.mode() == SamplingGrid::Mode::Box3) overrides.push_back("grid.n=80");
    const Scenario sc = scenario(name, overrides);
    for (const char* rep : {"a", "b"}) {
      RunOptions opt;
      opt.out_dir = (base / name / rep).string();
      run(sc, opt);
    }
    for (const auto& e : fs::directory_iterator(base / name / "a")) {
      const std::string ext = e.path().extension().string();
      if (ext != ".csv" && ext != ".pgm" && ext != ".xyz") continue;
      const fs::path other = base / name / "b" / e.path().filename();
      ++compared;
      if (!fs::exists(other) || text::read_file(e.path().string()) != text::read_file(other.string()))
        differing.push_back(name + "/" + e.path().filename().string());
    }
  }
  fs::remove_all(base);
  std::string detail = std::to_string(names.size()) + " scenarios, " + std::to_string(compared) + " files compared";
  for (const std::string& d : differing) detail += ", differs: " + d;
  return report(10, differing.empty() && compared > 0, detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> which;
  app.add_option("--criterion", which, "Criterion number (repeatable); all when omitted")->check(CLI::Range(1, 10));
  bool expected_fail = false;
  app.add_flag("--expected-fail", expected_fail, "Exit 77 instead of 1 when a check fails");
  CLI11_PARSE(app, argc, argv);
  if (which.empty())
    for (int i = 1; i <= 10; ++i) which.push_back(i);

  const std::vector<std::function<bool()>> checks = {arrival_oracle, control_area,      example1_peaks, example2_peaks,
                                                     disk_carving,   example3_segment,  helix,          contrast,
                                                     performance,    determinism};
  bool all = true;
  for (int id : which) {
    try {
      all = checks[static_cast<std::size_t>(id - 1)]() && all;
    } catch (const std::exception& e) {
      all = report(id, false, std::string("error: ") + e.what()) && all;
    }
  }
  if (all) return 0;
  return expected_fail ? 77 : 1;
}

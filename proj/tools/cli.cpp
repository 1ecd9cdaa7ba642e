#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "wavesrc/parallel.hpp"
#include "wavesrc/scenario.hpp"
#include "wavesrc/text_io.hpp"

#ifndef WAVESRC_SCENARIO_DIR
#define WAVESRC_SCENARIO_DIR "scenarios"
#endif

namespace wavesrc::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string scenario;
  std::string out;
  std::vector<std::string> overrides;
  std::string scenario_dir;
};

struct StageInputs {
  std::string run_dir;
  std::string recordings;
  std::string sensors;
  std::string arrivals;
};

struct StageFlags {
  std::string kernel, grid_mode, grid_min, grid_max, threshold, eta, bias, margin, cap, grid_n, peaks, epsilon, peak_ranking;
  bool log_scale = false;
};

std::string resolve_scenario(const std::string& name, const std::string& dir) {
  if (fs::exists(name)) return name;
  for (const std::string& candidate : {name, name + ".scn"}) {
    const fs::path p = fs::path(dir) / candidate;
    if (fs::exists(p)) return p.string();
  }
  throw ValidationError("scenario not found: " + name + " (searched ./ and " + dir + ")");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void add_stage_inputs(CLI::App* cmd, StageInputs& in) {
  cmd->add_option("--run", in.run_dir, "Directory holding recordings.csv and sensors.csv");
  cmd->add_option("--recordings", in.recordings, "Recording CSV (t,s0,...)");
  cmd->add_option("--sensors", in.sensors, "Sensor CSV (index,x1,x2,x3)");
}

void add_epsilon(CLI::App* cmd, StageFlags& f) {
  cmd->add_option("--epsilon", f.epsilon, "Relative noise level of the recording");
}

void add_common(CLI::App* cmd, Common& c, bool scenario_required) {
  auto* opt = cmd->add_option("--scenario", c.scenario, "Scenario file or bundled scenario name");
  if (scenario_required) opt->required();
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_option("--override,--param", c.overrides, "Override a scenario key, e.g. noise.epsilon=0")
      ->allow_extra_args();
}

void add_grid_flags(CLI::App* cmd, StageFlags& f) {
  cmd->add_option("--grid-mode", f.grid_mode, "plane or box");
  cmd->add_option("--grid-min", f.grid_min, "Lower grid corner, e.g. \"-2 -2\"");
  cmd->add_option("--grid-max", f.grid_max, "Upper grid corner");
  cmd->add_option("--grid-n", f.grid_n, "Points per axis");
}

std::vector<std::string> flag_overrides(const StageFlags& f) {
  std::vector<std::string> o;
  auto put = [&o](const char* key, const std::string& v) {
    if (!v.empty()) o.push_back(std::string(key) + "=" + v);
  };
  put("reconstruct.kernel", f.kernel);
  put("reconstruct.cap", f.cap);
  put("reconstruct.threshold", f.threshold);
  put("reconstruct.margin", f.margin);
  put("reconstruct.peaks", f.peaks);
  put("reconstruct.peak_ranking", f.peak_ranking);
  put("grid.mode", f.grid_mode);
  put("grid.min", f.grid_min);
  put("grid.max", f.grid_max);
  put("grid.n", f.grid_n);
  put("detect.eta", f.eta);
  put("noise.epsilon", f.epsilon);
  put("detect.bias_correction", f.bias);
  if (f.log_scale) o.push_back("reconstruct.log_scale=true");
  return o;
}

Scenario stage_scenario(const Common& c, const std::vector<std::string>& extra) {
  std::vector<std::string> overrides = c.overrides;
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  if (c.scenario.empty()) return parse_scenario("", "<flags>", overrides, false);
  return load_scenario(resolve_scenario(c.scenario, c.scenario_dir), overrides, false);
}

struct LoadedArrivals {
  ArrivalSet arrivals;
  SensorArray sensors;
  std::vector<std::string> inputs;
};

LoadedArrivals load_arrivals(const StageInputs& in, const Scenario& sc, std::string arrivals_path) {
  LoadedArrivals out;
  if (!arrivals_path.empty()) {
    out.arrivals = read_arrivals_csv(arrivals_path, &out.sensors);
    out.inputs = {arrivals_path};
    return out;
  }
  std::string rec = in.recordings;
  std::string sens = in.sensors;
  if (!in.run_dir.empty()) {
    if (rec.empty()) rec = (fs::path(in.run_dir) / "recordings.csv").string();
    if (sens.empty()) sens = (fs::path(in.run_dir) / "sensors.csv").string();
  }
  if (rec.empty() || sens.empty())
    throw ValidationError("need --arrivals, --run, or both --recordings and --sensors");
  const Recording r = read_recording_csv(rec, sens, sc.c, sc.epsilon);
  out.sensors = r.sensors;
  out.arrivals = detect_arrivals(r, sc.eta, sc.bias_correction);
  out.inputs = {rec, sens};
  return out;
}

std::string report(const std::string& dir, const std::vector<std::string>& files) {
  std::string s = "wrote " + std::to_string(files.size() + 2) + " files to " + dir + ":";
  for (const auto& f : files) s += " " + f;
  return s + " scenario.scn manifest.json";
}

int cmd_run(const Common& c, bool simulate_only, std::ostream& out, std::ostream& err) {
  const Scenario sc = load_scenario(resolve_scenario(c.scenario, c.scenario_dir), c.overrides);
  RunOptions opt;
  opt.out_dir = c.out;
  opt.pick = !simulate_only;
  opt.reconstruct = !simulate_only;
  const RunResult res = run(sc, opt);
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';
  std::vector<std::string> files(res.files.begin(), res.files.end() - 2);
  out << report(c.out, files) << '\n';
  return 0;
}

int cmd_pick(const Common& c, const StageInputs& in, const StageFlags& f, std::ostream& out) {
  const Scenario sc = stage_scenario(c, flag_overrides(f));
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedArrivals la = load_arrivals(in, sc, "");
  ManifestInfo info;
  info.command = "pick";
  info.inputs = la.inputs;
  fs::create_directories(c.out);
  write_arrivals_csv(la.arrivals, la.sensors, (fs::path(c.out) / "arrivals.csv").string());
  info.files = {"arrivals.csv"};
  info.timings = {{"detect", seconds_since(t0)}};
  info.derived = {{"u_max", text::format_double(la.arrivals.u_max)},
                  {"usable_arrivals", std::to_string(la.arrivals.usable())}};
  write_manifest(c.out, sc, info);
  out << report(c.out, info.files) << '\n';
  return 0;
}

int cmd_reconstruct(const Common& c, const StageInputs& in, const std::string& arrivals, const StageFlags& f,
                    bool carving, std::ostream& out, std::ostream& err) {
  const Scenario sc = stage_scenario(c, flag_overrides(f));
  auto t0 = std::chrono::steady_clock::now();
  const LoadedArrivals la = load_arrivals(in, sc, arrivals);
  ManifestInfo info;
  info.command = carving ? "carve" : "reconstruct";
  info.inputs = la.inputs;
  info.timings.emplace_back("load", seconds_since(t0));
  fs::create_directories(c.out);
  auto path = [&](const std::string& name) {
    info.files.push_back(name);
    return (fs::path(c.out) / name).string();
  };
  const bool plane = sc.grid.mode() == SamplingGrid::Mode::Plane;
  const double onset = sc.signal.onset();
  t0 = std::chrono::steady_clock::now();
  if (carving) {
    const CarveResult cr = carve(la.arrivals, la.sensors, sc.grid, onset, sc.c, sc.margin);
    info.timings.emplace_back("carve", seconds_since(t0));
    write_carve_csv(cr, path("carve.csv"));
    if (plane) write_carve_pgm(cr, path("carve.pgm"));
    info.derived.emplace_back("kept_points", std::to_string(cr.kept_count()));
    if (sc.has_support)
      if (const auto n = intruding_sensors(sc.support, la.sensors, la.arrivals, cr, sc.margin))
        info.warnings.push_back(intrusion_warning(n));
  } else {
    const IndicatorField field = indicator(la.arrivals, la.sensors, sc.grid, onset, sc.c, sc.kernel, sc.cap);
    info.timings.emplace_back("indicator", seconds_since(t0));
    write_field_csv(field, path("field.csv"));
    if (plane) write_field_pgm(field, path("field.pgm"), sc.log_scale);
    if (!f.threshold.empty() || sc.outputs.points)
      write_points_xyz(threshold_points(field, sc.threshold), path("points.xyz"));
    if (!f.peaks.empty() || sc.outputs.peaks)
      write_peaks_csv(local_maxima(field, sc.peak_separation, sc.peak_count, sc.peak_ranking), path("peaks.csv"));
  }
  info.derived.emplace_back("usable_arrivals", std::to_string(la.arrivals.usable()));
  for (const auto& w : info.warnings) err << "warning: " << w << '\n';
  write_manifest(c.out, sc, info);
  out << report(c.out, info.files) << '\n';
  return 0;
}

int cmd_list(const std::string& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) throw ValidationError("scenario directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".scn") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    const Config cfg = Config::parse(text::read_file(p.string()), p.string());
    const auto* name = cfg.find("name");
    const auto* desc = cfg.find("description");
    out << (name ? name->value : p.stem().string()) << '\t' << p.filename().string() << '\t'
        << (desc ? desc->value : "") << '\n';
  }
  return 0;
}

}  // namespace

std::string default_scenario_dir() {
  if (const char* env = std::getenv("WAVESRC_SCENARIO_DIR"); env && *env) return env;
  return WAVESRC_SCENARIO_DIR;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reconstruct stationary wave sources from sensor arrival times", "wavesrc"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  c.scenario_dir = default_scenario_dir();
  int threads = -1;
  app.add_option("--threads", threads, "Worker thread cap (also WAVESRC_THREADS)")->check(CLI::NonNegativeNumber);
  app.add_option("--scenario-dir", c.scenario_dir, "Directory searched for bundled scenario names");

  StageInputs in;
  StageFlags f;
  std::string arrivals;

  auto* run_cmd = app.add_subcommand("run", "Run a full scenario: simulate, pick, reconstruct");
  add_common(run_cmd, c, true);
  auto* sim_cmd = app.add_subcommand("simulate", "Write recordings.csv and sensors.csv for a scenario");
  add_common(sim_cmd, c, true);

  auto* pick_cmd = app.add_subcommand("pick", "Detect first arrivals in a recording");
  add_common(pick_cmd, c, false);
  add_stage_inputs(pick_cmd, in);
  add_epsilon(pick_cmd, f);
  pick_cmd->add_option("--eta", f.eta, "Relative detection threshold");
  pick_cmd->add_option("--bias-correction", f.bias, "Subtracted from every detected arrival");

  auto* rec_cmd = app.add_subcommand("reconstruct", "Evaluate the source indicator on a grid");
  add_common(rec_cmd, c, false);
  add_stage_inputs(rec_cmd, in);
  add_epsilon(rec_cmd, f);
  rec_cmd->add_option("--arrivals", arrivals, "Arrival CSV (index,x1,x2,x3,arrival)");
  add_grid_flags(rec_cmd, f);
  rec_cmd->add_option("--kernel", f.kernel, "abs or sqrt");
  rec_cmd->add_option("--cap", f.cap, "Per-sensor kernel cap");
  rec_cmd->add_option("--threshold", f.threshold, "absolute:<v> or quantile:<q>; writes points.xyz");
  rec_cmd->add_option("--peaks", f.peaks, "Number of separated local maxima; writes peaks.csv");
  rec_cmd->add_option("--peak-ranking", f.peak_ranking, "value or median");
  rec_cmd->add_option("--eta", f.eta, "Relative detection threshold");
  rec_cmd->add_flag("--log-scale", f.log_scale, "Map log(1+v) into the PGM");

  auto* carve_cmd = app.add_subcommand("carve", "Keep grid points outside every sensor's arrival ball");
  add_common(carve_cmd, c, false);
  add_stage_inputs(carve_cmd, in);
  add_epsilon(carve_cmd, f);
  carve_cmd->add_option("--arrivals", arrivals, "Arrival CSV (index,x1,x2,x3,arrival)");
  add_grid_flags(carve_cmd, f);
  carve_cmd->add_option("--margin", f.margin, "Safety margin subtracted from each radius");
  carve_cmd->add_option("--eta", f.eta, "Relative detection threshold");

  auto* list_cmd = app.add_subcommand("list-scenarios", "List bundled scenarios");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads >= 0) set_thread_count(static_cast<unsigned>(threads));
    if (run_cmd->parsed()) return cmd_run(c, false, out, err);
    if (sim_cmd->parsed()) return cmd_run(c, true, out, err);
    if (pick_cmd->parsed()) return cmd_pick(c, in, f, out);
    if (rec_cmd->parsed()) return cmd_reconstruct(c, in, arrivals, f, false, out, err);
    if (carve_cmd->parsed()) return cmd_reconstruct(c, in, arrivals, f, true, out, err);
    if (list_cmd->parsed()) return cmd_list(c.scenario_dir, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace wavesrc::cli

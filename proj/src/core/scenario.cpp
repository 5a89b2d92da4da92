#include "scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "errors.hpp"
#include "gait.hpp"
#include "shape_model.hpp"

#ifndef SOFTSHAPE_VERSION_STRING
#define SOFTSHAPE_VERSION_STRING "unknown"
#endif

namespace softshape {

const char* version_string() { return SOFTSHAPE_VERSION_STRING; }

namespace scenario {
namespace fs = std::filesystem;

namespace {

constexpr double kM = 1.0 / kCmPerM;  // cm -> m

// Reads one JSON object and complains about keys nobody asked for.
class Section {
 public:
  Section(const Json* node, std::string where) : node_(node), where_(std::move(where)) {
    if (node_ && !node_->is_object()) throw InputError(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_->contains(key) && !(*node_)[key].is_null();
  }

  const Json& at(const std::string& key) { return (*node_)[key]; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number()) throw InputError(path(key) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InputError(path(key) + " must be finite");
    return d;
  }

  std::optional<double> maybe_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number_integer()) throw InputError(path(key) + " must be an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) throw InputError(path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_string()) throw InputError(path(key) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array()) throw InputError(path(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InputError(path(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<VoltageVector> voltage_list(const std::string& key, int actuators) {
    const Json& v = at(key);
    if (!v.is_array()) throw InputError(path(key) + " must be an array of voltage vectors");
    std::vector<VoltageVector> out;
    for (const auto& row : v) {
      if (!row.is_array() || static_cast<int>(row.size()) != actuators) {
        throw InputError(path(key) + " entries need " + std::to_string(actuators) + " voltages");
      }
      std::vector<double> volts;
      for (const auto& e : row) {
        if (!e.is_number()) throw InputError(path(key) + " entries must be numeric");
        volts.push_back(e.get<double>());
      }
      out.emplace_back(std::move(volts));
    }
    return out;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) throw InputError("unknown key " + path(key));
    }
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const Json* node_;
  std::string where_;
  std::set<std::string> seen_;
};

const Json* child(const Json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return nullptr;
  return &doc[key];
}

std::vector<double> bound(Section& s, const std::string& key, double fallback, int dims) {
  if (!s.has(key)) return std::vector<double>(dims, fallback);
  const Json& v = s.at(key);
  if (v.is_number()) return std::vector<double>(dims, v.get<double>());
  auto out = s.numbers(key);
  if (static_cast<int>(out.size()) != dims) {
    throw InputError(s.path(key) + " needs one bound per actuator");
  }
  return out;
}

RobotParams parse_robot(const Json* node) {
  Section s(node, "robot");
  RobotParams p;
  p.length = s.number("length_cm", p.length * kCmPerM) * kM;
  p.width = s.number("width_cm", p.width * kCmPerM) * kM;
  p.n_actuators = static_cast<int>(s.integer("n_actuators", p.n_actuators));
  p.bending_stiffness = s.number("bending_stiffness_Nm2", p.bending_stiffness);
  p.weight_per_length = s.number("weight_per_length_N_per_m", p.weight_per_length);
  p.moment_per_volt = s.number("moment_per_volt_Nm_per_V", p.moment_per_volt);
  p.pad_span = s.number("pad_span_cm", p.pad_span * kCmPerM) * kM;
  p.grid_nodes = static_cast<int>(s.integer("grid_nodes", p.grid_nodes));
  s.finish();
  p.validate();
  return p;
}

PlantConfig parse_plant(const Json* node) {
  Section s(node, "plant");
  PlantConfig p;
  p.stiffness_scale = s.number("stiffness_scale", p.stiffness_scale);
  p.gain_scale = s.number("gain_scale", p.gain_scale);
  p.noise_cm = s.number("noise_cm", p.noise_cm);
  p.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<long long>(p.seed)));
  if (s.has("deviation")) {
    Section d(&s.at("deviation"), "plant.deviation");
    DeviationConfig dev;
    dev.modes = static_cast<int>(d.integer("modes", dev.modes));
    dev.seed = static_cast<std::uint64_t>(d.integer("seed", static_cast<long long>(dev.seed)));
    dev.target_mse_cm2 = d.number("target_mse_cm2", dev.target_mse_cm2);
    d.finish();
    if (dev.modes < 1) throw InputError("plant.deviation.modes must be at least 1");
    if (!(dev.target_mse_cm2 >= 0.0)) throw InputError("plant.deviation.target_mse_cm2 must be >= 0");
    p.deviation = dev;
  }
  s.finish();
  if (!(p.stiffness_scale > 0.0) || !(p.gain_scale > 0.0)) {
    throw InputError("plant scales must be positive");
  }
  if (!(p.noise_cm >= 0.0)) throw InputError("plant.noise_cm must be >= 0");
  return p;
}

OptimizerConfig parse_optimizer(const Json* node, int actuators) {
  Section s(node, "optimizer");
  OptimizerConfig o;
  o.box.lower = bound(s, "lower_volts", -1500.0, actuators);
  o.box.upper = bound(s, "upper_volts", 500.0, actuators);
  o.box.symmetric = s.boolean("symmetric_mode", false);
  o.budget = static_cast<int>(s.integer("budget", o.budget));
  o.init_samples = static_cast<int>(s.integer("init_samples", o.init_samples));
  o.candidates = static_cast<int>(s.integer("candidates", o.candidates));
  o.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<long long>(o.seed)));
  o.warm_start = s.boolean("warm_start", o.warm_start);
  s.finish();
  o.box.validate();
  if (o.budget < 1 || o.init_samples < 1 || o.candidates < 1) {
    throw InputError("optimizer budget, init_samples and candidates must be positive");
  }
  return o;
}

CalibrationConfig parse_calibration(const Json* node, int actuators) {
  Section s(node, "calibration");
  CalibrationConfig c;
  c.learning_rate = s.maybe_number("learning_rate");
  c.epochs = static_cast<int>(s.integer("epochs", c.epochs));
  c.references = s.has("reference_volts") ? s.voltage_list("reference_volts", actuators)
                                          : default_references();
  s.finish();
  if (c.learning_rate && !(*c.learning_rate > 0.0)) {
    throw InputError("calibration.learning_rate must be positive");
  }
  if (c.epochs < 1) throw InputError("calibration.epochs must be at least 1");
  if (c.references.empty()) throw InputError("calibration needs at least one reference");
  for (const auto& v : c.references) {
    if (static_cast<int>(v.size()) != actuators) {
      throw InputError("calibration reference has the wrong number of voltages");
    }
  }
  return c;
}

SafetyLine parse_roof(const Json* node) {
  Section s(node, "roof");
  const std::string kind = s.text("kind", "");
  const double margin = s.number("margin_cm", 0.1) * kM;
  const double begin = s.number("begin_cm", 0.0) * kM;
  const double end = s.number("end_cm", 100.0) * kM;
  std::optional<RoofProfile> roof;
  if (kind == "step") {
    roof = RoofProfile::step(s.number("left_cm", 1.4) * kM, s.number("right_cm", 0.9) * kM,
                             s.number("transition_cm", 55.0) * kM, begin, end,
                             s.number("ramp_cm", 0.1) * kM);
  } else if (kind == "slanted") {
    roof = RoofProfile::slanted(s.number("begin_height_cm", 1.5) * kM,
                                s.number("end_height_cm", 0.9) * kM, begin, end);
  } else if (kind == "sinusoidal") {
    roof = RoofProfile::sinusoidal(s.number("mean_cm", 1.15) * kM, s.number("amplitude_cm", 0.25) * kM,
                                   s.number("wavelength_cm", 60.0) * kM, s.number("phase_rad", 0.0),
                                   begin, end);
  } else if (kind == "file") {
    if (!s.has("path")) throw InputError("roof.path is required for a file roof");
    roof = load_profile(fs::path(s.text("path", "")));
  } else {
    throw InputError("roof.kind must be step, slanted, sinusoidal or file");
  }
  s.finish();
  return SafetyLine(*roof, margin);
}

RunConfig parse_run(const Json* node, int actuators) {
  Section s(node, "run");
  RunConfig r;
  if (auto v = s.maybe_number("start_x0_cm")) r.start_x0 = *v * kM;
  if (auto v = s.maybe_number("end_x0_cm")) r.end_x0 = *v * kM;
  r.max_cycles = static_cast<int>(s.integer("max_cycles", r.max_cycles));
  r.output_dir = s.text("output_dir", r.output_dir.string());
  r.targets = s.has("targets_volts") ? s.voltage_list("targets_volts", actuators) : default_targets();
  if (s.has("heights_cm")) {
    for (double h : s.numbers("heights_cm")) r.heights.push_back(h * kM);
  } else {
    for (int i = 0; i <= 15; ++i) r.heights.push_back(0.1 * i * kM);
  }
  r.position_step = s.number("position_step_cm", r.position_step * kCmPerM) * kM;
  r.snapshot_every = static_cast<int>(s.integer("snapshot_every", r.snapshot_every));
  r.step_budget_s = s.maybe_number("step_budget_s");
  r.loss.penalty_cm = s.number("penalty_cm", r.loss.penalty_cm);
  r.loss.sample_count = static_cast<int>(s.integer("footprint_samples", r.loss.sample_count));
  s.finish();
  r.loss.validate();
  if (r.max_cycles < 1) throw InputError("run.max_cycles must be at least 1");
  if (!(r.position_step > 0.0)) throw InputError("run.position_step_cm must be positive");
  if (r.snapshot_every < 1) throw InputError("run.snapshot_every must be at least 1");
  if (r.targets.empty()) throw InputError("run.targets_volts is empty");
  return r;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_metrics(const fs::path& dir, const std::string& command, const ScenarioConfig& config,
                   Json results) {
  Json m;
  m["command"] = command;
  m["version"] = version_string();
  m["seed"] = config.optimizer.seed;
  m["config"] = config.echo;
  m["results"] = std::move(results);
  auto out = open_out(dir / "metrics.json");
  out << m.dump(2) << "\n";
}

std::string voltage_header(int n) {
  std::string h;
  for (int k = 1; k <= n; ++k) h += ",v" + std::to_string(k);
  return h;
}

std::string voltage_fields(const VoltageVector& v) {
  std::string s;
  for (double x : v.values()) s += "," + csv::num(x);
  return s;
}

MinimizeOptions minimize_options(const OptimizerConfig& o, std::uint64_t stream) {
  MinimizeOptions m;
  m.budget = o.budget;
  m.init_samples = o.init_samples;
  m.candidates = o.candidates;
  m.seed = o.seed * 1000003ULL + stream;
  return m;
}

ShapeModel calibrated_model(const ScenarioConfig& config, Plant& plant, std::ostream* log) {
  ShapeModel model(config.robot);
  if (!config.calibration) return model;
  const auto& cal = *config.calibration;
  std::vector<CalibrationSample> samples;
  for (const auto& v : cal.references) {
    samples.push_back({v, plant.sense(v, 0.0).shape, model.predict_uncorrected(v)});
  }
  CorrectionField field(config.robot);
  field.set_learning_rate(cal.learning_rate.value_or(default_learning_rate(samples)));
  calibrate_batch(field, samples, cal.epochs);
  model.set_correction(std::move(field));
  if (log) *log << "calibrated on " << samples.size() << " reference shapes\n";
  return model;
}

struct CrawlBounds {
  double start;
  double end;
};

CrawlBounds crawl_bounds(const ScenarioConfig& config, const SafetyLine& line) {
  const double start = config.run.start_x0.value_or(line.roof().x_begin());
  const double end = config.run.end_x0.value_or(line.roof().x_end() - config.robot.length);
  if (!(end > start)) throw InputError("crawl end position must lie beyond the start position");
  return {start, end};
}

Json crawl_summary(const CrawlReport& r) {
  Json j;
  j["cycles"] = r.cycles.size();
  j["violations"] = r.violations;
  j["reached_end"] = r.reached_end;
  j["final_x0_cm"] = r.final_x0_cm;
  double gap_max = 0.0, gap_min = std::numeric_limits<double>::infinity(), stride_sum = 0.0;
  int fallbacks = 0;
  for (const auto& c : r.cycles) {
    if (std::isfinite(c.dy_min_cm)) {
      gap_max = std::max(gap_max, c.dy_min_cm);
      gap_min = std::min(gap_min, c.dy_min_cm);
    }
    stride_sum += c.stride_cm;
    fallbacks += c.fallback ? 1 : 0;
  }
  j["max_closest_distance_cm"] = gap_max;
  j["min_closest_distance_cm"] = std::isfinite(gap_min) ? Json(gap_min) : Json(nullptr);
  j["mean_stride_cm"] = r.cycles.empty() ? 0.0 : stride_sum / static_cast<double>(r.cycles.size());
  j["fallback_cycles"] = fallbacks;
  return j;
}

int crawl_exit_code(const CrawlReport& r) {
  if (r.violations > 0) return static_cast<int>(ErrorKind::Safety);
  if (!r.reached_end) return static_cast<int>(ErrorKind::Solver);
  return 0;
}

}  // namespace

std::vector<VoltageVector> default_targets() {
  std::vector<VoltageVector> out;
  const ArchFamily family;
  for (double m : {-500.0, -750.0, -1000.0, -1250.0, -1450.0}) out.push_back(family.at(m));
  return out;
}

std::vector<VoltageVector> default_references() {
  return {{300.0, 0.0, 0.0, 0.0, 300.0}, {300.0, 258.0, -1292.0, 258.0, 300.0}};
}

ScenarioConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw InputError("scenario config must be a JSON object");
  static const std::set<std::string> sections{"robot", "plant", "optimizer", "calibration", "roof", "run"};
  for (const auto& [key, value] : doc.items()) {
    if (!sections.count(key)) throw InputError("unknown key " + key);
  }
  ScenarioConfig c;
  c.echo = doc;
  c.robot = parse_robot(child(doc, "robot"));
  c.plant = parse_plant(child(doc, "plant"));
  c.optimizer = parse_optimizer(child(doc, "optimizer"), c.robot.n_actuators);
  if (const Json* node = child(doc, "calibration")) {
    c.calibration = parse_calibration(node, c.robot.n_actuators);
  }
  if (const Json* node = child(doc, "roof")) c.roof = parse_roof(node);
  c.run = parse_run(child(doc, "run"), c.robot.n_actuators);
  return c;
}

RobotParams parse_robot_section(const Json& section) { return parse_robot(&section); }

SafetyLine parse_roof_section(const Json& section) { return parse_roof(&section); }

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

SafetyLine builtin_roof(const std::string& name, double margin) {
  if (name == "step") return SafetyLine(RoofProfile::step(1.4 * kM, 0.9 * kM, 55 * kM, 0.0, 110 * kM, 0.1 * kM), margin);
  if (name == "slant") return SafetyLine(RoofProfile::slanted(1.5 * kM, 0.9 * kM, 0.0, 100 * kM), margin);
  if (name == "sine") {
    return SafetyLine(RoofProfile::sinusoidal(1.15 * kM, 0.25 * kM, 60 * kM, 0.0, 0.0, 100 * kM), margin);
  }
  if (name.rfind("file:", 0) == 0) return SafetyLine(load_profile(fs::path(name.substr(5))), margin);
  throw InputError("unknown roof '" + name + "' (expected step, slant, sine or file:PATH)");
}

void apply_overrides(ScenarioConfig& config, const RunOptions& options) {
  if (options.out_dir) {
    config.run.output_dir = *options.out_dir;
    config.echo["run"]["output_dir"] = options.out_dir->string();
  }
  if (options.seed) {
    config.optimizer.seed = *options.seed;
    config.plant.seed = *options.seed;
    config.echo["optimizer"]["seed"] = *options.seed;
    config.echo["plant"]["seed"] = *options.seed;
  }
  if (options.roof) {
    const double margin = config.roof ? config.roof->margin() : 1e-3;
    config.roof = builtin_roof(*options.roof, margin);
    config.echo["roof_override"] = *options.roof;
  }
}

PlantParams make_plant(const ScenarioConfig& config, const std::vector<VoltageVector>& voltages) {
  PlantParams p;
  p.base = config.robot;
  p.stiffness_scale = config.plant.stiffness_scale;
  p.gain_scale = config.plant.gain_scale;
  p.noise_cm = config.plant.noise_cm;
  p.seed = config.plant.seed;
  if (config.plant.deviation) {
    const auto& d = *config.plant.deviation;
    p.beta = smooth_deviation(config.robot, d.modes, d.seed);
    scale_deviation_to_mse(p, voltages, d.target_mse_cm2);
  }
  p.validate();
  return p;
}

void write_samples(const fs::path& dir, const std::vector<VoltageVector>& voltages,
                   const std::vector<ShapeCurve>& shapes) {
  prepare_dir(dir);
  Json manifest;
  manifest["samples"] = Json::array();
  for (std::size_t i = 0; i < voltages.size(); ++i) {
    const std::string file = "sample_" + std::to_string(i + 1) + ".csv";
    write_shape_csv(dir / file, shapes[i]);
    Json entry;
    entry["file"] = file;
    entry["v_volts"] = voltages[i].vec();
    manifest["samples"].push_back(entry);
  }
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

ShapeControlReport run_shape_control(const ScenarioConfig& config, const RunOptions& options) {
  ShapeModel model(config.robot);
  Plant plant(make_plant(config, config.run.targets));
  const ShapeCurve grid = model.grid();

  ShapeControlReport r;
  r.deviation_mse_cm2 = plant.params().beta.empty() ? 0.0 : deviation_mse(plant.params(), config.run.targets);
  if (options.target) {
    r.targets.push_back(resample(read_shape_csv(*options.target), grid));
  } else {
    for (const auto& v : config.run.targets) r.targets.push_back(model.predict_uncorrected(v));
  }

  auto control = [&](const ShapeModel& m, std::vector<ShapeCurve>& shapes, std::vector<double>& mse,
                     std::uint64_t stream) {
    for (std::size_t k = 0; k < r.targets.size(); ++k) {
      const auto cmd = solve_target_shape(r.targets[k], m, config.optimizer.box,
                                          minimize_options(config.optimizer, stream + k));
      if (!std::isfinite(cmd.loss)) throw SolverError("target " + std::to_string(k) + ": no finite loss");
      shapes.push_back(plant.sense(cmd.v, 0.0).shape);
      mse.push_back(shape_mse(shapes.back(), r.targets[k]));
      if (options.log) {
        *options.log << "target " << k << ": mse " << mse.back() << " cm^2\n";
      }
    }
  };

  control(model, r.pre_shapes, r.pre_mse_cm2, 0);

  const auto references = config.calibration ? config.calibration->references : default_references();
  std::vector<CalibrationSample> samples;
  std::vector<ShapeCurve> sensed;
  for (const auto& v : references) {
    sensed.push_back(plant.sense(v, 0.0).shape);
    samples.push_back({v, sensed.back(), model.predict_uncorrected(v)});
  }
  CorrectionField field(config.robot);
  const auto cal = config.calibration.value_or(CalibrationConfig{});
  field.set_learning_rate(cal.learning_rate.value_or(default_learning_rate(samples)));
  calibrate_batch(field, samples, cal.epochs);
  r.field = field;
  model.set_correction(field);

  control(model, r.post_shapes, r.post_mse_cm2, 1000);

  const fs::path dir = prepare_dir(config.run.output_dir);
  {
    auto out = open_out(dir / "shapes.csv");
    out << "target_index,x_cm,target_cm,pre_cm,post_cm\n";
    for (std::size_t k = 0; k < r.targets.size(); ++k) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        out << k << "," << csv::num(grid.x[i] * kCmPerM) << "," << csv::num(r.targets[k].y[i] * kCmPerM)
            << "," << csv::num(r.pre_shapes[k].y[i] * kCmPerM) << ","
            << csv::num(r.post_shapes[k].y[i] * kCmPerM) << "\n";
      }
    }
  }
  {
    auto out = open_out(dir / "mse.csv");
    out << "target_index,pre_mse_cm2,post_mse_cm2\n";
    for (std::size_t k = 0; k < r.targets.size(); ++k) {
      out << k << "," << csv::num(r.pre_mse_cm2[k]) << "," << csv::num(r.post_mse_cm2[k]) << "\n";
    }
  }
  write_field_csv(dir / "correction_field.csv", field, grid);
  write_samples(dir / "samples", references, sensed);

  Json results;
  results["pre_mse_cm2"] = r.pre_mse_cm2;
  results["post_mse_cm2"] = r.post_mse_cm2;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  results["mean_pre_mse_cm2"] = mean(r.pre_mse_cm2);
  results["mean_post_mse_cm2"] = mean(r.post_mse_cm2);
  results["deviation_mse_cm2"] = r.deviation_mse_cm2;
  write_metrics(dir, "shape-control", config, results);
  return r;
}

CrawlReport run_crawl(const ScenarioConfig& config, const SafetyLine& line, const fs::path& out_dir,
                      std::ostream* log) {
  const auto [start, end] = crawl_bounds(config, line);
  Plant plant(make_plant(config, config.calibration ? config.calibration->references : default_references()));
  const ShapeModel model = calibrated_model(config, plant, log);
  const int na = config.robot.n_actuators;

  const fs::path dir = prepare_dir(out_dir);
  auto traj = open_out(dir / "trajectory.csv");
  traj << "cycle,x0_cm,stride_cm,dy_min_cm,peak_cm" << voltage_header(na)
       << ",dy_max_cm,planned_dy_min_cm,fallback\n";
  auto snaps = open_out(dir / "snapshots.csv");
  snaps << "cycle,x_cm,y_cm,safety_cm\n";
  auto commands = open_out(dir / "commands.jsonl");

  CrawlReport report;
  double x0 = start;
  std::vector<double> previous;
  int stalled = 0;
  for (int cycle = 0; cycle < config.run.max_cycles && x0 < end; ++cycle) {
    const double sensed_x0 = plant.sense(VoltageVector::zeros(na), x0).x0;

    auto options = minimize_options(config.optimizer, static_cast<std::uint64_t>(cycle));
    if (config.optimizer.warm_start && !previous.empty()) options.initial_points.push_back(previous);
    const auto t0 = std::chrono::steady_clock::now();
    const ControlCommand bent = solve_roof_shape(line, sensed_x0, model, config.optimizer.box, options, config.run.loss);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (config.run.step_budget_s && elapsed > *config.run.step_budget_s) ++report.over_budget_steps;
    commands << command_json_line(bent) << "\n";

    // Plan the straightening step at the position the planned stride reaches.
    const VoltageVector flat_v = straight_posture(bent.v);
    ControlCommand straight;
    straight.v = flat_v;
    straight.predicted = model.predict(flat_v);
    straight.x0 = sensed_x0 + stride_per_cycle(bent.predicted, straight.predicted);
    const auto sev = evaluate_roof(straight.predicted, line, straight.x0, config.run.loss);
    straight.loss = sev.loss_cm;
    straight.dy_max_cm = sev.dy_max_cm;
    straight.dy_min_cm = sev.dy_min_cm;
    advance_cycle(sensed_x0, bent, straight);

    // Execute on the plant; clearance is judged on what the body really does.
    const ShapeCurve bent_true = plant.true_shape(bent.v);
    const ShapeCurve flat_true = plant.true_shape(flat_v);
    const double stride = stride_per_cycle(bent_true, flat_true);
    const auto bev = evaluate_roof(bent_true, line, x0, config.run.loss);
    const auto fev = evaluate_roof(flat_true, line, x0 + stride, config.run.loss);
    const bool violated = bev.violates() || fev.violates();
    if (violated) ++report.violations;

    CycleRecord rec;
    rec.cycle = cycle;
    rec.x0_cm = x0 * kCmPerM;
    rec.stride_cm = stride * kCmPerM;
    rec.dy_min_cm = bev.dy_min_cm;
    rec.dy_max_cm = std::max(bev.dy_max_cm, fev.dy_max_cm);
    rec.peak_cm = bent_true.peak() * kCmPerM;
    rec.planned_dy_min_cm = bent.dy_min_cm;
    rec.fallback = bent.fallback;
    rec.v = bent.v;
    traj << cycle << "," << csv::num(rec.x0_cm) << "," << csv::num(rec.stride_cm) << ","
         << csv::num(rec.dy_min_cm) << "," << csv::num(rec.peak_cm) << voltage_fields(rec.v) << ","
         << csv::num(rec.dy_max_cm) << "," << csv::num(rec.planned_dy_min_cm) << "," << (rec.fallback ? 1 : 0)
         << "\n";

    const bool last = x0 + stride >= end || cycle + 1 == config.run.max_cycles;
    if (cycle % config.run.snapshot_every == 0 || last || violated) {
      for (std::size_t i = 0; i < bent_true.size(); ++i) {
        const double xw = x0 + bent_true.x[i];
        snaps << cycle << "," << csv::num(xw * kCmPerM) << "," << csv::num(bent_true.y[i] * kCmPerM) << ","
              << csv::num(line.constraint_at(xw) * kCmPerM) << "\n";
      }
    }
    if (log && cycle % 50 == 0) {
      *log << "cycle " << cycle << " x0 " << rec.x0_cm << " cm stride " << rec.stride_cm << " cm gap "
           << rec.dy_min_cm << " cm\n";
    }
    report.cycles.push_back(std::move(rec));

    previous = bent.v.vec();
    stalled = stride > 0.0 ? 0 : stalled + 1;
    x0 += stride;
    if (stalled >= 20) {
      if (log) *log << "no progress for 20 cycles; stopping\n";
      break;
    }
  }
  report.final_x0_cm = x0 * kCmPerM;
  report.reached_end = x0 >= end;
  return report;
}

CalibrateReport run_calibrate(const ScenarioConfig& config, const fs::path& samples_dir, const fs::path& out_dir) {
  const fs::path manifest_path = samples_dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw InputError("missing " + manifest_path.string());
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest_path.string() + ": " + e.what());
  }
  Section top(&manifest, "manifest");
  if (!top.has("samples") || !top.at("samples").is_array()) throw InputError("manifest needs a samples array");
  top.finish();

  const ShapeModel model(config.robot);
  const ShapeCurve grid = model.grid();
  std::vector<CalibrationSample> samples;
  for (const auto& entry : manifest["samples"]) {
    Section s(&entry, "manifest.samples[]");
    const std::string file = s.text("file", "");
    if (file.empty()) throw InputError("sample entry without a file");
    if (!s.has("v_volts")) throw InputError("sample entry without v_volts");
    VoltageVector v(s.numbers("v_volts"));
    s.finish();
    if (static_cast<int>(v.size()) != config.robot.n_actuators) {
      throw InputError("sample " + file + " has the wrong number of voltages");
    }
    const ShapeCurve shape = read_shape_csv(samples_dir / file);
    if (std::abs(shape.length() - config.robot.length) > 1e-6) {
      throw InputError("sample " + file + " does not span the robot length");
    }
    samples.push_back({v, resample(shape, grid), model.predict_uncorrected(v)});
  }
  if (samples.empty()) throw InputError("no calibration samples");

  const auto cal = config.calibration.value_or(CalibrationConfig{});
  CorrectionField field(config.robot);
  field.set_learning_rate(cal.learning_rate.value_or(default_learning_rate(samples)));
  calibrate_batch(field, samples, cal.epochs);

  CalibrateReport r;
  r.field = field;
  const fs::path dir = prepare_dir(out_dir);
  auto out = open_out(dir / "residuals.csv");
  out << "sample_index,rms_before_cm,rms_after_cm,max_abs_before_cm,max_abs_after_cm\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const ShapeCurve fixed = corrected_shape(field, s.model_shape, s.v);
    double before = 0.0, after = 0.0, max_before = 0.0, max_after = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double db = (s.sensed.y[i] - s.model_shape.y[i]) * kCmPerM;
      const double da = (s.sensed.y[i] - fixed.y[i]) * kCmPerM;
      before += db * db;
      after += da * da;
      max_before = std::max(max_before, std::abs(db));
      max_after = std::max(max_after, std::abs(da));
    }
    r.rms_before_cm.push_back(std::sqrt(before / grid.size()));
    r.rms_after_cm.push_back(std::sqrt(after / grid.size()));
    out << k << "," << csv::num(r.rms_before_cm.back()) << "," << csv::num(r.rms_after_cm.back()) << ","
        << csv::num(max_before) << "," << csv::num(max_after) << "\n";
  }
  write_field_csv(dir / "correction_field.csv", field, grid);

  Json results;
  results["samples"] = samples.size();
  results["learning_rate"] = field.learning_rate();
  results["epochs"] = cal.epochs;
  results["rms_before_cm"] = r.rms_before_cm;
  results["rms_after_cm"] = r.rms_after_cm;
  write_metrics(dir, "calibrate", config, results);
  return r;
}

int cmd_shape_control(const ScenarioConfig& config, const RunOptions& options) {
  run_shape_control(config, options);
  return 0;
}

int cmd_crawl(const ScenarioConfig& config, const RunOptions& options) {
  if (!config.roof) throw InputError("crawl needs a roof (config roof section or --roof)");
  const auto report = run_crawl(config, *config.roof, config.run.output_dir, options.log);
  Json results = crawl_summary(report);
  if (config.run.step_budget_s) results["over_budget_steps"] = report.over_budget_steps;
  write_metrics(config.run.output_dir, "crawl", config, results);
  return crawl_exit_code(report);
}

int cmd_speed_map(const ScenarioConfig& config, const RunOptions& options) {
  if (config.run.heights.empty()) throw InputError("height grid is empty");
  const ShapeModel model(config.robot);
  const auto table = speed_vs_height_curve(model, config.run.heights);
  const fs::path dir = prepare_dir(config.run.output_dir);
  bool monotone = true;
  {
    auto out = open_out(dir / "speed_vs_height.csv");
    out << "height_cm,stride_cm\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
      out << csv::num(table[i].height * kCmPerM) << "," << csv::num(table[i].stride * kCmPerM) << "\n";
      if (i > 0 && table[i].height > table[i - 1].height && table[i].stride < table[i - 1].stride) {
        monotone = false;
      }
    }
  }
  Json results;
  results["heights"] = table.size();
  results["monotone"] = monotone;

  if (config.roof) {
    const auto [start, end] = crawl_bounds(config, *config.roof);
    auto out = open_out(dir / "speed_vs_position.csv");
    out << "x0_cm,stride_cm,dy_min_cm,peak_cm" << voltage_header(config.robot.n_actuators) << "\n";
    std::vector<double> previous;
    int index = 0;
    const int steps = static_cast<int>(std::floor((end - start) / config.run.position_step + 1e-9));
    for (int i = 0; i <= steps; ++i) {
      const double x0 = start + i * config.run.position_step;
      auto opts = minimize_options(config.optimizer, static_cast<std::uint64_t>(index++));
      if (config.optimizer.warm_start && !previous.empty()) opts.initial_points.push_back(previous);
      const auto cmd = solve_roof_shape(*config.roof, x0, model, config.optimizer.box, opts, config.run.loss);
      const double stride = stride_per_cycle(cmd.predicted, model.predict(straight_posture(cmd.v)));
      out << csv::num(x0 * kCmPerM) << "," << csv::num(stride * kCmPerM) << "," << csv::num(cmd.dy_min_cm) << ","
          << csv::num(cmd.peak_cm()) << voltage_fields(cmd.v) << "\n";
      previous = cmd.v.vec();
      if (options.log && i % 10 == 0) *options.log << "x0 " << x0 * kCmPerM << " cm stride " << stride * kCmPerM << "\n";
    }
    results["positions"] = steps + 1;
  }
  write_metrics(dir, "speed-map", config, results);
  return monotone ? 0 : static_cast<int>(ErrorKind::Solver);
}

int cmd_calibrate(const ScenarioConfig& config, const RunOptions& options) {
  if (!options.samples_dir) throw InputError("calibrate needs --samples DIR");
  run_calibrate(config, *options.samples_dir, config.run.output_dir);
  return 0;
}

int cmd_simulate_roofs(const ScenarioConfig& config, const RunOptions& options) {
  const double margin = config.roof ? config.roof->margin() : 1e-3;
  Json results;
  int code = 0;
  for (const char* name : {"slant", "sine"}) {
    const SafetyLine line = builtin_roof(name, margin);
    ScenarioConfig local = config;
    local.run.start_x0.reset();
    local.run.end_x0.reset();
    if (options.log) *options.log << "roof " << name << "\n";
    const auto report = run_crawl(local, line, config.run.output_dir / name, options.log);
    results[name] = crawl_summary(report);
    code = std::max(code, crawl_exit_code(report));
  }
  write_metrics(config.run.output_dir, "simulate-roofs", config, results);
  return code;
}

int run_command(const std::string& command, const Json& config_doc, const RunOptions& options,
                std::ostream& err) {
  try {
    ScenarioConfig config = parse_config(config_doc);
    apply_overrides(config, options);
    if (command == "shape-control") return cmd_shape_control(config, options);
    if (command == "crawl") return cmd_crawl(config, options);
    if (command == "speed-map") return cmd_speed_map(config, options);
    if (command == "calibrate") return cmd_calibrate(config, options);
    if (command == "simulate-roofs") return cmd_simulate_roofs(config, options);
    throw InputError("unknown command " + command);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Input);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Input);
  }
}

}  // namespace scenario
}  // namespace softshape

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "controller.hpp"
#include "optimizer.hpp"
#include "plant.hpp"
#include "robot.hpp"
#include "roofs.hpp"

namespace softshape {

const char* version_string();

namespace scenario {

using Json = nlohmann::ordered_json;

struct DeviationConfig {
  int modes = 3;
  std::uint64_t seed = 11;
  double target_mse_cm2 = 0.05;  // mean over the run targets
};

struct PlantConfig {
  double stiffness_scale = 1.0;
  double gain_scale = 1.0;
  double noise_cm = 0.02;
  std::uint64_t seed = 1;
  std::optional<DeviationConfig> deviation;
};

struct OptimizerConfig {
  BoxDomain box = BoxDomain::uniform(5, -1500.0, 500.0);
  int budget = 60;
  int init_samples = 10;
  int candidates = 1024;
  std::uint64_t seed = 1;
  bool warm_start = true;
};

struct CalibrationConfig {
  std::optional<double> learning_rate;  // default_learning_rate() when unset
  int epochs = 200;
  std::vector<VoltageVector> references;
};

struct RunConfig {
  std::optional<double> start_x0;  // m; roof begin by default
  std::optional<double> end_x0;    // m; roof end minus body length by default
  int max_cycles = 2000;
  std::filesystem::path output_dir = "out";
  std::vector<VoltageVector> targets;
  std::vector<double> heights;  // m
  double position_step = 0.01;  // m
  int snapshot_every = 25;
  std::optional<double> step_budget_s;
  RoofLossConfig loss;
};

/// Parsed scenario document. Interface units are cm and volts; everything
/// stored here is SI.
struct ScenarioConfig {
  RobotParams robot;
  PlantConfig plant;
  OptimizerConfig optimizer;
  std::optional<CalibrationConfig> calibration;
  std::optional<SafetyLine> roof;
  RunConfig run;
  Json echo;  // the document as given, after CLI overrides
};

/// Throws InputError on unknown keys, wrong types or invalid values.
ScenarioConfig parse_config(const Json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Single sections, as used by the C interface.
RobotParams parse_robot_section(const Json& section);
SafetyLine parse_roof_section(const Json& section);

/// step, slant, sine or file:PATH. Built-ins use a 1 mm margin.
SafetyLine builtin_roof(const std::string& name, double margin = 1e-3);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> target;
  std::optional<std::string> roof;
  std::optional<std::filesystem::path> samples_dir;
  std::optional<std::uint64_t> seed;
  std::ostream* log = nullptr;
};

/// Applies --out, --seed and --roof to a parsed config.
void apply_overrides(ScenarioConfig& config, const RunOptions& options);

/// Plant for a scenario; the deviation is scaled over `voltages`.
PlantParams make_plant(const ScenarioConfig& config, const std::vector<VoltageVector>& voltages);

std::vector<VoltageVector> default_targets();
std::vector<VoltageVector> default_references();

struct ShapeControlReport {
  std::vector<double> pre_mse_cm2;
  std::vector<double> post_mse_cm2;
  std::vector<ShapeCurve> targets;
  std::vector<ShapeCurve> pre_shapes;
  std::vector<ShapeCurve> post_shapes;
  double deviation_mse_cm2 = 0.0;
  std::optional<CorrectionField> field;
};

struct CycleRecord {
  int cycle = 0;
  double x0_cm = 0.0;
  double stride_cm = 0.0;
  double dy_min_cm = 0.0;  // executed bent shape against the safety line
  double dy_max_cm = 0.0;
  double peak_cm = 0.0;
  double planned_dy_min_cm = 0.0;
  bool fallback = false;
  VoltageVector v;
};

struct CrawlReport {
  std::vector<CycleRecord> cycles;
  int violations = 0;
  bool reached_end = false;
  double final_x0_cm = 0.0;
  int over_budget_steps = 0;
};

struct CalibrateReport {
  std::vector<double> rms_before_cm;
  std::vector<double> rms_after_cm;
  std::optional<CorrectionField> field;
};

ShapeControlReport run_shape_control(const ScenarioConfig& config, const RunOptions& options);
CrawlReport run_crawl(const ScenarioConfig& config, const SafetyLine& line,
                      const std::filesystem::path& out_dir, std::ostream* log = nullptr);
CalibrateReport run_calibrate(const ScenarioConfig& config, const std::filesystem::path& samples_dir,
                              const std::filesystem::path& out_dir);

/// Sample directory: manifest.json {"samples": [{"file": "...", "v_volts": [...]}]}
/// next to "x_cm,y_cm" shape CSVs.
void write_samples(const std::filesystem::path& dir, const std::vector<VoltageVector>& voltages,
                   const std::vector<ShapeCurve>& shapes);

/// Subcommand entry points. Return the process exit code; configuration and
/// input problems surface as InputError, solver failures as SolverError.
int cmd_shape_control(const ScenarioConfig& config, const RunOptions& options);
int cmd_crawl(const ScenarioConfig& config, const RunOptions& options);
int cmd_speed_map(const ScenarioConfig& config, const RunOptions& options);
int cmd_calibrate(const ScenarioConfig& config, const RunOptions& options);
int cmd_simulate_roofs(const ScenarioConfig& config, const RunOptions& options);

/// Dispatch by subcommand name; catches softshape errors and maps them to
/// exit codes, writing the message to `err`.
int run_command(const std::string& command, const Json& config_doc, const RunOptions& options,
                std::ostream& err);

}  // namespace scenario
}  // namespace softshape

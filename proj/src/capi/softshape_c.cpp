#include "softshape/softshape.h"

#include <cmath>
#include <iostream>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "controller.hpp"
#include "errors.hpp"
#include "gait.hpp"
#include "scenario.hpp"
#include "shape_model.hpp"

using namespace softshape;

struct ss_model {
  ShapeModel model;
};

struct ss_roof {
  SafetyLine line;
};

namespace {

thread_local std::string g_last_error;

ss_status fail(ss_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
ss_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const Error& e) {
    return fail(static_cast<ss_status>(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SS_ERR_INPUT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SS_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw InputError(message);
}

VoltageVector volts_of(const ss_model* m, const double* volts, size_t n) {
  require(volts != nullptr, "voltage array is null");
  require(n == static_cast<size_t>(m->model.params().n_actuators), "wrong number of voltages");
  return VoltageVector(std::vector<double>(volts, volts + n));
}

void copy_y(const ShapeCurve& shape, double* y, size_t n) {
  require(y != nullptr, "output array is null");
  require(n == shape.size(), "output array length differs from the model grid");
  std::copy(shape.y.begin(), shape.y.end(), y);
}

BoxDomain box_of(const ss_model* m, const ss_optimizer_options* o) {
  const auto n = static_cast<std::size_t>(m->model.params().n_actuators);
  BoxDomain box = BoxDomain::uniform(n, -1500.0, 500.0, o && o->symmetric);
  if (o && o->lower) box.lower.assign(o->lower, o->lower + n);
  if (o && o->upper) box.upper.assign(o->upper, o->upper + n);
  box.validate();
  return box;
}

MinimizeOptions minimize_of(const ss_model* m, const ss_optimizer_options* o) {
  MinimizeOptions opts;
  if (!o) return opts;
  opts.budget = o->budget;
  opts.init_samples = o->init_samples;
  opts.seed = o->seed;
  if (o->warm_start) {
    const auto n = static_cast<std::size_t>(m->model.params().n_actuators);
    opts.initial_points.emplace_back(o->warm_start, o->warm_start + n);
  }
  return opts;
}

void fill_info(const ControlCommand& cmd, ss_command_info* info) {
  if (!info) return;
  info->loss = cmd.loss;
  info->x0 = cmd.x0;
  info->dy_max_cm = cmd.dy_max_cm;
  info->dy_min_cm = cmd.dy_min_cm;
  info->peak_cm = cmd.peak_cm();
  info->fallback = cmd.fallback ? 1 : 0;
  info->evaluations = cmd.evaluations;
}

}  // namespace

extern "C" {

const char* ss_version(void) { return version_string(); }

const char* ss_last_error(void) { return g_last_error.c_str(); }

void ss_optimizer_options_default(ss_optimizer_options* options) {
  if (!options) return;
  const MinimizeOptions d;
  *options = ss_optimizer_options{};
  options->budget = d.budget;
  options->init_samples = d.init_samples;
  options->seed = d.seed;
}

void ss_run_options_default(ss_run_options* options) {
  if (options) *options = ss_run_options{};
}

ss_status ss_model_create(const char* robot_json, ss_model** out) {
  return guarded([&] {
    require(out != nullptr, "output handle is null");
    *out = nullptr;
    RobotParams params;
    if (robot_json) params = scenario::parse_robot_section(scenario::Json::parse(robot_json));
    *out = new ss_model{ShapeModel(params)};
    return SS_OK;
  });
}

void ss_model_destroy(ss_model* model) { delete model; }

size_t ss_model_nodes(const ss_model* model) {
  return model ? static_cast<size_t>(model->model.params().grid_nodes) : 0;
}

size_t ss_model_actuators(const ss_model* model) {
  return model ? static_cast<size_t>(model->model.params().n_actuators) : 0;
}

double ss_model_length(const ss_model* model) { return model ? model->model.params().length : 0.0; }

ss_status ss_model_solve(const ss_model* model, const double* volts, size_t n_volts, ss_ground ground,
                         double* y, double* pressure, size_t n_nodes) {
  return guarded([&] {
    require(model != nullptr, "model handle is null");
    const auto sol = solve_shape(model->model.params(), volts_of(model, volts, n_volts),
                                 ground == SS_GROUND_OFF ? Ground::Off : Ground::On);
    copy_y(sol.shape, y, n_nodes);
    if (pressure) std::copy(sol.pressure.begin(), sol.pressure.end(), pressure);
    return SS_OK;
  });
}

ss_status ss_model_predict(const ss_model* model, const double* volts, size_t n_volts, double* y,
                           size_t n_nodes) {
  return guarded([&] {
    require(model != nullptr, "model handle is null");
    copy_y(model->model.predict(volts_of(model, volts, n_volts)), y, n_nodes);
    return SS_OK;
  });
}

ss_status ss_model_calibrate(ss_model* model, const double* volts, const double* sensed_y, size_t n_samples,
                             int epochs, double learning_rate) {
  return guarded([&] {
    require(model != nullptr, "model handle is null");
    require(volts != nullptr && sensed_y != nullptr, "sample arrays are null");
    require(n_samples > 0, "no calibration samples");
    require(epochs > 0, "epochs must be positive");
    const auto& p = model->model.params();
    const auto na = static_cast<size_t>(p.n_actuators);
    const auto nn = static_cast<size_t>(p.grid_nodes);
    std::vector<CalibrationSample> samples;
    for (size_t s = 0; s < n_samples; ++s) {
      VoltageVector v(std::vector<double>(volts + s * na, volts + (s + 1) * na));
      ShapeCurve sensed = model->model.grid();
      std::copy(sensed_y + s * nn, sensed_y + (s + 1) * nn, sensed.y.begin());
      sensed.validate();
      samples.push_back({v, sensed, model->model.predict_uncorrected(v)});
    }
    CorrectionField field = model->model.correction().value_or(CorrectionField(p));
    field.set_learning_rate(learning_rate > 0.0 ? learning_rate : default_learning_rate(samples));
    calibrate_batch(field, samples, epochs);
    model->model.set_correction(std::move(field));
    return SS_OK;
  });
}

ss_status ss_model_clear_correction(ss_model* model) {
  return guarded([&] {
    require(model != nullptr, "model handle is null");
    model->model.clear_correction();
    return SS_OK;
  });
}

ss_status ss_model_write_correction(const ss_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "null argument");
    const auto& corr = model->model.correction();
    write_field_csv(std::filesystem::path(path), corr.value_or(CorrectionField(model->model.params())),
                    model->model.grid());
    return SS_OK;
  });
}

ss_status ss_chord_shortening(const double* y, size_t n_nodes, double length, double* out) {
  return guarded([&] {
    require(y != nullptr && out != nullptr, "null argument");
    require(n_nodes >= 3, "need at least three nodes");
    ShapeCurve shape = ShapeCurve::flat(length, static_cast<int>(n_nodes));
    std::copy(y, y + n_nodes, shape.y.begin());
    shape.validate();
    *out = chord_shortening(shape);
    return SS_OK;
  });
}

ss_status ss_stride(const ss_model* model, const double* bent_volts, size_t n_volts, double* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    const auto v = volts_of(model, bent_volts, n_volts);
    *out = stride_per_cycle(model->model.predict(v), model->model.predict(straight_posture(v)));
    return SS_OK;
  });
}

ss_status ss_roof_create(const char* roof_json, ss_roof** out) {
  return guarded([&] {
    require(out != nullptr && roof_json != nullptr, "null argument");
    *out = nullptr;
    *out = new ss_roof{scenario::parse_roof_section(scenario::Json::parse(roof_json))};
    return SS_OK;
  });
}

ss_status ss_roof_create_builtin(const char* name, double margin, ss_roof** out) {
  return guarded([&] {
    require(out != nullptr && name != nullptr, "null argument");
    *out = nullptr;
    *out = new ss_roof{scenario::builtin_roof(name, margin)};
    return SS_OK;
  });
}

void ss_roof_destroy(ss_roof* roof) { delete roof; }

ss_status ss_roof_safety_height(const ss_roof* roof, double x, double* out) {
  return guarded([&] {
    require(roof != nullptr && out != nullptr, "null argument");
    *out = roof->line.constraint_at(x);
    return SS_OK;
  });
}

ss_status ss_solve_target(const ss_model* model, const double* target_y, size_t n_nodes,
                          const ss_optimizer_options* options, double* volts_out, size_t n_volts,
                          ss_command_info* info) {
  return guarded([&] {
    require(model != nullptr && target_y != nullptr && volts_out != nullptr, "null argument");
    require(n_volts == ss_model_actuators(model), "wrong number of voltages");
    ShapeCurve target = model->model.grid();
    require(n_nodes == target.size(), "target length differs from the model grid");
    std::copy(target_y, target_y + n_nodes, target.y.begin());
    const auto cmd = solve_target_shape(target, model->model, box_of(model, options), minimize_of(model, options));
    std::copy(cmd.v.vec().begin(), cmd.v.vec().end(), volts_out);
    fill_info(cmd, info);
    return SS_OK;
  });
}

ss_status ss_solve_roof(const ss_model* model, const ss_roof* roof, double x0, const ss_optimizer_options* options,
                        double* volts_out, size_t n_volts, ss_command_info* info) {
  return guarded([&] {
    require(model != nullptr && roof != nullptr && volts_out != nullptr, "null argument");
    require(n_volts == ss_model_actuators(model), "wrong number of voltages");
    const auto cmd = solve_roof_shape(roof->line, x0, model->model, box_of(model, options),
                                      minimize_of(model, options));
    std::copy(cmd.v.vec().begin(), cmd.v.vec().end(), volts_out);
    fill_info(cmd, info);
    return SS_OK;
  });
}

ss_status ss_run_scenario(const char* command, const char* config_json, const ss_run_options* options) {
  return guarded([&] {
    require(command != nullptr, "command is null");
    scenario::Json doc = scenario::Json::object();
    if (config_json && *config_json) {
      try {
        doc = scenario::Json::parse(config_json);
      } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
      }
    }
    scenario::RunOptions run;
    if (options) {
      if (options->out_dir) run.out_dir = options->out_dir;
      if (options->target_csv) run.target = options->target_csv;
      if (options->roof) run.roof = options->roof;
      if (options->samples_dir) run.samples_dir = options->samples_dir;
      if (options->has_seed) run.seed = options->seed;
      if (options->verbose) run.log = &std::cerr;
    }
    std::ostringstream err;
    const int code = scenario::run_command(command, doc, run, err);
    if (code != 0) {
      const std::string msg = err.str();
      g_last_error = msg.empty() ? "scenario assertions failed" : msg.substr(0, msg.find_last_not_of('\n') + 1);
    }
    return static_cast<ss_status>(code);
  });
}

}  // extern "C"

#include "controller.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "errors.hpp"
#include "shape_model.hpp"

namespace softshape {

ShapeModel::ShapeModel(RobotParams params) : params_(std::move(params)) { params_.validate(); }

ShapeModel::ShapeModel(RobotParams params, CorrectionField correction) : ShapeModel(std::move(params)) {
  set_correction(std::move(correction));
}

void ShapeModel::set_correction(CorrectionField correction) {
  if (correction.nodes() != params_.grid_nodes || correction.actuators() != params_.n_actuators) {
    throw InputError("correction field does not match the robot grid");
  }
  correction_ = std::move(correction);
}

ShapeCurve ShapeModel::predict_uncorrected(const VoltageVector& v) const {
  return solve_shape(params_, v).shape;
}

ShapeCurve ShapeModel::predict(const VoltageVector& v) const {
  auto shape = predict_uncorrected(v);
  return correction_ ? corrected_shape(*correction_, shape, v) : shape;
}

void RoofLossConfig::validate() const {
  if (!(penalty_cm > 0.0)) throw InputError("roof penalty must be positive");
  if (sample_count < 2) throw InputError("roof loss needs at least two footprint samples");
}

double shape_loss(const ShapeCurve& predicted, const ShapeCurve& target) {
  if (!predicted.same_grid(target, 1e-9)) throw InputError("shape grids differ");
  const std::size_t n = predicted.size();
  const double dx_cm = predicted.spacing() * kCmPerM;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (predicted.y[i] - target.y[i]) * kCmPerM;
    s += (i == 0 || i == n - 1 ? 0.5 : 1.0) * d * d;
  }
  return s * dx_cm;
}

double shape_loss(const VoltageVector& v, const ShapeCurve& target, const ShapeModel& model) {
  return shape_loss(model.predict(v), target);
}

RoofEvaluation evaluate_roof(const ShapeCurve& robot, const SafetyLine& line, double x0,
                             const RoofLossConfig& config) {
  config.validate();
  const ShapeCurve samples =
      static_cast<int>(robot.size()) == config.sample_count
          ? robot
          : resample(robot, ShapeCurve::flat(robot.length(), config.sample_count));
  RoofEvaluation ev;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double safety = line.constraint_at(x0 + samples.x[i]);
    if (!std::isfinite(safety)) continue;
    const double dy = (samples.y[i] - safety) * kCmPerM;
    ev.dy_max_cm = std::max(ev.dy_max_cm, dy);
    ev.dy_min_cm = std::min(ev.dy_min_cm, std::abs(dy));
    ++ev.constrained_samples;
  }
  if (ev.constrained_samples == 0) {
    ev.loss_cm = 0.0;
  } else if (ev.dy_max_cm > 0.0) {
    ev.loss_cm = ev.dy_max_cm + config.penalty_cm;
  } else {
    ev.loss_cm = ev.dy_min_cm;
  }
  return ev;
}

RoofEvaluation roof_loss(const VoltageVector& v, const SafetyLine& line, double x0,
                         const ShapeModel& model, const RoofLossConfig& config) {
  return evaluate_roof(model.predict(v), line, x0, config);
}

namespace {

void check_domain(const ShapeModel& model, const BoxDomain& domain) {
  domain.validate();
  if (static_cast<int>(domain.dims()) != model.params().n_actuators) {
    throw InputError("voltage box dimension does not match actuator count");
  }
}

}  // namespace

ControlCommand solve_target_shape(const ShapeCurve& target, const ShapeModel& model,
                                  const BoxDomain& domain, const MinimizeOptions& options) {
  check_domain(model, domain);
  const ShapeCurve grid = model.grid();
  const ShapeCurve on_grid = target.same_grid(grid, 1e-9) ? target : resample(target, grid);
  on_grid.validate();

  auto loss = [&](std::span<const double> v) {
    return shape_loss(VoltageVector(std::vector<double>(v.begin(), v.end())), on_grid, model);
  };
  // The rest posture is always worth one probe: it realizes the flat body exactly.
  MinimizeOptions seeded = options;
  const std::vector<double> rest(domain.dims(), 0.0);
  if (seeded.initial_points.empty() && domain.contains(rest)) seeded.initial_points.push_back(rest);
  const auto result = minimize(loss, domain, seeded);
  ControlCommand cmd;
  cmd.v = VoltageVector(result.best_v);
  cmd.predicted = model.predict(cmd.v);
  cmd.loss = result.best_loss;
  cmd.evaluations = static_cast<int>(result.history.size());
  return cmd;
}

ControlCommand solve_roof_shape(const SafetyLine& line, double x0, const ShapeModel& model,
                                const BoxDomain& domain, const MinimizeOptions& options,
                                const RoofLossConfig& config) {
  check_domain(model, domain);
  config.validate();

  auto finish = [&](VoltageVector v, bool fallback, int evaluations) {
    ControlCommand cmd;
    cmd.v = std::move(v);
    cmd.predicted = model.predict(cmd.v);
    const auto ev = evaluate_roof(cmd.predicted, line, x0, config);
    cmd.loss = ev.loss_cm;
    cmd.x0 = x0;
    cmd.dy_max_cm = ev.dy_max_cm;
    cmd.dy_min_cm = ev.dy_min_cm;
    cmd.fallback = fallback;
    cmd.evaluations = evaluations;
    return cmd;
  };
  const auto flat = VoltageVector::zeros(model.params().n_actuators);
  if (!line.feasible()) return finish(flat, true, 0);

  auto loss = [&](std::span<const double> v) {
    return roof_loss(VoltageVector(std::vector<double>(v.begin(), v.end())), line, x0, model, config)
        .loss_cm;
  };
  // The penalty plateau sits c above the clearances; compare on a log scale.
  MinimizeOptions warped = options;
  warped.log_warp = true;
  const auto result = minimize(loss, domain, warped);
  const int evals = static_cast<int>(result.history.size());
  if (!(result.best_loss < config.penalty_cm)) return finish(flat, true, evals);
  return finish(VoltageVector(result.best_v), false, evals);
}

std::string command_json_line(const ControlCommand& command) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["x0_cm"] = command.x0 * kCmPerM;
  j["v_volts"] = command.v.vec();
  j["loss"] = finite_or_null(command.loss);
  j["dy_max_cm"] = finite_or_null(command.dy_max_cm);
  j["dy_min_cm"] = finite_or_null(command.dy_min_cm);
  j["peak_cm"] = command.peak_cm();
  return j.dump();
}

}  // namespace softshape

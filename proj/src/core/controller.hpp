#pragma once

#include <limits>
#include <optional>
#include <string>

#include "calibration.hpp"
#include "optimizer.hpp"
#include "robot.hpp"
#include "roofs.hpp"

namespace softshape {

/// Physics model plus the optional calibrated linear correction; predict()
/// returns the shape the controller plans with.
class ShapeModel {
 public:
  explicit ShapeModel(RobotParams params);
  ShapeModel(RobotParams params, CorrectionField correction);

  const RobotParams& params() const { return params_; }
  const std::optional<CorrectionField>& correction() const { return correction_; }
  void set_correction(CorrectionField correction);
  void clear_correction() { correction_.reset(); }

  ShapeCurve grid() const { return ShapeCurve::flat(params_); }
  ShapeCurve predict_uncorrected(const VoltageVector& v) const;
  ShapeCurve predict(const VoltageVector& v) const;

 private:
  RobotParams params_;
  std::optional<CorrectionField> correction_;
};

struct RoofLossConfig {
  double penalty_cm = 1000.0;  // c
  int sample_count = 201;      // footprint samples

  void validate() const;
};

/// Clearance figures for a shape at world position x0, in cm.
struct RoofEvaluation {
  double loss_cm = 0.0;
  double dy_max_cm = -std::numeric_limits<double>::infinity();  // max(y - safety)
  double dy_min_cm = std::numeric_limits<double>::infinity();   // min |y - safety|
  int constrained_samples = 0;

  bool violates() const { return dy_max_cm > 0.0; }
};

struct ControlCommand {
  VoltageVector v;
  ShapeCurve predicted;
  double loss = 0.0;
  double x0 = 0.0;  // m
  double dy_max_cm = std::numeric_limits<double>::quiet_NaN();
  double dy_min_cm = std::numeric_limits<double>::quiet_NaN();
  bool fallback = false;  // no admissible probe was found
  int evaluations = 0;

  double peak_cm() const { return predicted.peak() * kCmPerM; }
};

/// int (y - y_target)^2 dx over the body by the trapezoid rule, cm^3.
double shape_loss(const ShapeCurve& predicted, const ShapeCurve& target);
double shape_loss(const VoltageVector& v, const ShapeCurve& target, const ShapeModel& model);

/// Collision-aware clearance loss over the footprint [x0, x0 + length]:
/// dy_max + c when any sample sits above the safety line, otherwise the
/// closest approach |dy|_min. Samples without roof overhead are unconstrained.
RoofEvaluation evaluate_roof(const ShapeCurve& robot, const SafetyLine& line, double x0,
                             const RoofLossConfig& config = {});
RoofEvaluation roof_loss(const VoltageVector& v, const SafetyLine& line, double x0,
                         const ShapeModel& model, const RoofLossConfig& config = {});

ControlCommand solve_target_shape(const ShapeCurve& target, const ShapeModel& model,
                                  const BoxDomain& domain, const MinimizeOptions& options = {});

/// Falls back to V = 0 with `fallback` set when the safety line is infeasible
/// or no probe clears it.
ControlCommand solve_roof_shape(const SafetyLine& line, double x0, const ShapeModel& model,
                                const BoxDomain& domain, const MinimizeOptions& options = {},
                                const RoofLossConfig& config = {});

/// {x0_cm, v_volts[], loss, dy_max_cm, dy_min_cm, peak_cm}; non-finite
/// clearances are written as null.
std::string command_json_line(const ControlCommand& command);

}  // namespace softshape

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "robot.hpp"

namespace softshape {

/// Per-node linear correction alpha(x) in cm/V, so that the corrected shape is
/// y_model(x) + alpha(x)^T V. Starts at zero.
class CorrectionField {
 public:
  CorrectionField(int nodes, int actuators, double learning_rate = 1e-6);
  explicit CorrectionField(const RobotParams& params, double learning_rate = 1e-6)
      : CorrectionField(params.grid_nodes, params.n_actuators, learning_rate) {}

  int nodes() const { return nodes_; }
  int actuators() const { return actuators_; }

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double eta);

  double alpha(int node, int k) const { return table_[index(node, k)]; }
  double& alpha(int node, int k) { return table_[index(node, k)]; }
  std::span<const double> coefficients(int node) const {
    return {table_.data() + static_cast<std::size_t>(node) * actuators_,
            static_cast<std::size_t>(actuators_)};
  }

  /// alpha(node)^T V, cm.
  double correction_cm(int node, const VoltageVector& v) const;

 private:
  std::size_t index(int node, int k) const {
    return static_cast<std::size_t>(node) * actuators_ + k;
  }

  int nodes_;
  int actuators_;
  double learning_rate_;
  std::vector<double> table_;  // nodes x actuators
};

/// One vision measurement next to the model prediction at the same voltages.
struct CalibrationSample {
  VoltageVector v;
  ShapeCurve sensed;       // y_robot
  ShapeCurve model_shape;  // uncorrected model
};

ShapeCurve corrected_shape(const CorrectionField& field, const ShapeCurve& model_shape,
                           const VoltageVector& v);

/// One LMS step at every node: alpha <- alpha - eta (alpha^T V - dy) V, where
/// dy = y_robot - y_model in cm.
void lms_update(CorrectionField& field, const CalibrationSample& sample);

/// `epochs` passes of lms_update over `samples` in the given order.
void calibrate_batch(CorrectionField& field, std::span<const CalibrationSample> samples, int epochs);

/// 0.5 / max ||V||^2 over the samples.
double default_learning_rate(std::span<const CalibrationSample> samples);

/// "x_cm,a1..an" with the model grid spacing supplied by `grid`.
void write_field_csv(std::ostream& out, const CorrectionField& field, const ShapeCurve& grid);
void write_field_csv(const std::filesystem::path& path, const CorrectionField& field,
                     const ShapeCurve& grid);
CorrectionField read_field_csv(std::istream& in, double learning_rate = 1e-6);
CorrectionField read_field_csv(const std::filesystem::path& path, double learning_rate = 1e-6);

}  // namespace softshape

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "robot.hpp"
#include "shape_model.hpp"

namespace softshape {

/// Simulated robot: the model with perturbed parameters, a linear shape
/// deviation beta(x)^T V, and Gaussian vision noise.
struct PlantParams {
  RobotParams base;
  std::vector<double> beta;  // nodes x actuators, cm/V; empty means none
  double stiffness_scale = 1.0;
  double gain_scale = 1.0;
  double noise_cm = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
  /// Base parameters with the stiffness and gain scales applied.
  RobotParams effective() const;
};

/// True (noise-free) plant shape.
ShapeCurve plant_shape(const PlantParams& plant, const VoltageVector& v, Ground ground = Ground::On);

struct SensedShape {
  ShapeCurve shape;
  double x0 = 0.0;  // world position of the rear end, m
};

/// Plant shape plus i.i.d. N(0, noise^2) per node. Draw `counter` of the
/// plant's seeded noise stream; the same (seed, counter) gives the same output.
SensedShape sense(const PlantParams& plant, const VoltageVector& v, double x0, std::uint64_t counter);

/// Owns the draw counter.
class Plant {
 public:
  explicit Plant(PlantParams params) : params_(std::move(params)) { params_.validate(); }

  const PlantParams& params() const { return params_; }
  ShapeCurve true_shape(const VoltageVector& v) const { return plant_shape(params_, v); }
  SensedShape sense(const VoltageVector& v, double x0) {
    return softshape::sense(params_, v, x0, counter_++);
  }
  std::uint64_t draws() const { return counter_; }

 private:
  PlantParams params_;
  std::uint64_t counter_ = 0;
};

/// Seeded smooth deviation field: each actuator's coefficient profile is a
/// short random cosine series over the body. Unscaled, cm/V.
std::vector<double> smooth_deviation(const RobotParams& params, int modes, std::uint64_t seed);

/// Mean over `voltages` of the node-averaged (beta^T V)^2, cm^2.
double deviation_mse(const PlantParams& plant, std::span<const VoltageVector> voltages);

/// Rescales beta so deviation_mse over `voltages` equals `mse_cm2`.
void scale_deviation_to_mse(PlantParams& plant, std::span<const VoltageVector> voltages, double mse_cm2);

}  // namespace softshape

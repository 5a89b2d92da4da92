#pragma once

// Synthetic linear-deviation calibration, shared by the unit suite and the
// acceptance runner.

#include <cmath>
#include <vector>

#include "calibration.hpp"
#include "oracles.hpp"
#include "plant.hpp"
#include "shape_model.hpp"

namespace props {

struct LinearPlantCase {
  softshape::RobotParams params;
  std::vector<double> beta;  // nodes x actuators, cm/V
  std::vector<softshape::VoltageVector> volts;
  std::vector<softshape::CalibrationSample> samples;
};

// beta drawn from the plant's smooth deviation generator, scaled to a few
// millimetres at the training voltages; no sensor noise.
inline LinearPlantCase linear_plant_case(std::uint64_t seed) {
  using namespace softshape;
  LinearPlantCase c;
  c.beta = smooth_deviation(c.params, 3, seed);
  for (auto& b : c.beta) b *= 1e-4;
  oracle::Gen gen(seed + 1);
  for (int k = 0; k < c.params.n_actuators; ++k) {
    std::vector<double> v(static_cast<std::size_t>(c.params.n_actuators));
    for (auto& e : v) e = gen.uniform(-100.0, 100.0);
    v[static_cast<std::size_t>(k)] += k % 2 ? -600.0 : 400.0;
    c.volts.emplace_back(std::move(v));
  }
  PlantParams plant;
  plant.base = c.params;
  plant.beta = c.beta;
  plant.noise_cm = 0.0;
  for (const auto& v : c.volts)
    c.samples.push_back({v, plant_shape(plant, v), solve_shape(c.params, v).shape});
  return c;
}

// Worst node error (cm) of the calibrated prediction at `v` against the true
// linear plant.
inline double prediction_error_cm(const LinearPlantCase& c, const softshape::CorrectionField& field,
                                  const softshape::VoltageVector& v) {
  using namespace softshape;
  PlantParams plant;
  plant.base = c.params;
  plant.beta = c.beta;
  plant.noise_cm = 0.0;
  const ShapeCurve model = solve_shape(c.params, v).shape;
  const ShapeCurve truth = plant_shape(plant, v);
  const ShapeCurve corrected = corrected_shape(field, model, v);
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    worst = std::max(worst, std::abs(corrected.y[i] - truth.y[i]) * kCmPerM);
  return worst;
}

// Worst disagreement (cm/V) between the LMS field and the batch least-squares fit.
inline double oracle_disagreement(const LinearPlantCase& c, const softshape::CorrectionField& field) {
  std::vector<std::vector<double>> dy;
  for (const auto& s : c.samples) {
    std::vector<double> row(s.sensed.size());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = (s.sensed.y[i] - s.model_shape.y[i]) * 100.0;
    dy.push_back(std::move(row));
  }
  const auto ls = oracle::least_squares_field(c.volts, dy);
  double worst = 0.0;
  for (int j = 0; j < field.nodes(); ++j)
    for (int k = 0; k < field.actuators(); ++k)
      worst = std::max(worst, std::abs(field.alpha(j, k) - ls[static_cast<std::size_t>(j * field.actuators() + k)]));
  return worst;
}

}  // namespace props

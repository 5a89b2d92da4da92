#include "plant.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "errors.hpp"

namespace softshape {

void PlantParams::validate() const {
  base.validate();
  if (!(stiffness_scale > 0.0 && gain_scale > 0.0)) throw InputError("plant scales must be positive");
  if (!(noise_cm >= 0.0)) throw InputError("sensor noise must be non-negative");
  if (!beta.empty() &&
      beta.size() != static_cast<std::size_t>(base.grid_nodes) * base.n_actuators) {
    throw InputError("plant deviation table does not match grid and actuator count");
  }
}

RobotParams PlantParams::effective() const {
  RobotParams p = base;
  p.bending_stiffness *= stiffness_scale;
  p.moment_per_volt *= gain_scale;
  return p;
}

ShapeCurve plant_shape(const PlantParams& plant, const VoltageVector& v, Ground ground) {
  plant.validate();
  ShapeCurve shape = solve_shape(plant.effective(), v, ground).shape;
  if (!plant.beta.empty()) {
    const int na = plant.base.n_actuators;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      double dy = 0.0;
      for (int k = 0; k < na; ++k) dy += plant.beta[i * na + k] * v[k];
      shape.y[i] += dy / kCmPerM;
    }
  }
  return shape;
}

SensedShape sense(const PlantParams& plant, const VoltageVector& v, double x0, std::uint64_t counter) {
  SensedShape out{plant_shape(plant, v), x0};
  if (plant.noise_cm > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(plant.seed), static_cast<std::uint32_t>(plant.seed >> 32),
                      static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, plant.noise_cm / kCmPerM);
    for (auto& y : out.shape.y) y += noise(rng);
  }
  return out;
}

std::vector<double> smooth_deviation(const RobotParams& params, int modes, std::uint64_t seed) {
  if (modes < 1) throw InputError("deviation needs at least one mode");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int na = params.n_actuators;
  std::vector<double> coeff(static_cast<std::size_t>(na) * modes);
  for (int k = 0; k < na; ++k) {
    for (int m = 0; m < modes; ++m) coeff[k * modes + m] = gauss(rng) / (1.0 + m);
  }
  const ShapeCurve grid = ShapeCurve::flat(params);
  std::vector<double> beta(grid.size() * na, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid.x[i] / params.length;
    for (int k = 0; k < na; ++k) {
      double b = 0.0;
      for (int m = 0; m < modes; ++m) b += coeff[k * modes + m] * std::cos(std::numbers::pi * m * s);
      beta[i * na + k] = b;
    }
  }
  return beta;
}

double deviation_mse(const PlantParams& plant, std::span<const VoltageVector> voltages) {
  if (voltages.empty() || plant.beta.empty()) return 0.0;
  const int na = plant.base.n_actuators;
  const std::size_t nodes = plant.beta.size() / na;
  double total = 0.0;
  for (const auto& v : voltages) {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      double dy = 0.0;
      for (int k = 0; k < na; ++k) dy += plant.beta[i * na + k] * v[k];
      s += dy * dy;
    }
    total += s / nodes;
  }
  return total / voltages.size();
}

void scale_deviation_to_mse(PlantParams& plant, std::span<const VoltageVector> voltages, double mse_cm2) {
  const double current = deviation_mse(plant, voltages);
  if (!(current > 0.0)) throw InputError("deviation is zero on the given voltages; cannot scale");
  const double factor = std::sqrt(mse_cm2 / current);
  for (auto& b : plant.beta) b *= factor;
}

}  // namespace softshape

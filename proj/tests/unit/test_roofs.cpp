#include <doctest.h>

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "oracles.hpp"
#include "roofs.hpp"

using namespace softshape;

TEST_SUITE("roofs") {

TEST_CASE("step roof heights either side of the drop") {
  const auto roof = RoofProfile::step(0.014, 0.009, 0.6, 0.0, 1.2);
  CHECK(roof_height_at(roof, 0.3) == doctest::Approx(0.014).epsilon(1e-12));
  CHECK(roof_height_at(roof, 0.8) == doctest::Approx(0.009).epsilon(1e-12));
  CHECK(roof_height_at(roof, 0.6) == doctest::Approx(0.009).epsilon(1e-12));
  CHECK(roof.min_height() == doctest::Approx(0.009));
}

TEST_CASE("sinusoid with zero amplitude is flat") {
  const auto roof = RoofProfile::sinusoidal(0.012, 0.0, 0.6, 0.3, 0.0, 1.0);
  for (double x = 0.0; x <= 1.0; x += 0.05) CHECK(roof_height_at(roof, x) == doctest::Approx(0.012));
}

TEST_CASE("slanted roof interpolates linearly") {
  const auto roof = RoofProfile::slanted(0.015, 0.009, 0.0, 1.0);
  CHECK(roof_height_at(roof, 0.5) == doctest::Approx(0.012));
  CHECK(roof.min_height() == doctest::Approx(0.009));
}

TEST_CASE("heights outside the domain are rejected") {
  const auto roof = RoofProfile::slanted(0.015, 0.009, 0.0, 1.0);
  CHECK_THROWS_AS(roof_height_at(roof, 1.1), InputError);
  CHECK_THROWS_AS(roof_height_at(roof, -0.1), InputError);
}

TEST_CASE("non-positive roofs are rejected") {
  CHECK_THROWS_AS(RoofProfile::sinusoidal(0.002, 0.003, 0.6, 0.0, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(RoofProfile::slanted(0.01, -0.001, 0.0, 1.0), InputError);
}

TEST_CASE("safety line subtracts the margin") {
  const auto step = RoofProfile::step(0.014, 0.009, 0.6, 0.0, 1.2);
  CHECK(safety_height_at(SafetyLine(step, 1e-3), 0.3) == doctest::Approx(0.013).epsilon(1e-12));
  CHECK(safety_height_at(SafetyLine(step, 0.0), 0.3) == doctest::Approx(0.014).epsilon(1e-12));
  const auto low = RoofProfile::slanted(0.009, 0.009, 0.0, 1.0);
  CHECK(safety_height_at(SafetyLine(low, 0.005), 0.5) == doctest::Approx(0.004).epsilon(1e-12));
  CHECK_THROWS(SafetyLine(low, -1e-3));
}

TEST_CASE("constraint is unbounded off the roof") {
  const SafetyLine line(RoofProfile::slanted(0.015, 0.009, 0.2, 1.0), 1e-3);
  CHECK(std::isinf(line.constraint_at(0.1)));
  CHECK(line.constraint_at(0.2) == doctest::Approx(0.014));
}

TEST_CASE("feasibility follows the margin") {
  const auto roof = RoofProfile::slanted(0.009, 0.009, 0.0, 1.0);
  CHECK(SafetyLine(roof, 1e-3).feasible());
  CHECK_FALSE(SafetyLine(roof, 0.009).feasible());
}

TEST_CASE("profile csv: constant") {
  std::istringstream in("x_cm,height_cm\n0,1.4\n100,1.4\n");
  const auto roof = load_profile(in);
  CHECK(roof.x_begin() == 0.0);
  CHECK(roof.x_end() == doctest::Approx(1.0));
  CHECK(roof_height_at(roof, 0.37) == doctest::Approx(0.014));
}

TEST_CASE("profile csv: step-like") {
  std::istringstream in("x_cm,height_cm\n0,1.4\n50,1.4\n50.1,0.9\n100,0.9\n");
  const auto roof = load_profile(in);
  CHECK(roof_height_at(roof, 0.25) == doctest::Approx(0.014));
  CHECK(roof_height_at(roof, 0.75) == doctest::Approx(0.009));
  CHECK(roof_height_at(roof, 0.5005) == doctest::Approx(0.0115));
}

TEST_CASE("profile csv errors") {
  std::istringstream dup("x_cm,height_cm\n0,1\n0,2\n");
  CHECK_THROWS_AS(load_profile(dup), InputError);
  std::istringstream one("x_cm,height_cm\n0,1\n");
  CHECK_THROWS_AS(load_profile(one), InputError);
  std::istringstream text("x_cm,height_cm\n0,abc\n1,1\n");
  CHECK_THROWS_AS(load_profile(text), InputError);
  CHECK_THROWS_AS(load_profile(std::filesystem::path("/nonexistent/roof.csv")), InputError);
}

TEST_CASE("property: safety line sits exactly one margin below the roof") {
  oracle::Gen gen(7);
  for (int t = 0; t < 200; ++t) {
    const double mean = gen.uniform(0.008, 0.02);
    const double amp = gen.uniform(0.0, 0.5 * mean);
    const auto roof = RoofProfile::sinusoidal(mean, amp, gen.uniform(0.1, 1.0), gen.uniform(0, 6), 0.0, 1.0);
    const double margin = gen.uniform(0.0, 0.002);
    const SafetyLine line(roof, margin);
    const double x = gen.uniform(0.0, 1.0);
    CHECK(line.height_at(x) == doctest::Approx(roof.height_at(x) - margin).epsilon(1e-15));
    CHECK(roof.height_at(x) >= roof.min_height() - 1e-15);
  }
}

}

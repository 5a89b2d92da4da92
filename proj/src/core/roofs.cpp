#include "roofs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "csv.hpp"
#include "errors.hpp"
#include "robot.hpp"

namespace softshape {
namespace {

void check_domain(double x_begin, double x_end) {
  if (!(std::isfinite(x_begin) && std::isfinite(x_end) && x_begin < x_end)) {
    throw InputError("roof domain must be a finite interval with begin < end");
  }
}

}  // namespace

RoofProfile::RoofProfile(RoofKind kind, double x_begin, double x_end, std::variant<Sine, Knots> shape)
    : kind_(kind), x_begin_(x_begin), x_end_(x_end), shape_(std::move(shape)) {
  check_domain(x_begin_, x_end_);
  check_positive();
}

RoofProfile RoofProfile::step(double left, double right, double transition_x, double x_begin,
                              double x_end, double ramp) {
  check_domain(x_begin, x_end);
  if (!(ramp >= 0.0)) throw InputError("step ramp width must be non-negative");
  if (!(transition_x - ramp > x_begin && transition_x < x_end)) {
    throw InputError("step transition must lie inside the roof domain");
  }
  std::vector<double> xs{x_begin, transition_x - ramp, transition_x, x_end};
  std::vector<double> hs{left, left, right, right};
  if (ramp == 0.0) {
    // Right-continuous jump: nudge the left knot just below the transition.
    xs[1] = std::nextafter(transition_x, x_begin);
  }
  return RoofProfile(RoofKind::Step, x_begin, x_end, Knots{std::move(xs), std::move(hs)});
}

RoofProfile RoofProfile::slanted(double height_begin, double height_end, double x_begin,
                                 double x_end) {
  return RoofProfile(RoofKind::Slanted, x_begin, x_end,
                     Knots{{x_begin, x_end}, {height_begin, height_end}});
}

RoofProfile RoofProfile::sinusoidal(double mean, double amplitude, double wavelength, double phase,
                                    double x_begin, double x_end) {
  if (!(wavelength > 0.0)) throw InputError("sinusoid wavelength must be positive");
  return RoofProfile(RoofKind::Sinusoidal, x_begin, x_end,
                     Sine{mean, amplitude, wavelength, phase});
}

RoofProfile RoofProfile::piecewise_linear(std::vector<double> xs, std::vector<double> heights) {
  if (xs.size() != heights.size()) throw InputError("roof knots: x and height counts differ");
  if (xs.size() < 2) throw InputError("roof profile needs at least two knots");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] == xs[i - 1]) throw InputError("roof profile has duplicate x values");
    if (xs[i] < xs[i - 1]) throw InputError("roof profile x values are not sorted");
  }
  const double b = xs.front();
  const double e = xs.back();
  return RoofProfile(RoofKind::PiecewiseLinear, b, e, Knots{std::move(xs), std::move(heights)});
}

void RoofProfile::check_positive() const {
  if (!(min_height() > 0.0)) throw InputError("roof height must be strictly positive over its domain");
}

double RoofProfile::height_at(double x) const {
  if (!contains(x)) throw InputError("x = " + std::to_string(x) + " m lies outside the roof domain");
  if (const auto* s = std::get_if<Sine>(&shape_)) {
    return s->mean + s->amplitude * std::sin(2.0 * std::numbers::pi * x / s->wavelength + s->phase);
  }
  const auto& k = std::get<Knots>(shape_);
  auto it = std::upper_bound(k.xs.begin(), k.xs.end(), x);
  if (it == k.xs.end()) return k.heights.back();
  const std::size_t hi = static_cast<std::size_t>(it - k.xs.begin());
  if (hi == 0) return k.heights.front();
  const std::size_t lo = hi - 1;
  const double t = (x - k.xs[lo]) / (k.xs[hi] - k.xs[lo]);
  return k.heights[lo] + t * (k.heights[hi] - k.heights[lo]);
}

double RoofProfile::min_height() const {
  if (const auto* s = std::get_if<Sine>(&shape_)) return s->mean - std::abs(s->amplitude);
  const auto& k = std::get<Knots>(shape_);
  return *std::min_element(k.heights.begin(), k.heights.end());
}

double roof_height_at(const RoofProfile& roof, double x_world) { return roof.height_at(x_world); }

SafetyLine::SafetyLine(RoofProfile roof, double margin) : roof_(std::move(roof)), margin_(margin) {
  if (!(margin_ >= 0.0 && std::isfinite(margin_))) throw InputError("safety margin must be non-negative");
}

double SafetyLine::constraint_at(double x_world) const {
  if (!roof_.contains(x_world)) return std::numeric_limits<double>::infinity();
  return height_at(x_world);
}

double safety_height_at(const SafetyLine& line, double x_world) { return line.height_at(x_world); }

RoofProfile load_profile(std::istream& in) {
  const auto table = csv::read(in);
  if (table.header.size() != 2) throw InputError("roof CSV needs columns x_cm,height_cm");
  if (table.rows.size() < 2) throw InputError("roof CSV needs at least two rows");
  std::vector<double> xs, hs;
  for (const auto& row : table.rows) {
    xs.push_back(row[0] / kCmPerM);
    hs.push_back(row[1] / kCmPerM);
  }
  return RoofProfile::piecewise_linear(std::move(xs), std::move(hs));
}

RoofProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open roof profile " + path.string());
  return load_profile(in);
}

}  // namespace softshape

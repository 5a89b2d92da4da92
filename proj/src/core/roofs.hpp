#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>
#include <vector>

namespace softshape {

enum class RoofKind { Step, Slanted, Sinusoidal, PiecewiseLinear };

/// Overhead barrier height over a world-frame x interval. Metres.
class RoofProfile {
 public:
  /// Height `left` before `transition_x`, `right` from it on. The drop is a
  /// linear ramp of width `ramp` ending at `transition_x`.
  static RoofProfile step(double left, double right, double transition_x, double x_begin,
                          double x_end, double ramp = 1e-3);
  static RoofProfile slanted(double height_begin, double height_end, double x_begin, double x_end);
  static RoofProfile sinusoidal(double mean, double amplitude, double wavelength, double phase,
                                double x_begin, double x_end);
  /// Knots must be strictly increasing in x; at least two.
  static RoofProfile piecewise_linear(std::vector<double> xs, std::vector<double> heights);

  RoofKind kind() const { return kind_; }
  double x_begin() const { return x_begin_; }
  double x_end() const { return x_end_; }
  bool contains(double x) const { return x >= x_begin_ && x <= x_end_; }

  /// Throws InputError outside [x_begin, x_end].
  double height_at(double x) const;
  /// Lower bound of the height over the domain.
  double min_height() const;

 private:
  struct Sine {
    double mean, amplitude, wavelength, phase;
  };
  struct Knots {
    std::vector<double> xs, heights;
  };

  RoofProfile(RoofKind kind, double x_begin, double x_end, std::variant<Sine, Knots> shape);
  void check_positive() const;

  RoofKind kind_;
  double x_begin_;
  double x_end_;
  std::variant<Sine, Knots> shape_;
};

double roof_height_at(const RoofProfile& roof, double x_world);

/// Roof lowered by a clearance margin; the robot must stay on or below it.
class SafetyLine {
 public:
  explicit SafetyLine(RoofProfile roof, double margin = 1e-3);

  const RoofProfile& roof() const { return roof_; }
  double margin() const { return margin_; }

  /// roof height - margin; throws outside the roof domain.
  double height_at(double x_world) const { return roof_.height_at(x_world) - margin_; }
  /// Like height_at, but +infinity where there is no roof.
  double constraint_at(double x_world) const;
  /// False when the margin swallows the lowest part of the roof.
  bool feasible() const { return margin_ < roof_.min_height(); }

 private:
  RoofProfile roof_;
  double margin_;
};

double safety_height_at(const SafetyLine& line, double x_world);

/// "x_cm,height_cm" CSV with header, at least two rows, strictly increasing x.
RoofProfile load_profile(std::istream& in);
RoofProfile load_profile(const std::filesystem::path& path);

}  // namespace softshape

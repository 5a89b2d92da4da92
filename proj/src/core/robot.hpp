#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <vector>

namespace softshape {

inline constexpr double kCmPerM = 100.0;

/// Moment per volt fitted so that the (300, 258, -1292, 258, 300) V posture
/// peaks at 1.35 cm on the default robot.
inline constexpr double kDefaultMomentPerVolt = 2.8185e-5;

/// Geometry and lumped mechanics of the planar piezo robot. SI units.
struct RobotParams {
  double length = 0.5;              // m
  double width = 0.02;              // m
  int n_actuators = 5;
  double bending_stiffness = 0.01;  // EI, N m^2
  double weight_per_length = 0.39;  // w, N/m
  double moment_per_volt = kDefaultMomentPerVolt;  // N m / V
  double pad_span = 0.05;           // m, friction film at each end
  int grid_nodes = 201;

  /// Actuators tile the body contiguously.
  double actuator_span() const { return length / n_actuators; }
  double spacing() const { return length / (grid_nodes - 1); }

  /// Throws InputError on any violated invariant.
  void validate() const;
};

/// Actuator voltages, one per actuator, in volts.
class VoltageVector {
 public:
  VoltageVector() = default;
  explicit VoltageVector(std::vector<double> volts) : volts_(std::move(volts)) {}
  VoltageVector(std::initializer_list<double> volts) : volts_(volts) {}

  static VoltageVector zeros(int n) { return VoltageVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return volts_.size(); }
  double operator[](std::size_t i) const { return volts_[i]; }
  double& operator[](std::size_t i) { return volts_[i]; }
  std::span<const double> values() const { return volts_; }
  const std::vector<double>& vec() const { return volts_; }

  double squared_norm() const;
  bool is_palindromic(double tol = 0.0) const;

  friend VoltageVector operator+(const VoltageVector& a, const VoltageVector& b);
  friend bool operator==(const VoltageVector&, const VoltageVector&) = default;

 private:
  std::vector<double> volts_;
};

/// Vertical profile y(x) sampled on a uniform grid over [0, length]. Metres.
struct ShapeCurve {
  std::vector<double> x;
  std::vector<double> y;

  static ShapeCurve flat(double length, int nodes);
  static ShapeCurve flat(const RobotParams& params) { return flat(params.length, params.grid_nodes); }

  std::size_t size() const { return x.size(); }
  double length() const { return x.empty() ? 0.0 : x.back(); }
  double spacing() const { return length() / static_cast<double>(x.size() - 1); }
  double peak() const;

  bool same_grid(const ShapeCurve& other, double tol = 1e-12) const;
  void validate() const;
};

/// Linear interpolation of `source` onto the nodes of `grid`.
ShapeCurve resample(const ShapeCurve& source, const ShapeCurve& grid);

// "x_cm,y_cm" with a one-line header.
void write_shape_csv(std::ostream& out, const ShapeCurve& shape);
void write_shape_csv(const std::filesystem::path& path, const ShapeCurve& shape);
ShapeCurve read_shape_csv(std::istream& in);
ShapeCurve read_shape_csv(const std::filesystem::path& path);

}  // namespace softshape

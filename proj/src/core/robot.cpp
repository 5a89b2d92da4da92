#include "robot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "csv.hpp"
#include "errors.hpp"

namespace softshape {

void RobotParams::validate() const {
  if (!(length > 0.0)) throw InputError("robot length must be positive");
  if (!(width > 0.0)) throw InputError("robot width must be positive");
  if (n_actuators < 1) throw InputError("need at least one actuator");
  if (!(bending_stiffness > 0.0)) throw InputError("bending stiffness EI must be positive");
  if (!(weight_per_length >= 0.0)) throw InputError("weight per length must be non-negative");
  if (!(moment_per_volt > 0.0)) throw InputError("moment per volt must be positive");
  if (grid_nodes < 51) throw InputError("grid needs at least 51 nodes");
  if (pad_span < 0.0 || pad_span > actuator_span()) {
    throw InputError("pad span must lie within [0, actuator span]");
  }
}

double VoltageVector::squared_norm() const {
  double s = 0.0;
  for (double v : volts_) s += v * v;
  return s;
}

bool VoltageVector::is_palindromic(double tol) const {
  const std::size_t n = volts_.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    if (std::abs(volts_[i] - volts_[n - 1 - i]) > tol) return false;
  }
  return true;
}

VoltageVector operator+(const VoltageVector& a, const VoltageVector& b) {
  if (a.size() != b.size()) throw InputError("voltage vector length mismatch");
  std::vector<double> sum(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sum[i] = a[i] + b[i];
  return VoltageVector(std::move(sum));
}

ShapeCurve ShapeCurve::flat(double length, int nodes) {
  if (nodes < 2) throw InputError("a shape needs at least two nodes");
  ShapeCurve s;
  s.x.resize(nodes);
  s.y.assign(nodes, 0.0);
  for (int i = 0; i < nodes; ++i) s.x[i] = length * i / (nodes - 1);
  s.x.back() = length;
  return s;
}

double ShapeCurve::peak() const {
  return y.empty() ? 0.0 : *std::max_element(y.begin(), y.end());
}

bool ShapeCurve::same_grid(const ShapeCurve& other, double tol) const {
  if (x.size() != other.x.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - other.x[i]) > tol) return false;
  }
  return true;
}

void ShapeCurve::validate() const {
  if (x.size() < 2 || x.size() != y.size()) throw InputError("malformed shape curve");
  if (x.front() != 0.0) throw InputError("shape grid must start at x = 0");
  const double h = spacing();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - h * i) > 1e-9 * std::max(1.0, length())) {
      throw InputError("shape grid is not uniform");
    }
    if (!std::isfinite(y[i])) throw InputError("shape height is not finite");
  }
}

ShapeCurve resample(const ShapeCurve& source, const ShapeCurve& grid) {
  if (source.size() < 2) throw InputError("cannot resample a shape with fewer than two nodes");
  ShapeCurve out = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double xi = grid.x[i];
    auto it = std::upper_bound(source.x.begin(), source.x.end(), xi);
    std::size_t hi = static_cast<std::size_t>(it - source.x.begin());
    hi = std::clamp<std::size_t>(hi, 1, source.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (xi - source.x[lo]) / (source.x[hi] - source.x[lo]);
    out.y[i] = source.y[lo] + std::clamp(t, 0.0, 1.0) * (source.y[hi] - source.y[lo]);
  }
  return out;
}

void write_shape_csv(std::ostream& out, const ShapeCurve& shape) {
  out << "x_cm,y_cm\n";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out << csv::num(shape.x[i] * kCmPerM) << ',' << csv::num(shape.y[i] * kCmPerM) << '\n';
  }
}

void write_shape_csv(const std::filesystem::path& path, const ShapeCurve& shape) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_shape_csv(out, shape);
}

namespace {

ShapeCurve shape_from_table(const csv::Table& table) {
  if (table.header.size() != 2) throw InputError("shape CSV needs columns x_cm,y_cm");
  if (table.rows.size() < 2) throw InputError("shape CSV needs at least two rows");
  ShapeCurve s;
  for (const auto& row : table.rows) {
    s.x.push_back(row[0] / kCmPerM);
    s.y.push_back(row[1] / kCmPerM);
  }
  for (std::size_t i = 1; i < s.x.size(); ++i) {
    if (!(s.x[i] > s.x[i - 1])) throw InputError("shape CSV x values must be strictly increasing");
  }
  return s;
}

}  // namespace

ShapeCurve read_shape_csv(std::istream& in) { return shape_from_table(csv::read(in)); }

ShapeCurve read_shape_csv(const std::filesystem::path& path) {
  return shape_from_table(csv::read(path));
}

}  // namespace softshape

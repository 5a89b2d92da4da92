#include "calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "csv.hpp"
#include "errors.hpp"

namespace softshape {

CorrectionField::CorrectionField(int nodes, int actuators, double learning_rate)
    : nodes_(nodes), actuators_(actuators), learning_rate_(learning_rate) {
  if (nodes < 2 || actuators < 1) throw InputError("correction field needs nodes and actuators");
  set_learning_rate(learning_rate);
  table_.assign(static_cast<std::size_t>(nodes) * actuators, 0.0);
}

void CorrectionField::set_learning_rate(double eta) {
  if (!(eta > 0.0 && std::isfinite(eta))) throw InputError("learning rate must be positive");
  learning_rate_ = eta;
}

double CorrectionField::correction_cm(int node, const VoltageVector& v) const {
  const auto a = coefficients(node);
  double s = 0.0;
  for (int k = 0; k < actuators_; ++k) s += a[k] * v[k];
  return s;
}

namespace {

void check_sizes(const CorrectionField& field, const ShapeCurve& shape, const VoltageVector& v) {
  if (static_cast<int>(shape.size()) != field.nodes()) throw InputError("shape grid does not match correction field");
  if (static_cast<int>(v.size()) != field.actuators()) throw InputError("voltage count does not match correction field");
}

}  // namespace

ShapeCurve corrected_shape(const CorrectionField& field, const ShapeCurve& model_shape,
                           const VoltageVector& v) {
  check_sizes(field, model_shape, v);
  ShapeCurve out = model_shape;
  for (int i = 0; i < field.nodes(); ++i) out.y[i] += field.correction_cm(i, v) / kCmPerM;
  return out;
}

void lms_update(CorrectionField& field, const CalibrationSample& sample) {
  check_sizes(field, sample.sensed, sample.v);
  if (!sample.sensed.same_grid(sample.model_shape, 1e-9)) {
    throw InputError("sensed and model shapes are on different grids");
  }
  const double eta = field.learning_rate();
  for (int i = 0; i < field.nodes(); ++i) {
    const double dy = (sample.sensed.y[i] - sample.model_shape.y[i]) * kCmPerM;
    const double residual = field.correction_cm(i, sample.v) - dy;
    for (int k = 0; k < field.actuators(); ++k) field.alpha(i, k) -= eta * residual * sample.v[k];
  }
}

void calibrate_batch(CorrectionField& field, std::span<const CalibrationSample> samples, int epochs) {
  if (epochs < 0) throw InputError("epoch count must be non-negative");
  for (int e = 0; e < epochs; ++e) {
    for (const auto& s : samples) lms_update(field, s);
  }
}

double default_learning_rate(std::span<const CalibrationSample> samples) {
  double max_norm = 0.0;
  for (const auto& s : samples) max_norm = std::max(max_norm, s.v.squared_norm());
  if (!(max_norm > 0.0)) throw InputError("calibration needs at least one non-zero voltage vector");
  return 0.5 / max_norm;
}

void write_field_csv(std::ostream& out, const CorrectionField& field, const ShapeCurve& grid) {
  if (static_cast<int>(grid.size()) != field.nodes()) throw InputError("grid does not match correction field");
  out << "x_cm";
  for (int k = 0; k < field.actuators(); ++k) out << ",a" << (k + 1);
  out << '\n';
  for (int i = 0; i < field.nodes(); ++i) {
    out << csv::num(grid.x[i] * kCmPerM);
    for (int k = 0; k < field.actuators(); ++k) out << ',' << csv::num(field.alpha(i, k));
    out << '\n';
  }
}

void write_field_csv(const std::filesystem::path& path, const CorrectionField& field,
                     const ShapeCurve& grid) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_field_csv(out, field, grid);
}

CorrectionField read_field_csv(std::istream& in, double learning_rate) {
  const auto table = csv::read(in);
  if (table.header.size() < 2) throw InputError("correction CSV needs x_cm and coefficient columns");
  const int actuators = static_cast<int>(table.header.size()) - 1;
  CorrectionField field(static_cast<int>(table.rows.size()), actuators, learning_rate);
  for (int i = 0; i < field.nodes(); ++i) {
    for (int k = 0; k < actuators; ++k) field.alpha(i, k) = table.rows[i][k + 1];
  }
  return field;
}

CorrectionField read_field_csv(const std::filesystem::path& path, double learning_rate) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_field_csv(in, learning_rate);
}

}  // namespace softshape

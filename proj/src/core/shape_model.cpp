#include "shape_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>

#include "errors.hpp"

namespace softshape {
namespace {

constexpr std::array<double, 3> kStencil{1.0, -2.0, 1.0};

// Symmetric pentadiagonal matrix stored by diagonals.
struct BandedStiffness {
  std::vector<double> d0, d1, d2;  // (i,i), (i,i+1), (i,i+2)

  double at(int i, int j) const {
    if (i > j) std::swap(i, j);
    switch (j - i) {
      case 0: return d0[i];
      case 1: return d1[i];
      case 2: return d2[i];
      default: return 0.0;
    }
  }

  void multiply(const std::vector<double>& y, std::vector<double>& out) const {
    const int n = static_cast<int>(d0.size());
    out.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = d0[i] * y[i];
      if (i + 1 < n) s += d1[i] * y[i + 1];
      if (i + 2 < n) s += d2[i] * y[i + 2];
      if (i >= 1) s += d1[i - 1] * y[i - 1];
      if (i >= 2) s += d2[i - 2] * y[i - 2];
      out[i] = s;
    }
  }
};

// H = dx * EI * D2^T D2 with D2 the interior second difference over dx^2.
BandedStiffness assemble_stiffness(int n, double stiffness, double dx) {
  BandedStiffness h{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                    std::vector<double>(n, 0.0)};
  const double c = stiffness / (dx * dx * dx);
  for (int r = 0; r + 2 < n; ++r) {
    for (int a = 0; a < 3; ++a) {
      h.d0[r + a] += c * kStencil[a] * kStencil[a];
      for (int b = a + 1; b < 3; ++b) {
        const double v = c * kStencil[a] * kStencil[b];
        if (b - a == 1) h.d1[r + a] += v;
        else h.d2[r + a] += v;
      }
    }
  }
  return h;
}

std::vector<double> trapezoid_weights(int n) {
  std::vector<double> q(n, 1.0);
  q.front() = q.back() = 0.5;
  return q;
}

// Linear term b of U = 1/2 y^T H y - b^T y.
std::vector<double> assemble_load(const std::vector<double>& moment, double weight, double dx) {
  const int n = static_cast<int>(moment.size());
  const auto q = trapezoid_weights(n);
  std::vector<double> b(n, 0.0);
  for (int r = 0; r + 2 < n; ++r) {
    for (int a = 0; a < 3; ++a) b[r + a] += kStencil[a] * moment[r + 1] / dx;
  }
  for (int i = 0; i < n; ++i) b[i] -= weight * q[i] * dx;
  return b;
}

// LDL^T of H restricted to an ordered index subset. Bandwidth stays two
// because any principal submatrix of a pentadiagonal matrix is pentadiagonal.
class BandedLdlt {
 public:
  bool factor(const BandedStiffness& h, std::span<const int> idx) {
    const std::size_t m = idx.size();
    d_.assign(m, 0.0);
    l1_.assign(m, 0.0);
    l2_.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double a0 = h.at(idx[k], idx[k]);
      if (k >= 2) l2_[k] = h.at(idx[k - 2], idx[k]) / d_[k - 2];
      if (k >= 1) {
        double a1 = h.at(idx[k - 1], idx[k]);
        if (k >= 2) a1 -= l2_[k] * l1_[k - 1] * d_[k - 2];
        l1_[k] = a1 / d_[k - 1];
      }
      double dk = a0;
      if (k >= 1) dk -= l1_[k] * l1_[k] * d_[k - 1];
      if (k >= 2) dk -= l2_[k] * l2_[k] * d_[k - 2];
      if (!(dk > 1e-13 * a0)) return false;
      d_[k] = dk;
    }
    return true;
  }

  void solve(std::vector<double>& rhs) const {
    const std::size_t m = d_.size();
    for (std::size_t k = 0; k < m; ++k) {
      if (k >= 1) rhs[k] -= l1_[k] * rhs[k - 1];
      if (k >= 2) rhs[k] -= l2_[k] * rhs[k - 2];
    }
    for (std::size_t k = 0; k < m; ++k) rhs[k] /= d_[k];
    for (std::size_t k = m; k-- > 0;) {
      if (k + 1 < m) rhs[k] -= l1_[k + 1] * rhs[k + 1];
      if (k + 2 < m) rhs[k] -= l2_[k + 2] * rhs[k + 2];
    }
  }

 private:
  std::vector<double> d_, l1_, l2_;
};

// Minimiser of the quadratic over the nodes in `idx`, all other nodes held.
// Returns the step p (zero outside idx) from the current point with gradient g.
std::vector<double> newton_step(const BandedStiffness& h, std::span<const int> idx,
                                const std::vector<double>& g) {
  BandedLdlt ldlt;
  if (!ldlt.factor(h, idx)) {
    throw SolverError("reduced stiffness matrix is not positive definite (ill-conditioned parameters)");
  }
  std::vector<double> rhs(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) rhs[k] = -g[idx[k]];
  ldlt.solve(rhs);
  std::vector<double> p(g.size(), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) p[idx[k]] = rhs[k];
  return p;
}

struct RatioTest {
  double alpha;
  int blocking;  // -1 when the full step is feasible
};

// Longest step in [0, limit] along d keeping every free node at y >= 0.
// Ties go to the lowest index.
RatioTest ratio_test(const std::vector<double>& y, const std::vector<double>& d,
                     const std::vector<char>& fixed, double limit) {
  RatioTest best{limit, -1};
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (fixed[i] || !(d[i] < 0.0)) continue;
    const double a = std::max(0.0, -y[i] / d[i]);
    if (a < best.alpha) best = {a, static_cast<int>(i)};
  }
  return best;
}

ContactSolution solve_on_floor(const RobotParams& params, const BandedStiffness& h,
                               const std::vector<double>& b) {
  const int n = params.grid_nodes;
  const double dx = params.spacing();
  const ShapeCurve grid = ShapeCurve::flat(params);
  const int max_iter = 40 * n;
  constexpr double kMultiplierTol = 1e-12;  // N, i.e. pressure * dx
  constexpr double kNullGradientTol = 1e-12;

  std::vector<double> y(n, 0.0);
  std::vector<char> fixed(n, 1);
  std::vector<double> g;
  bool at_subspace_min = false;
  bool degenerate = false;

  for (int iter = 0; iter < max_iter; ++iter) {
    h.multiply(y, g);
    for (int i = 0; i < n; ++i) g[i] -= b[i];

    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
      if (!fixed[i]) free_idx.push_back(i);
    }
    const int n_fixed = n - static_cast<int>(free_idx.size());

    std::vector<double> p;
    bool moving = false;
    if (!at_subspace_min && !free_idx.empty()) {
      std::vector<int> solve_idx = free_idx;
      if (n_fixed <= 1) {
        // Fewer than two support points leave rigid motions free: translation
        // and rotation with none, rotation about the support with one.
        std::vector<std::vector<double>> null_dirs;
        if (n_fixed == 1) {
          const int k = static_cast<int>(std::find(fixed.begin(), fixed.end(), 1) - fixed.begin());
          std::vector<double> z(n);
          for (int i = 0; i < n; ++i) z[i] = grid.x[i] - grid.x[k];
          null_dirs.push_back(std::move(z));
        } else {
          const double mean_x = params.length / 2.0;
          null_dirs.emplace_back(n, 1.0);
          std::vector<double> z(n);
          for (int i = 0; i < n; ++i) z[i] = grid.x[i] - mean_x;
          null_dirs.push_back(std::move(z));
        }
        std::vector<double> d(n, 0.0);
        bool slope = false;
        for (auto& z : null_dirs) {
          const double norm = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
          for (auto& zi : z) zi /= norm;
          const double gz = std::inner_product(z.begin(), z.end(), g.begin(), 0.0);
          if (std::abs(gz) > kNullGradientTol) slope = true;
          for (int i = 0; i < n; ++i) d[i] -= gz * z[i];
        }
        if (slope) {
          const RatioTest rt = ratio_test(y, d, fixed, std::numeric_limits<double>::infinity());
          if (rt.blocking < 0) throw SolverError("energy is unbounded below along a rigid-body motion");
          for (int i = 0; i < n; ++i) y[i] += rt.alpha * d[i];
          y[rt.blocking] = 0.0;
          fixed[rt.blocking] = 1;
          degenerate = rt.alpha == 0.0;
          continue;
        }
        // Flat along the rigid motions: pin them away at nodes far from the support.
        if (n_fixed == 1) {
          const int k = static_cast<int>(std::find(fixed.begin(), fixed.end(), 1) - fixed.begin());
          const int pin = (k < n / 2) ? free_idx.back() : free_idx.front();
          std::erase(solve_idx, pin);
        } else {
          solve_idx.erase(solve_idx.begin());
          solve_idx.pop_back();
        }
      }
      p = newton_step(h, solve_idx, g);
      double pmax = 0.0;
      for (double v : p) pmax = std::max(pmax, std::abs(v));
      moving = pmax > 1e-15;
    }

    if (!moving) {
      // Release every node pulling on the floor; after a zero-length step
      // fall back to releasing only the lowest such index (Bland's rule).
      std::vector<int> release;
      for (int i = 0; i < n; ++i) {
        if (fixed[i] && g[i] < -kMultiplierTol) {
          release.push_back(i);
          if (degenerate) break;
        }
      }
      if (release.empty()) {
        ContactSolution sol;
        sol.shape = grid;
        sol.pressure.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
          if (fixed[i]) {
            sol.shape.y[i] = 0.0;
            sol.pressure[i] = g[i] / dx;
            sol.contact_set.push_back(i);
          } else {
            sol.shape.y[i] = y[i];
          }
        }
        sol.iterations = iter + 1;
        return sol;
      }
      for (int i : release) fixed[i] = 0;
      at_subspace_min = false;
      continue;
    }

    const RatioTest rt = ratio_test(y, p, fixed, 1.0);
    for (int i = 0; i < n; ++i) y[i] += rt.alpha * p[i];
    if (rt.blocking >= 0) {
      y[rt.blocking] = 0.0;
      fixed[rt.blocking] = 1;
    }
    at_subspace_min = rt.blocking < 0;
    degenerate = rt.alpha == 0.0;
  }
  throw SolverError("contact active-set iteration did not converge within " +
                    std::to_string(max_iter) + " iterations");
}

ContactSolution solve_clamped(const RobotParams& params, const BandedStiffness& h,
                              const std::vector<double>& b, const std::vector<double>& moment) {
  const int n = params.grid_nodes;
  const double dx = params.spacing();
  // y(0) = y'(0) = 0 with the first segment bending at the local free curvature.
  std::vector<double> y(n, 0.0);
  y[1] = 0.5 * dx * dx * moment[0] / params.bending_stiffness;

  std::vector<double> g;
  h.multiply(y, g);
  for (int i = 0; i < n; ++i) g[i] -= b[i];
  std::vector<int> idx(n - 2);
  std::iota(idx.begin(), idx.end(), 2);
  const auto p = newton_step(h, idx, g);
  for (int i = 2; i < n; ++i) y[i] += p[i];

  ContactSolution sol;
  sol.shape = ShapeCurve::flat(params);
  sol.shape.y = std::move(y);
  sol.pressure.assign(n, 0.0);
  sol.iterations = 1;
  return sol;
}

void check_voltages(const RobotParams& params, const VoltageVector& v) {
  if (static_cast<int>(v.size()) != params.n_actuators) {
    throw InputError("expected " + std::to_string(params.n_actuators) + " voltages, got " +
                     std::to_string(v.size()));
  }
  for (double vi : v.values()) {
    if (!std::isfinite(vi)) throw InputError("voltage is not finite");
  }
}

}  // namespace

std::vector<double> actuation_moment_profile(const RobotParams& params, const VoltageVector& v) {
  params.validate();
  check_voltages(params, v);
  const int n = params.grid_nodes;
  const int na = params.n_actuators;
  const int intervals = n - 1;
  std::vector<double> moment(n);
  for (int i = 0; i < n; ++i) {
    // Node i sits at i * na / intervals actuator spans from the rear end.
    const long scaled = static_cast<long>(i) * na;
    const int act = static_cast<int>(std::min<long>(scaled / intervals, na - 1));
    const bool on_boundary = scaled % intervals == 0 && act > 0 && i < n - 1;
    const double volts = on_boundary ? 0.5 * (v[act - 1] + v[act]) : v[act];
    moment[i] = params.moment_per_volt * volts;
  }
  return moment;
}

ContactSolution solve_shape(const RobotParams& params, const VoltageVector& v, Ground ground) {
  const auto moment = actuation_moment_profile(params, v);
  const double dx = params.spacing();
  const auto h = assemble_stiffness(params.grid_nodes, params.bending_stiffness, dx);
  if (ground == Ground::Off) {
    if (params.weight_per_length > 0.0) {
      throw InputError("free shape without ground is unbounded under weight; set weight to zero");
    }
    return solve_clamped(params, h, assemble_load(moment, 0.0, dx), moment);
  }
  return solve_on_floor(params, h, assemble_load(moment, params.weight_per_length, dx));
}

double discrete_energy(const RobotParams& params, const VoltageVector& v,
                       const std::vector<double>& y) {
  const auto moment = actuation_moment_profile(params, v);
  const int n = params.grid_nodes;
  if (static_cast<int>(y.size()) != n) throw InputError("shape size does not match grid");
  const double dx = params.spacing();
  const double ei = params.bending_stiffness;
  double u = 0.0;
  for (int r = 0; r + 2 < n; ++r) {
    const double curvature = (y[r] - 2.0 * y[r + 1] + y[r + 2]) / (dx * dx);
    u += dx * (0.5 * ei * curvature * curvature - moment[r + 1] * curvature);
  }
  const auto q = trapezoid_weights(n);
  for (int i = 0; i < n; ++i) u += params.weight_per_length * q[i] * dx * y[i];
  return u;
}

double chord_shortening(const ShapeCurve& shape) {
  const std::size_t n = shape.size();
  if (n < 3) return 0.0;
  const double h = shape.spacing();
  const auto& y = shape.y;
  auto slope = [&](std::size_t i) {
    if (i == 0) return (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    if (i == n - 1) return (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    return (y[i + 1] - y[i - 1]) / (2.0 * h);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = slope(i);
    sum += (i == 0 || i == n - 1 ? 0.5 : 1.0) * 0.5 * s * s;
  }
  return sum * h;
}

double shape_mse(const ShapeCurve& a, const ShapeCurve& b) {
  if (!a.same_grid(b, 1e-9)) throw InputError("shape grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a.y[i] - b.y[i]) * kCmPerM;
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double fit_moment_gain(RobotParams params, const VoltageVector& v_ref, double target_peak,
                       Ground ground, GainBracket bracket) {
  if (!(target_peak > 0.0)) throw InputError("target peak must be positive");
  auto peak_at = [&](double gain) {
    params.moment_per_volt = gain;
    return solve_shape(params, v_ref, ground).shape.peak();
  };
  double lo = bracket.lower;
  double hi = bracket.upper;
  if (!(peak_at(lo) < target_peak && peak_at(hi) > target_peak)) {
    throw InputError("no moment-per-volt bracket reaches the requested peak");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double peak = peak_at(mid);
    if (std::abs(peak - target_peak) <= 1e-4 * target_peak) return mid;
    (peak < target_peak ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace softshape

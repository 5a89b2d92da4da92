#pragma once

// Optimiser benchmarks shared by the unit suite and the acceptance runner.

#include <cmath>
#include <span>
#include <vector>

#include "optimizer.hpp"
#include "oracles.hpp"

namespace props {

// Separable quadratic over a symmetric 5-d box with a palindromic argmin.
inline const std::vector<double> kQuadraticArgmin{200.0, -300.0, -800.0, -300.0, 200.0};

inline double separable_quadratic(std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = (v[k] - kQuadraticArgmin[k]) / 1000.0;
    s += (k + 1) * d * d;
  }
  return s;
}

inline double quadratic_max_error(std::uint64_t seed) {
  using namespace softshape;
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  MinimizeOptions o;
  o.budget = 60;
  o.seed = seed;
  const auto r = minimize(separable_quadratic, box, o);
  double worst = 0.0;
  for (std::size_t k = 0; k < 5; ++k) worst = std::max(worst, std::abs(r.best_v[k] - kQuadraticArgmin[k]));
  return worst;
}

inline double branin_loss(std::span<const double> v) {
  return oracle::branin_unit((v[0] + 1500.0) / 2000.0, (v[1] + 1500.0) / 2000.0);
}

struct BraninTally {
  int wins = 0;
  int seeds = 0;
};

inline BraninTally branin_vs_random(int seeds) {
  using namespace softshape;
  const auto box = BoxDomain::uniform(2, -1500.0, 500.0);
  BraninTally t;
  for (int s = 1; s <= seeds; ++s) {
    MinimizeOptions o;
    o.budget = 60;
    o.seed = static_cast<std::uint64_t>(s);
    const double bo = minimize(branin_loss, box, o).best_loss;
    const double rs = oracle::random_search(branin_loss, box.lower, box.upper, 60, o.seed);
    t.wins += bo <= rs ? 1 : 0;
    ++t.seeds;
  }
  return t;
}

inline bool replay_identical(std::uint64_t seed) {
  using namespace softshape;
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  MinimizeOptions o;
  o.budget = 40;
  o.seed = seed;
  const auto a = minimize(separable_quadratic, box, o);
  const auto b = minimize(separable_quadratic, box, o);
  if (a.history.size() != b.history.size()) return false;
  for (std::size_t i = 0; i < a.history.size(); ++i)
    if (a.history[i].v != b.history[i].v || a.history[i].loss != b.history[i].loss) return false;
  return a.best_v == b.best_v && a.best_loss == b.best_loss;
}

}  // namespace props

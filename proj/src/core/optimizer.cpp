#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include "csv.hpp"
#include "errors.hpp"

namespace softshape {

// ---------------------------------------------------------------- BoxDomain

BoxDomain BoxDomain::uniform(std::size_t dims, double lower, double upper, bool symmetric) {
  return BoxDomain{std::vector<double>(dims, lower), std::vector<double>(dims, upper), symmetric};
}

double BoxDomain::reduced_lower(std::size_t k) const {
  return symmetric ? std::max(lower[k], lower[dims() - 1 - k]) : lower[k];
}

double BoxDomain::reduced_upper(std::size_t k) const {
  return symmetric ? std::min(upper[k], upper[dims() - 1 - k]) : upper[k];
}

void BoxDomain::validate() const {
  if (lower.empty() || lower.size() != upper.size()) throw InputError("box bounds are malformed");
  for (std::size_t k = 0; k < dims(); ++k) {
    if (!(lower[k] < upper[k])) throw InputError("box needs lower < upper in every dimension");
  }
  for (std::size_t k = 0; k < reduced_dims(); ++k) {
    if (!(reduced_lower(k) < reduced_upper(k))) {
      throw InputError("symmetric box: paired dimensions do not overlap");
    }
  }
}

std::vector<double> BoxDomain::expand(std::span<const double> unit) const {
  std::vector<double> full(dims());
  for (std::size_t k = 0; k < reduced_dims(); ++k) {
    const double u = std::clamp(unit[k], 0.0, 1.0);
    const double v = reduced_lower(k) + u * (reduced_upper(k) - reduced_lower(k));
    full[k] = v;
    if (symmetric) full[dims() - 1 - k] = v;
  }
  return full;
}

std::vector<double> BoxDomain::reduce(std::span<const double> full) const {
  std::vector<double> unit(reduced_dims());
  for (std::size_t k = 0; k < unit.size(); ++k) {
    const double lo = reduced_lower(k);
    const double hi = reduced_upper(k);
    unit[k] = std::clamp((full[k] - lo) / (hi - lo), 0.0, 1.0);
  }
  return unit;
}

bool BoxDomain::contains(std::span<const double> full) const {
  if (full.size() != dims()) return false;
  for (std::size_t k = 0; k < dims(); ++k) {
    if (full[k] < lower[k] || full[k] > upper[k]) return false;
  }
  return true;
}

// ------------------------------------------------------------ Gaussian process

void GpConfig::validate() const {
  if (!(jitter > 0.0)) throw InputError("GP jitter must be positive");
  if (!(signal_variance > 0.0)) throw InputError("GP signal variance must be positive");
  for (double l : length_scales) {
    if (!(l > 0.0)) throw InputError("GP length scales must be positive");
  }
}

GaussianProcess::GaussianProcess(GpConfig config, std::vector<std::vector<double>> points,
                                 std::vector<double> values)
    : config_(std::move(config)), points_(std::move(points)), values_(std::move(values)) {
  config_.validate();
  const auto n = static_cast<Eigen::Index>(points_.size());
  for (const auto& p : points_) {
    if (p.size() != config_.length_scales.size()) throw InputError("GP point dimension mismatch");
  }
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel(points_[i], points_[j]);
    }
    k(i, i) += config_.jitter;
  }
  chol_.compute(k);
  if (chol_.info() != Eigen::Success) throw SolverError("GP kernel matrix factorisation failed");
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = values_[i] - config_.prior_mean;
  weights_ = chol_.solve(r);
}

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double t = (a[d] - b[d]) / config_.length_scales[d];
    s += t * t;
  }
  return config_.signal_variance * std::exp(-0.5 * s);
}

GpPrediction GaussianProcess::predict(std::span<const double> query) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  if (n == 0) return {config_.prior_mean, config_.signal_variance};
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(points_[i], query);
  const double mean = config_.prior_mean + ks.dot(weights_);
  const Eigen::VectorXd v = chol_.matrixL().solve(ks);
  const double variance = std::max(0.0, config_.signal_variance - v.squaredNorm());
  return {mean, variance};
}

double GaussianProcess::log_marginal_likelihood() const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = values_[i] - config_.prior_mean;
  const double log_det = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
  return -0.5 * r.dot(weights_) - 0.5 * log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpPrediction gp_posterior(const GpConfig& config, const std::vector<std::vector<double>>& points,
                          std::span<const double> values, std::span<const double> query) {
  return GaussianProcess(config, points, std::vector<double>(values.begin(), values.end()))
      .predict(query);
}

namespace {

// Hyperparameter box in log space, for unit-cube inputs and z-scored values.
constexpr double kLogLengthMin = -3.9;
constexpr double kLogLengthMax = 1.6;   // ~5
constexpr double kLogSignalMin = -3.0;
constexpr double kLogSignalMax = 3.0;
constexpr double kLogNoiseMax = -0.7;   // ~0.5

struct HyperBounds {
  std::vector<double> lo, hi;
};

HyperBounds hyper_bounds(std::size_t dims, double jitter) {
  HyperBounds b;
  for (std::size_t d = 0; d < dims; ++d) {
    b.lo.push_back(kLogLengthMin);
    b.hi.push_back(kLogLengthMax);
  }
  b.lo.push_back(kLogSignalMin);
  b.hi.push_back(kLogSignalMax);
  b.lo.push_back(std::log(jitter));
  b.hi.push_back(std::max(std::log(jitter), kLogNoiseMax));
  return b;
}

GpConfig config_from_theta(const GpConfig& base, const std::vector<double>& theta) {
  GpConfig c = base;
  const std::size_t d = base.length_scales.size();
  for (std::size_t k = 0; k < d; ++k) c.length_scales[k] = std::exp(theta[k]);
  c.signal_variance = std::exp(theta[d]);
  c.jitter = std::exp(theta[d + 1]);
  return c;
}

std::vector<double> theta_from_config(const GpConfig& c) {
  std::vector<double> theta;
  for (double l : c.length_scales) theta.push_back(std::log(l));
  theta.push_back(std::log(c.signal_variance));
  theta.push_back(std::log(c.jitter));
  return theta;
}

// Compact Nelder-Mead; the objective sees clamped points plus a penalty for
// leaving the box.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, const HyperBounds& bounds,
                                int max_evals) {
  const std::size_t n = start.size();
  auto penalised = [&](const std::vector<double>& x) {
    std::vector<double> c = x;
    double pen = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cl = std::clamp(c[i], bounds.lo[i], bounds.hi[i]);
      pen += (c[i] - cl) * (c[i] - cl);
      c[i] = cl;
    }
    return f(c) + 1e3 * pen;
  };
  std::vector<std::vector<double>> simplex{start};
  for (std::size_t i = 0; i < n; ++i) {
    auto v = start;
    v[i] += (v[i] + 0.5 <= bounds.hi[i]) ? 0.5 : -0.5;
    simplex.push_back(std::move(v));
  }
  std::vector<double> fv;
  for (const auto& v : simplex) fv.push_back(penalised(v));
  int evals = static_cast<int>(simplex.size());

  std::vector<std::size_t> order(n + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (std::abs(fv[worst] - fv[best]) < 1e-8 * (1.0 + std::abs(fv[best]))) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[order[k]][i] / n;
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      return p;
    };
    auto reflected = along(-1.0);
    const double fr = penalised(reflected);
    ++evals;
    if (fr < fv[best]) {
      auto expanded = along(-2.0);
      const double fe = penalised(expanded);
      ++evals;
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        fv[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = std::move(reflected);
      fv[worst] = fr;
    } else {
      auto contracted = along(fr < fv[worst] ? -0.5 : 0.5);
      const double fc = penalised(contracted);
      ++evals;
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = std::move(contracted);
        fv[worst] = fc;
      } else {
        for (std::size_t k = 1; k < order.size(); ++k) {
          auto& v = simplex[order[k]];
          for (std::size_t i = 0; i < n; ++i) v[i] = simplex[best][i] + 0.5 * (v[i] - simplex[best][i]);
          fv[order[k]] = penalised(v);
          ++evals;
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  auto x = simplex[best];
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], bounds.lo[i], bounds.hi[i]);
  return x;
}

double negative_log_likelihood(const GpConfig& config, const std::vector<std::vector<double>>& points,
                               const std::vector<double>& values) {
  try {
    return -GaussianProcess(config, points, values).log_marginal_likelihood();
  } catch (const SolverError&) {
    return std::numeric_limits<double>::max() / 4;
  }
}

}  // namespace

GpConfig fit_hyperparameters(const GpConfig& start, const std::vector<std::vector<double>>& points,
                             const std::vector<double>& values) {
  const std::size_t dims = start.length_scales.size();
  // The lower noise bound stays at the configured jitter across refits.
  const double jitter_floor = start.jitter;
  const auto bounds = hyper_bounds(dims, jitter_floor);
  auto objective = [&](const std::vector<double>& theta) {
    return negative_log_likelihood(config_from_theta(start, theta), points, values);
  };

  std::mt19937_64 rng(start.seed);
  std::vector<double> best_theta = theta_from_config(start);
  for (std::size_t i = 0; i < best_theta.size(); ++i) {
    best_theta[i] = std::clamp(best_theta[i], bounds.lo[i], bounds.hi[i]);
  }
  double best_value = objective(best_theta);
  const int starts = std::max(1, start.refit_starts);
  for (int s = 0; s < starts; ++s) {
    std::vector<double> theta0 = best_theta;
    if (s > 0) {
      for (std::size_t i = 0; i < theta0.size(); ++i) {
        std::uniform_real_distribution<double> u(bounds.lo[i], bounds.hi[i]);
        theta0[i] = u(rng);
      }
    }
    auto theta = nelder_mead(objective, theta0, bounds, 60 * static_cast<int>(theta0.size()));
    const double value = objective(theta);
    if (value < best_value) {
      best_value = value;
      best_theta = theta;
    }
  }
  GpConfig fitted = config_from_theta(start, best_theta);
  fitted.jitter = std::max(fitted.jitter, jitter_floor);
  return fitted;
}

double expected_improvement(double mean, double variance, double best) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double gain = best - mean;
  if (!(sigma > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + sigma * pdf);
}

// ---------------------------------------------------------------- minimize

namespace {

std::vector<std::vector<double>> latin_hypercube(int count, std::size_t dims, std::mt19937_64& rng) {
  std::vector<std::vector<double>> pts(count, std::vector<double>(dims));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> strata(count);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int i = 0; i < count; ++i) pts[i][d] = (strata[i] + u(rng)) / count;
  }
  return pts;
}

std::vector<double> random_point(std::size_t dims, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(dims);
  for (auto& x : p) x = u(rng);
  return p;
}

std::vector<double> perturb(const std::vector<double>& centre, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<double> p(centre);
  for (auto& x : p) x = std::clamp(x + n(rng), 0.0, 1.0);
  return p;
}

// log(l - min + delta): separates values near the incumbent from a penalty
// plateau orders of magnitude above them.
std::vector<double> log_warp(const std::vector<double>& losses) {
  const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
  const double delta = std::max(1e-6 * (*hi - *lo), 1e-12);
  std::vector<double> out(losses.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(losses[i] - *lo + delta);
  return out;
}

// Coordinate pattern search on the acquisition, inside the unit cube.
std::vector<double> refine(const std::function<double(const std::vector<double>&)>& acq,
                           std::vector<double> x, double& value) {
  double step = 0.05;
  int evals = 0;
  while (step > 1e-3 && evals < 400) {
    bool improved = false;
    for (std::size_t d = 0; d < x.size(); ++d) {
      for (double sign : {1.0, -1.0}) {
        auto trial = x;
        trial[d] = std::clamp(trial[d] + sign * step, 0.0, 1.0);
        const double v = acq(trial);
        ++evals;
        if (v > value) {
          value = v;
          x = std::move(trial);
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

}  // namespace

MinimizeResult minimize(const LossFunction& loss, const BoxDomain& domain,
                        const MinimizeOptions& options) {
  domain.validate();
  if (options.init_samples < 1) throw InputError("need at least one initial sample");
  if (options.budget < options.init_samples) throw InputError("budget must be at least init_samples");
  const std::size_t dims = domain.reduced_dims();

  std::mt19937_64 rng(options.seed);
  MinimizeResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> unit_pts;  // finite observations only
  std::vector<double> losses;
  int non_finite = 0;

  auto evaluate = [&](const std::vector<double>& unit) {
    auto full = domain.expand(unit);
    const double value = loss(full);
    if (std::isfinite(value)) {
      unit_pts.push_back(unit);
      losses.push_back(value);
      if (value < result.best_loss) {
        result.best_loss = value;
        result.best_v = full;
      }
    } else {
      ++non_finite;
    }
    result.history.push_back({std::move(full), value});
    result.incumbent.push_back(result.best_loss);
  };

  auto remaining = [&] { return options.budget - static_cast<int>(result.history.size()); };

  for (const auto& hint : options.initial_points) {
    if (remaining() <= 0) break;
    if (hint.size() != domain.dims()) throw InputError("initial point has the wrong dimension");
    evaluate(domain.reduce(hint));
  }
  for (const auto& p : latin_hypercube(options.init_samples, dims, rng)) {
    if (remaining() <= 0) break;
    evaluate(p);
  }

  GpConfig gp;
  gp.length_scales.assign(dims, 0.3);
  gp.seed = options.seed;
  std::size_t fitted_at = 0;

  while (remaining() > 0) {
    if (losses.size() < 2) {
      evaluate(random_point(dims, rng));
      continue;
    }
    // z-score the history so the penalty scale does not swamp the kernel.
    std::vector<double> z = options.log_warp ? log_warp(losses) : losses;
    const double n = static_cast<double>(z.size());
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double var = 0.0;
    for (double l : z) var += (l - mean) * (l - mean);
    const double sd = var > 0.0 ? std::sqrt(var / n) : 1.0;
    for (double& v : z) v = (v - mean) / sd;
    const double best_z = *std::min_element(z.begin(), z.end());

    if (fitted_at == 0 || losses.size() - fitted_at >= static_cast<std::size_t>(gp.refit_every)) {
      gp.signal_variance = 1.0;
      gp.seed = options.seed + losses.size();
      gp = fit_hyperparameters(gp, unit_pts, z);
      fitted_at = losses.size();
    }

    std::optional<GaussianProcess> model;
    GpConfig trial = gp;
    // Pessimistic constant prior: unexplored regions look like the worst seen.
    trial.prior_mean = *std::max_element(z.begin(), z.end());
    for (int attempt = 0; attempt < 6 && !model; ++attempt) {
      try {
        model.emplace(trial, unit_pts, z);
      } catch (const SolverError&) {
        trial.jitter *= 10.0;
      }
    }
    if (!model) {
      evaluate(random_point(dims, rng));
      continue;
    }

    auto acq = [&](const std::vector<double>& u) {
      const auto pred = model->predict(u);
      return expected_improvement(pred.mean, pred.variance, best_z);
    };
    std::vector<std::pair<double, std::vector<double>>> scored;
    scored.reserve(options.candidates);
    const auto& incumbent_unit = unit_pts[std::min_element(losses.begin(), losses.end()) - losses.begin()];
    const int local = static_cast<int>(options.local_fraction * options.candidates);
    for (int c = 0; c < options.candidates; ++c) {
      auto u = c < local ? perturb(incumbent_unit, c % 2 ? 0.02 : 0.1, rng) : random_point(dims, rng);
      const double a = acq(u);
      scored.emplace_back(a, std::move(u));
    }
    const auto top = std::min<std::size_t>(std::max(1, options.refine_starts), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + top, scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double best_acq = -1.0;
    std::vector<double> next;
    for (std::size_t k = 0; k < top; ++k) {
      double value = scored[k].first;
      auto refined = refine(acq, scored[k].second, value);
      if (value > best_acq) {
        best_acq = value;
        next = std::move(refined);
      }
    }
    if (!(best_acq > 0.0) || next.empty()) next = random_point(dims, rng);
    evaluate(next);
  }

  if (2 * non_finite > static_cast<int>(result.history.size()) || result.best_v.empty()) {
    throw SolverError("loss was non-finite at " + std::to_string(non_finite) + " of " +
                      std::to_string(result.history.size()) + " evaluations");
  }
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<Observation>& history) {
  const std::size_t dims = history.empty() ? 0 : history.front().v.size();
  out << "eval_index";
  for (std::size_t k = 0; k < dims; ++k) out << ",v" << (k + 1);
  out << ",loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << i;
    for (double v : history[i].v) out << ',' << csv::num(v);
    out << ',' << csv::num(history[i].loss) << '\n';
  }
}

}  // namespace softshape

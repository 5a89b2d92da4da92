#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace softshape {

/// Admissible voltages. In symmetric mode the vector is palindromic and only
/// its first ceil(n/2) entries are free.
struct BoxDomain {
  std::vector<double> lower;
  std::vector<double> upper;
  bool symmetric = false;

  static BoxDomain uniform(std::size_t dims, double lower, double upper, bool symmetric = false);

  std::size_t dims() const { return lower.size(); }
  std::size_t reduced_dims() const { return symmetric ? (dims() + 1) / 2 : dims(); }

  /// Full vector from reduced coordinates in the unit cube.
  std::vector<double> expand(std::span<const double> unit) const;
  /// Reduced unit-cube coordinates of a full vector, clamped into the box.
  std::vector<double> reduce(std::span<const double> full) const;
  bool contains(std::span<const double> full) const;
  void validate() const;

 private:
  double reduced_lower(std::size_t k) const;
  double reduced_upper(std::size_t k) const;
};

/// Squared-exponential kernel with per-dimension length scales, constant
/// prior mean and a jitter/noise variance on the diagonal, plus the
/// hyperparameter refit schedule used by minimize().
struct GpConfig {
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double prior_mean = 0.0;
  double jitter = 1e-6;
  int refit_every = 10;
  int refit_starts = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

class GaussianProcess {
 public:
  /// Throws SolverError when the kernel matrix cannot be factorised.
  GaussianProcess(GpConfig config, std::vector<std::vector<double>> points,
                  std::vector<double> values);

  GpPrediction predict(std::span<const double> query) const;
  double log_marginal_likelihood() const;
  const GpConfig& config() const { return config_; }

 private:
  double kernel(std::span<const double> a, std::span<const double> b) const;

  GpConfig config_;
  std::vector<std::vector<double>> points_;
  std::vector<double> values_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;  // K^-1 (y - mean)
};

GpPrediction gp_posterior(const GpConfig& config, const std::vector<std::vector<double>>& points,
                          std::span<const double> values, std::span<const double> query);

/// Maximum-likelihood refit of length scales, signal and noise variance
/// (Nelder-Mead in log space, multi-start). Keeps `start` if nothing beats it.
GpConfig fit_hyperparameters(const GpConfig& start, const std::vector<std::vector<double>>& points,
                             const std::vector<double>& values);

/// Expected improvement over `best` for a minimisation problem.
double expected_improvement(double mean, double variance, double best);

struct Observation {
  std::vector<double> v;  // full vector
  double loss = 0.0;
};

struct MinimizeOptions {
  int budget = 60;
  int init_samples = 10;
  std::uint64_t seed = 0;
  int candidates = 1024;
  int refine_starts = 4;
  /// Share of the acquisition candidates drawn around the incumbent.
  double local_fraction = 0.25;
  /// Fit the surrogate to log(loss - min + delta) instead of the raw loss.
  bool log_warp = false;
  /// Evaluated before the space-filling design (warm start). Full vectors.
  std::vector<std::vector<double>> initial_points;
};

struct MinimizeResult {
  std::vector<double> best_v;
  double best_loss = 0.0;
  std::vector<Observation> history;
  std::vector<double> incumbent;  // best loss after each evaluation
};

using LossFunction = std::function<double(std::span<const double>)>;

/// Bayesian optimisation of a black-box loss over the box: a Latin hypercube
/// design, then expected-improvement steps on a GP fitted to z-scored losses.
/// Deterministic for a fixed seed and a pure loss.
MinimizeResult minimize(const LossFunction& loss, const BoxDomain& domain,
                        const MinimizeOptions& options = {});

/// "eval_index,v1..vn,loss"
void write_history_csv(std::ostream& out, const std::vector<Observation>& history);

}  // namespace softshape

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "optimizer.hpp"
#include "optimizer_props.hpp"
#include "robot.hpp"
#include "oracles.hpp"

using namespace softshape;

namespace {

GpConfig config1d(double length = 0.3, double jitter = 1e-6) {
  GpConfig c;
  c.length_scales = {length};
  c.jitter = jitter;
  return c;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("gp without data returns the prior") {
  GpConfig c = config1d();
  c.prior_mean = 0.7;
  c.signal_variance = 2.5;
  const double q[] = {0.4};
  const auto p = gp_posterior(c, {}, std::span<const double>{}, q);
  CHECK(p.mean == 0.7);
  CHECK(p.variance == 2.5);
}

TEST_CASE("gp interpolates a single observation as the jitter vanishes") {
  const double y[] = {3.0};
  const double q[] = {0.25};
  const auto p = gp_posterior(config1d(0.3, 1e-12), {{0.25}}, y, q);
  CHECK(p.mean == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(p.variance < 1e-9);
}

TEST_CASE("gp two-point posterior against the closed form") {
  GpConfig c = config1d(0.4, 1e-4);
  c.signal_variance = 1.3;
  c.prior_mean = 0.2;
  const std::vector<std::vector<double>> pts{{0.1}, {0.7}};
  const double y[] = {1.0, -0.5};
  const double q[] = {0.35};
  auto k = [&](double a, double b) { return c.signal_variance * std::exp(-0.5 * (a - b) * (a - b) / 0.16); };
  const double a = c.signal_variance + c.jitter, b = k(0.1, 0.7);
  const double det = a * a - b * b;
  const double k1 = k(0.35, 0.1), k2 = k(0.35, 0.7);
  const double r1 = y[0] - c.prior_mean, r2 = y[1] - c.prior_mean;
  const double w1 = (a * r1 - b * r2) / det, w2 = (-b * r1 + a * r2) / det;
  const double mean = c.prior_mean + k1 * w1 + k2 * w2;
  const double var = c.signal_variance - (a * k1 * k1 - 2 * b * k1 * k2 + a * k2 * k2) / det;
  const auto p = gp_posterior(c, pts, y, q);
  CHECK(std::abs(p.mean - mean) < 1e-10);
  CHECK(std::abs(p.variance - var) < 1e-10);
}

TEST_CASE("expected improvement values") {
  CHECK(expected_improvement(1.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(0.5, 0.0, 1.0) == doctest::Approx(0.5));
  CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(oracle::normal_pdf(0.0)).epsilon(1e-12));
  CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(0.3989).epsilon(1e-4));
}

TEST_CASE("property: expected improvement is non-negative and grows with sigma") {
  oracle::Gen gen(3);
  for (int t = 0; t < 500; ++t) {
    const double mean = gen.uniform(-3, 3), best = gen.uniform(-3, 3);
    const double s1 = gen.uniform(0, 2), s2 = s1 + gen.uniform(1e-3, 2);
    const double e1 = expected_improvement(mean, s1 * s1, best);
    const double e2 = expected_improvement(mean, s2 * s2, best);
    CHECK(e1 >= 0.0);
    CHECK(e2 >= e1 - 1e-15);
  }
}

TEST_CASE("box validation and symmetric expansion") {
  CHECK_THROWS_AS(BoxDomain::uniform(5, 10.0, -10.0).validate(), InputError);
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  CHECK(box.reduced_dims() == 3);
  const double u[] = {0.0, 0.5, 1.0};
  const auto v = box.expand(u);
  CHECK(v == std::vector<double>{-1500.0, -500.0, 500.0, -500.0, -1500.0});
  const auto back = box.reduce(v);
  CHECK(back[1] == doctest::Approx(0.5));
}

TEST_CASE("constant loss spends the whole budget") {
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0);
  MinimizeOptions o;
  o.budget = 25;
  const auto r = minimize([](std::span<const double>) { return 4.2; }, box, o);
  CHECK(r.history.size() == 25);
  CHECK(r.best_loss == 4.2);
  CHECK(box.contains(r.best_v));
}

TEST_CASE("separable quadratic argmin within 50 V") {
  for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(props::quadratic_max_error(seed) <= 50.0);
}

TEST_CASE("beats random search on Branin in at least 18 of 20 seeds") {
  const auto t = props::branin_vs_random(20);
  INFO("wins " << t.wins);
  CHECK(t.wins >= 18);
}

TEST_CASE("replay determinism") { CHECK(props::replay_identical(99)); }

TEST_CASE("warm start points are evaluated first") {
  const auto box = BoxDomain::uniform(5, -1500.0, 500.0, true);
  MinimizeOptions o;
  o.budget = 15;
  o.initial_points = {{100, 0, -700, 0, 100}};
  const auto r = minimize(props::separable_quadratic, box, o);
  CHECK(r.history.front().v == std::vector<double>{100, 0, -700, 0, 100});
}

TEST_CASE("property: history stays in the box, symmetric and monotone") {
  oracle::Gen gen(11);
  for (int t = 0; t < 6; ++t) {
    std::vector<double> lo(5), hi(5);
    for (int k = 0; k < 3; ++k) {
      lo[k] = gen.uniform(-1500, 0);
      hi[k] = lo[k] + gen.uniform(50, 1000);
      lo[4 - k] = lo[k];
      hi[4 - k] = hi[k];
    }
    BoxDomain box{lo, hi, true};
    std::vector<double> centre(5);
    for (int k = 0; k < 5; ++k) centre[k] = gen.uniform(lo[k], hi[k]);
    MinimizeOptions o;
    o.budget = 30;
    o.seed = static_cast<std::uint64_t>(t);
    const auto r = minimize(
        [&](std::span<const double> v) {
          double s = 0;
          for (int k = 0; k < 5; ++k) s += std::pow((v[k] - centre[k]) / 500.0, 2);
          return s;
        },
        box, o);
    for (std::size_t i = 0; i < r.history.size(); ++i) {
      CHECK(box.contains(r.history[i].v));
      CHECK(VoltageVector(r.history[i].v).is_palindromic());
      if (i > 0) CHECK(r.incumbent[i] <= r.incumbent[i - 1]);
    }
  }
}

TEST_CASE("history csv header") {
  std::ostringstream out;
  write_history_csv(out, {{{1.0, 2.0}, 0.5}});
  CHECK(out.str().rfind("eval_index,v1,v2,loss\n", 0) == 0);
}

}

// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "calibration_props.hpp"
#include "contact_props.hpp"
#include "controller.hpp"
#include "gait.hpp"
#include "optimizer_props.hpp"
#include "oracles.hpp"
#include "scenario.hpp"

using namespace softshape;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

scenario::ScenarioConfig load(const std::string& file, const std::string& out) {
  auto c = scenario::load_config(fs::path(SOFTSHAPE_SOURCE_DIR) / "scenarios" / file);
  scenario::RunOptions o;
  o.out_dir = fs::path(SOFTSHAPE_TEST_TMP) / out;
  scenario::apply_overrides(c, o);
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome calibration_improvement() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto config = load("shape_control.json", "shape_control");
  const auto r = scenario::run_shape_control(config, {});
  double mean_pre = 0.0, worst_ratio = 0.0;
  for (std::size_t k = 0; k < r.pre_mse_cm2.size(); ++k) {
    mean_pre += r.pre_mse_cm2[k] / static_cast<double>(r.pre_mse_cm2.size());
    worst_ratio = std::max(worst_ratio, r.post_mse_cm2[k] / r.pre_mse_cm2[k]);
  }
  const double t = seconds_since(t0);
  return {r.pre_mse_cm2.size() == 5 && mean_pre >= 0.03 && mean_pre <= 0.07 && worst_ratio <= 0.5 && t < 300,
          fmt("mean pre %.4f cm^2, worst post/pre %.3f over %zu targets, %.1f s", mean_pre, worst_ratio,
              r.pre_mse_cm2.size(), t)};
}

Outcome exact_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0, oracle_gap = 0.0;
  oracle::Gen gen(77);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = props::linear_plant_case(seed);
    CorrectionField f(c.params, default_learning_rate(c.samples));
    calibrate_batch(f, c.samples, 200);
    for (const auto& v : c.volts) worst = std::max(worst, props::prediction_error_cm(c, f, v));
    for (int t = 0; t < 5; ++t) worst = std::max(worst, props::prediction_error_cm(c, f, gen.volts()));
    oracle_gap = std::max(oracle_gap, props::oracle_disagreement(c, f));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-3 && t < 60,
          fmt("max node error %.2e cm, max |alpha - least squares| %.2e cm/V, %.1f s", worst, oracle_gap, t)};
}

struct CrawlStats {
  scenario::CrawlReport report;
  double max_gap = 0.0;
  double seconds = 0.0;
};

CrawlStats crawl(const scenario::ScenarioConfig& config, const SafetyLine& line, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  CrawlStats s;
  s.report = scenario::run_crawl(config, line, out);
  for (const auto& c : s.report.cycles) s.max_gap = std::max(s.max_gap, c.dy_min_cm);
  s.seconds = seconds_since(t0);
  return s;
}

Outcome step_roof() {
  const auto config = load("step_roof.json", "step_roof");
  const auto s = crawl(config, *config.roof, config.run.output_dir);
  const double drop_cm = 55.0, body_cm = config.robot.length * kCmPerM;
  double hi = 0.0, lo = 0.0;
  int nh = 0, nl = 0;
  for (const auto& c : s.report.cycles) {
    if (c.x0_cm + body_cm <= drop_cm) hi += c.stride_cm, ++nh;
    if (c.x0_cm >= drop_cm) lo += c.stride_cm, ++nl;
  }
  hi = nh ? hi / nh : 0.0;
  lo = nl ? lo / nl : 0.0;
  const bool pass = s.report.violations == 0 && s.report.reached_end && s.max_gap < 0.1 && hi >= 0.085 &&
                    hi <= 0.34 && lo >= 0.035 && lo <= 0.14 && hi > lo && s.seconds < 900;
  return {pass, fmt("%zu cycles, %d violations, end %s, max gap %.4f cm, stride high %.4f (%d) low %.4f (%d) "
                    "cm/cycle, %.0f s",
                    s.report.cycles.size(), s.report.violations, s.report.reached_end ? "reached" : "missed",
                    s.max_gap, hi, nh, lo, nl, s.seconds)};
}

Outcome roof_generality() {
  const auto config = load("simulate_roofs.json", "simulate_roofs");
  bool pass = true;
  std::string detail;
  for (const char* name : {"slant", "sine"}) {
    auto local = config;
    local.run.start_x0.reset();
    local.run.end_x0.reset();
    const auto s = crawl(local, scenario::builtin_roof(name), config.run.output_dir / name);
    pass = pass && s.report.violations == 0 && s.report.reached_end && s.max_gap < 0.15 && s.seconds < 900;
    detail += fmt("%s: %zu cycles, %d violations, end %s, max gap %.4f cm, %.0f s; ", name, s.report.cycles.size(),
                  s.report.violations, s.report.reached_end ? "reached" : "missed", s.max_gap, s.seconds);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome speed_height_law() {
  const ShapeModel model{RobotParams{}};
  std::vector<double> heights;
  for (int i = 0; i <= 15; ++i) heights.push_back(0.001 * i);
  const auto table = speed_vs_height_curve(model, heights);
  bool monotone = true;
  for (std::size_t i = 1; i < table.size(); ++i) monotone = monotone && table[i].stride > table[i - 1].stride;
  // Least squares stride = k h^2 through the origin.
  double shh = 0.0, sh4 = 0.0, mean = 0.0;
  for (const auto& p : table) {
    shh += p.stride * p.height * p.height;
    sh4 += std::pow(p.height, 4);
    mean += p.stride / static_cast<double>(table.size());
  }
  const double k = shh / sh4;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& p : table) {
    ss_res += std::pow(p.stride - k * p.height * p.height, 2);
    ss_tot += std::pow(p.stride - mean, 2);
  }
  const double r2 = 1.0 - ss_res / ss_tot;
  double worst_rel = 0.0;
  for (double h : {0.002, 0.0075, 0.0135, 0.02}) {
    const double d = chord_shortening(oracle::parabola(h, 0.5, 201));
    worst_rel = std::max(worst_rel, std::abs(d - oracle::parabola_chord(h, 0.5)) / oracle::parabola_chord(h, 0.5));
  }
  return {monotone && r2 > 0.99 && worst_rel <= 0.01,
          fmt("monotone %s, R^2 %.5f, parabola chord error %.2e", monotone ? "yes" : "no", r2, worst_rel)};
}

Outcome contact_properties() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = props::check_contact_properties(100, 424242);
  const double t = seconds_since(t0);
  return {r.ok() && t < 60,
          fmt("%d cases: min y %.1e, min p %.1e, |yp| %.1e, force %.1e N, linearity %.1e, mirror %.1e, "
              "energy drop %.1e, %.1f s",
              r.cases, r.min_y, r.min_pressure, r.max_complementarity, r.max_force_imbalance,
              r.max_linearity_error, r.max_mirror_error, r.max_energy_drop, t)};
}

Outcome optimizer_sanity() {
  const double err = props::quadratic_max_error(1);
  const auto tally = props::branin_vs_random(20);
  const bool replay = props::replay_identical(1) && props::replay_identical(2);
  return {err <= 50.0 && tally.wins * 10 >= tally.seeds * 9 && replay,
          fmt("quadratic max error %.1f V, Branin wins %d/%d, replay %s", err, tally.wins, tally.seeds,
              replay ? "identical" : "differs")};
}

Outcome loss_semantics() {
  const SafetyLine line(RoofProfile::slanted(0.014, 0.014, 0.0, 1.0), 0.001);
  auto arch = [](double peak) { return oracle::parabola(peak, 0.5, 201); };
  ShapeCurve low = ShapeCurve::flat(0.5, 201);
  for (auto& y : low.y) y = 0.008;
  const auto beyond = evaluate_roof(arch(0.015), line, 0.2);
  const auto gap = evaluate_roof(low, line, 0.2);
  const auto touch = evaluate_roof(arch(0.013), line, 0.2);
  const bool pass = std::abs(beyond.loss_cm - 1000.2) < 1e-9 && std::abs(gap.loss_cm - 0.5) < 1e-12 &&
                    std::abs(touch.loss_cm) < 1e-12;
  return {pass, fmt("beyond %.6f (expect 1000.2), gap %.6f (expect 0.5), touch %.2e (expect 0)", beyond.loss_cm,
                    gap.loss_cm, touch.loss_cm)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"calibration improvement", calibration_improvement},
      {"exact recovery", exact_recovery},
      {"step-roof crawl", step_roof},
      {"roof-shape generality", roof_generality},
      {"speed-height law", speed_height_law},
      {"contact-solver properties", contact_properties},
      {"optimizer sanity", optimizer_sanity},
      {"loss semantics", loss_semantics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

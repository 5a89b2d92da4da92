#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "softshape/softshape.h"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string target;
  std::string roof;
  std::string samples;
  uint64_t seed = 0;
  bool quiet = false;
};

bool read_file(const std::string& path, std::string& text) {
  std::ifstream in(path);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape control and roof-constrained crawling for a piezo soft robot"};
  app.set_version_flag("--version", std::string(ss_version()));
  app.require_subcommand(1);

  Flags f;
  CLI::Option* seed_opt = nullptr;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "scenario JSON")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output directory (overrides run.output_dir)");
    seed_opt = sub->add_option("--seed", f.seed, "run seed (overrides config)");
    sub->add_flag("-q,--quiet", f.quiet, "no progress output");
  };
  struct Sub {
    CLI::App* app;
    CLI::Option* seed;
  };
  std::vector<Sub> subs;

  auto* shape = app.add_subcommand("shape-control", "pre-calibration control, calibration, post-calibration control");
  common(shape);
  shape->add_option("--target", f.target, "target shape CSV (x_cm,y_cm)")->check(CLI::ExistingFile);
  subs.push_back({shape, seed_opt});

  auto* crawl = app.add_subcommand("crawl", "crawl under the configured roof");
  common(crawl);
  crawl->add_option("--roof", f.roof, "step, slant, sine or file:PATH");
  subs.push_back({crawl, seed_opt});

  auto* speed = app.add_subcommand("speed-map", "stride against arch height and roof position");
  common(speed);
  speed->add_option("--roof", f.roof, "step, slant, sine or file:PATH");
  subs.push_back({speed, seed_opt});

  auto* cal = app.add_subcommand("calibrate", "fit the correction field to sensed reference shapes");
  common(cal);
  cal->add_option("--samples", f.samples, "directory with manifest.json")->required();
  subs.push_back({cal, seed_opt});

  auto* sim = app.add_subcommand("simulate-roofs", "crawl under the built-in slanted and sinusoidal roofs");
  common(sim);
  subs.push_back({sim, seed_opt});

  CLI11_PARSE(app, argc, argv);

  std::string command;
  bool has_seed = false;
  for (const auto& s : subs) {
    if (s.app->parsed()) {
      command = s.app->get_name();
      has_seed = s.seed->count() > 0;
    }
  }

  std::string config_text;
  if (!f.config.empty() && !read_file(f.config, config_text)) {
    std::fprintf(stderr, "error: cannot read %s\n", f.config.c_str());
    return SS_ERR_INPUT;
  }

  ss_run_options opts;
  ss_run_options_default(&opts);
  if (!f.out.empty()) opts.out_dir = f.out.c_str();
  if (!f.target.empty()) opts.target_csv = f.target.c_str();
  if (!f.roof.empty()) opts.roof = f.roof.c_str();
  if (!f.samples.empty()) opts.samples_dir = f.samples.c_str();
  opts.has_seed = has_seed ? 1 : 0;
  opts.seed = f.seed;
  opts.verbose = f.quiet ? 0 : 1;

  const ss_status status = ss_run_scenario(command.c_str(), config_text.c_str(), &opts);
  if (status != SS_OK) std::fprintf(stderr, "%s\n", ss_last_error());
  return static_cast<int>(status);
}

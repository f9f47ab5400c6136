// Command-line front end for the tmr engine. Talks to the core strictly
// through the public C API (tmr.h).

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "tmr.h"

namespace {

struct EngineDeleter {
  void operator()(tmr_engine* e) const { tmr_engine_destroy(e); }
};
using EnginePtr = std::unique_ptr<tmr_engine, EngineDeleter>;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string condition;
  bool force = false;
  int threads = 0;
  bool full_scale = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration JSON");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides config)")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--condition", opts.condition, "Condition selector: all|l3|both");
  cmd->add_flag("--force", opts.force, "Overwrite a non-empty output directory");
  cmd->add_option("--threads", opts.threads, "Worker threads (0 = hardware)");
  cmd->add_flag("--full-scale", opts.full_scale,
                "8-h sessions, 500 Hz synthesis, 12 per group");
}

int fail(const EnginePtr& engine, tmr_status status, const char* stage) {
  std::fprintf(stderr, "tmr %s: %s: %s\n", stage, tmr_status_name(status),
               tmr_engine_last_error(engine.get()));
  return static_cast<int>(status);
}

int make_engine(const CommonOpts& opts, EnginePtr& engine) {
  tmr_engine* raw = nullptr;
  tmr_status status;
  if (!opts.config_path.empty())
    status = tmr_engine_create_from_file(opts.config_path.c_str(), &raw);
  else
    status = tmr_engine_create(&raw);
  if (status != TMR_OK) {
    std::fprintf(stderr, "tmr: cannot load config (%s)\n", tmr_status_name(status));
    return static_cast<int>(status);
  }
  engine.reset(raw);
  if (!opts.out_dir.empty()) {
    status = tmr_engine_set_output_dir(engine.get(), opts.out_dir.c_str());
    if (status != TMR_OK) return fail(engine, status, "config");
  }
  if (opts.seed_set) {
    status = tmr_engine_set_seed(engine.get(), opts.seed);
    if (status != TMR_OK) return fail(engine, status, "config");
  }
  if (!opts.condition.empty()) {
    status = tmr_engine_set_condition(engine.get(), opts.condition.c_str());
    if (status != TMR_OK) return fail(engine, status, "config");
  }
  if (opts.threads != 0) {
    status = tmr_engine_set_threads(engine.get(), opts.threads);
    if (status != TMR_OK) return fail(engine, status, "config");
  }
  if (opts.force) {
    status = tmr_engine_set_force(engine.get(), 1);
    if (status != TMR_OK) return fail(engine, status, "config");
  }
  if (opts.full_scale) {
    status = tmr_engine_set_full_scale(engine.get(), 1);
    if (status != TMR_OK) return fail(engine, status, "config");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop TMR simulation and sleep-EEG analysis pipeline"};
  app.set_version_flag("--version", std::string(tmr_version()));
  app.require_subcommand(1);

  CommonOpts opts;
  std::string participant;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort");
  auto* schedule = app.add_subcommand("schedule", "Compile plans and cue logs");
  schedule->add_option("--participant", participant, "Restrict to one participant");
  auto* analyze = app.add_subcommand("analyze", "ERP/TFR/ERPAC and group statistics");
  auto* decode = app.add_subcommand("decode", "Time-resolved decoding with surrogates");
  auto* report = app.add_subcommand("report", "Collect result tables");
  auto* all = app.add_subcommand("all", "Run every stage in order");
  for (auto* cmd : {simulate, schedule, analyze, decode, report, all})
    add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  EnginePtr engine;
  if (const int rc = make_engine(opts, engine); rc != 0) return rc;

  tmr_status status = TMR_OK;
  const char* stage = "";
  if (simulate->parsed()) {
    stage = "simulate";
    status = tmr_run_simulate(engine.get());
  } else if (schedule->parsed()) {
    stage = "schedule";
    status = tmr_run_schedule(engine.get(),
                              participant.empty() ? nullptr : participant.c_str());
  } else if (analyze->parsed()) {
    stage = "analyze";
    status = tmr_run_analyze(engine.get());
  } else if (decode->parsed()) {
    stage = "decode";
    status = tmr_run_decode(engine.get());
  } else if (report->parsed()) {
    stage = "report";
    status = tmr_run_report(engine.get());
  } else if (all->parsed()) {
    stage = "all";
    status = tmr_run_all(engine.get());
  }
  if (status != TMR_OK) return fail(engine, status, stage);
  std::printf("tmr %s: done\n", stage);
  return 0;
}

// Exercises the public C API exactly as an external client would: opaque
// handles, status codes, and artifacts on disk.

#include <doctest.h>
#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "support/helpers.hpp"
#include "tmr.h"

namespace fs = std::filesystem;

namespace {

void write_small_config(const std::string& path, const std::string& out_dir) {
  // Start from the built-in defaults and shrink the cohort.
  nlohmann::json j;
  j["cohort"] = {
      {"n_per_group", 1},
      {"session_epochs", 120},
      {"fs_hz", 100.0},
      {"master_seed", 5},
      {"level_proportions", {0.12, 0.23, 0.65}},
      {"pre_correct_prob", {0.9, 0.6, 0.2}},
      {"groups",
       nlohmann::json::array(
           {{{"name", "PTMR"},
             {"policy", "personalized"},
             {"evoked",
              {{"erp_amp_uv", 10.0},
               {"erp_latency_s", 0.0},
               {"sw_power_gain", 1.6},
               {"spindle_power_gain", 1.6},
               {"second_word_gain", 1.5},
               {"habituation", 0.85}}},
             {"coupling", {{"kappa", 0.7}, {"phi0", 0.0}}},
             {"consolidation", {{0.05, 0.95}, {0.3, 0.9}, {0.35, 0.8}}}},
            {{"name", "TMR"},
             {"policy", "fixed"},
             {"evoked",
              {{"erp_amp_uv", 8.0},
               {"erp_latency_s", 0.0},
               {"sw_power_gain", 1.6},
               {"spindle_power_gain", 1.5},
               {"second_word_gain", 1.2},
               {"habituation", 1.0}}},
             {"coupling", {{"kappa", 0.7}, {"phi0", 0.0}}},
             {"consolidation", {{0.05, 0.95}, {0.25, 0.9}, {0.15, 0.65}}}}})}};
  j["analysis"] = {{"max_trials_per_condition", 30}, {"erpac_time_stride", 8}};
  j["decode"] = {{"surrogates", 8},
                 {"cluster_permutations", 40},
                 {"max_trials_per_class", 30}};
  j["condition"] = "all";
  j["out_dir"] = out_dir;
  j["threads"] = 2;
  std::ofstream out(path);
  out << j.dump(2);
}

void write_behavior_csv_fixture(const std::string& path) {
  std::ofstream out(path);
  out << "item_id,session,level,correct,response_text\n";
  for (int i = 1; i <= 104; ++i) {
    const char* level = i % 3 == 0 ? "L3" : (i % 3 == 1 ? "L2" : "L1");
    out << i << ",pre," << level << ',' << (i % 2) << ",word\n";
  }
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(tmr_version()) > 0);
  CHECK(std::string(tmr_status_name(TMR_OK)) == "ok");
  CHECK(std::string(tmr_status_name(TMR_ERROR_CONFIG)) == "config error");
}

TEST_CASE("engine: config errors surface as status codes with messages") {
  tmr_engine* engine = nullptr;
  CHECK(tmr_engine_create_from_file("/nonexistent/config.json", &engine) ==
        TMR_ERROR_CONFIG);
  CHECK(engine == nullptr);

  REQUIRE(tmr_engine_create(&engine) == TMR_OK);
  CHECK(tmr_engine_set_condition(engine, "bogus") == TMR_ERROR_CONFIG);
  CHECK(std::string(tmr_engine_last_error(engine)).find("condition") !=
        std::string::npos);
  // Running without an output directory is a config error.
  CHECK(tmr_run_simulate(engine) == TMR_ERROR_CONFIG);
  tmr_engine_destroy(engine);
}

TEST_CASE("engine: full pipeline through the C API") {
  TempDir tmp("capi");
  const auto config_path = tmp.file("config.json");
  const auto out_dir = tmp.file("run");
  write_small_config(config_path, out_dir);

  tmr_engine* engine = nullptr;
  REQUIRE(tmr_engine_create_from_file(config_path.c_str(), &engine) == TMR_OK);
  CHECK(tmr_run_simulate(engine) == TMR_OK);
  CHECK(tmr_run_schedule(engine, nullptr) == TMR_OK);
  CHECK(tmr_run_analyze(engine) == TMR_OK);
  CHECK(tmr_run_decode(engine) == TMR_OK);
  CHECK(tmr_run_report(engine) == TMR_OK);
  tmr_engine_destroy(engine);

  CHECK(fs::exists(fs::path(out_dir) / "cohort" / "PTMR_00" / "recording.f32"));
  CHECK(fs::exists(fs::path(out_dir) / "analysis" / "all" / "scalars.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "decode" / "all" / "coupling" / "curve.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "report" / "summary.json"));
  CHECK(fs::exists(fs::path(out_dir) / "manifest.json"));
}

TEST_CASE("scheduler C API: stability gating and cue emission") {
  TempDir tmp("capi_sched");
  const auto behavior = tmp.file("behavior.csv");
  write_behavior_csv_fixture(behavior);

  tmr_scheduler* sched = nullptr;
  SUBCASE("bad policy string") {
    CHECK(tmr_scheduler_create("sometimes", behavior.c_str(), 1, &sched) ==
          TMR_ERROR_CONFIG);
    CHECK(sched == nullptr);
  }
  SUBCASE("personalized schedule emits after 10 stable epochs") {
    REQUIRE(tmr_scheduler_create("personalized", behavior.c_str(), 1, &sched) ==
            TMR_OK);
    tmr_cue cues[8];
    size_t n = 0;
    for (int e = 0; e < 10; ++e) {
      REQUIRE(tmr_scheduler_step(sched, "N2", e * 30000, cues, 8, &n) == TMR_OK);
      CHECK(n == 0);
    }
    REQUIRE(tmr_scheduler_step(sched, "N2", 10 * 30000, cues, 8, &n) == TMR_OK);
    CHECK(n == 4);
    CHECK(cues[0].onset_ms == 300000);
    CHECK(cues[1].onset_ms == 308000);
    CHECK(cues[0].pres_index >= 1);
    CHECK(cues[0].second_word_offset_ms == 2000);

    SUBCASE("wake pauses delivery") {
      REQUIRE(tmr_scheduler_step(sched, "W", 11 * 30000, cues, 8, &n) == TMR_OK);
      CHECK(n == 0);
      REQUIRE(tmr_scheduler_step(sched, "N3", 12 * 30000, cues, 8, &n) == TMR_OK);
      CHECK(n == 0);  // stability must be re-earned
    }
    SUBCASE("epochs must be chronological") {
      CHECK(tmr_scheduler_step(sched, "N2", 5 * 30000, cues, 8, &n) ==
            TMR_ERROR_DATA);
    }
    SUBCASE("bad stage code") {
      CHECK(tmr_scheduler_step(sched, "N9", 11 * 30000, cues, 8, &n) ==
            TMR_ERROR_CONFIG);
    }
    tmr_scheduler_destroy(sched);
  }
  SUBCASE("nostim scheduler never emits") {
    REQUIRE(tmr_scheduler_create("nostim", nullptr, 1, &sched) == TMR_OK);
    tmr_cue cues[8];
    size_t n = 0;
    for (int e = 0; e < 30; ++e) {
      REQUIRE(tmr_scheduler_step(sched, "N3", e * 30000, cues, 8, &n) == TMR_OK);
      CHECK(n == 0);
    }
    tmr_scheduler_destroy(sched);
  }
}

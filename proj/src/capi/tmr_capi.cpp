#include "tmr.h"

#include <exception>
#include <string>

#include "tmr/error.hpp"
#include "tmr/io.hpp"
#include "tmr/pipeline.hpp"
#include "tmr/scheduler.hpp"
#include "tmr/version.hpp"

struct tmr_engine {
  tmr::RunConfig config = tmr::default_run_config();
  std::string last_error;
};

struct tmr_scheduler {
  tmr::CuePlan plan;
  tmr::SchedulerConfig config;
  tmr::SchedulerState state;
  std::int64_t last_epoch_start = INT64_MIN;
  std::string last_error;
};

namespace {

template <typename Handle, typename Fn>
tmr_status guarded(Handle* handle, Fn&& fn) {
  if (!handle) return TMR_ERROR_CONFIG;
  handle->last_error.clear();
  try {
    fn();
    return TMR_OK;
  } catch (const tmr::ConfigError& e) {
    handle->last_error = e.what();
    return TMR_ERROR_CONFIG;
  } catch (const tmr::DataError& e) {
    handle->last_error = e.what();
    return TMR_ERROR_DATA;
  } catch (const tmr::NumericError& e) {
    handle->last_error = e.what();
    return TMR_ERROR_NUMERIC;
  } catch (const std::exception& e) {
    handle->last_error = e.what();
    return TMR_ERROR;
  } catch (...) {
    handle->last_error = "unknown error";
    return TMR_ERROR;
  }
}

}  // namespace

extern "C" {

const char* tmr_version(void) { return tmr::kVersion; }

const char* tmr_status_name(tmr_status status) {
  switch (status) {
    case TMR_OK: return "ok";
    case TMR_ERROR: return "error";
    case TMR_ERROR_CONFIG: return "config error";
    case TMR_ERROR_DATA: return "data error";
    case TMR_ERROR_NUMERIC: return "numeric error";
  }
  return "unknown";
}

tmr_status tmr_engine_create(tmr_engine** out) {
  if (!out) return TMR_ERROR_CONFIG;
  try {
    *out = new tmr_engine();
    return TMR_OK;
  } catch (...) {
    return TMR_ERROR;
  }
}

tmr_status tmr_engine_create_from_file(const char* config_path, tmr_engine** out) {
  if (!out || !config_path) return TMR_ERROR_CONFIG;
  tmr_engine* engine = nullptr;
  try {
    engine = new tmr_engine();
  } catch (...) {
    return TMR_ERROR;
  }
  const tmr_status status =
      guarded(engine, [&] { engine->config = tmr::load_run_config(config_path); });
  if (status != TMR_OK) {
    delete engine;
    *out = nullptr;
    return status;
  }
  *out = engine;
  return TMR_OK;
}

void tmr_engine_destroy(tmr_engine* engine) { delete engine; }

const char* tmr_engine_last_error(const tmr_engine* engine) {
  return engine ? engine->last_error.c_str() : "null engine";
}

tmr_status tmr_engine_set_output_dir(tmr_engine* engine, const char* path) {
  return guarded(engine, [&] {
    if (!path || !*path) throw tmr::ConfigError("empty output directory");
    engine->config.out_dir = path;
  });
}

tmr_status tmr_engine_set_seed(tmr_engine* engine, uint64_t seed) {
  return guarded(engine, [&] { engine->config.cohort.master_seed = seed; });
}

tmr_status tmr_engine_set_condition(tmr_engine* engine, const char* condition) {
  return guarded(engine, [&] {
    const auto sel = tmr::condition_from_code(condition ? condition : "");
    if (!sel) throw tmr::ConfigError("condition must be all|l3|both");
    engine->config.condition = *sel;
  });
}

tmr_status tmr_engine_set_threads(tmr_engine* engine, int n_threads) {
  return guarded(engine, [&] { engine->config.threads = n_threads; });
}

tmr_status tmr_engine_set_force(tmr_engine* engine, int force) {
  return guarded(engine, [&] { engine->config.force = force != 0; });
}

tmr_status tmr_engine_set_full_scale(tmr_engine* engine, int full_scale) {
  return guarded(engine, [&] {
    if (full_scale) tmr::apply_full_scale(engine->config);
  });
}

tmr_status tmr_run_simulate(tmr_engine* engine) {
  return guarded(engine, [&] { tmr::cmd_simulate(engine->config); });
}

tmr_status tmr_run_schedule(tmr_engine* engine, const char* participant) {
  return guarded(engine, [&] {
    tmr::cmd_schedule(engine->config, participant ? participant : "");
  });
}

tmr_status tmr_run_analyze(tmr_engine* engine) {
  return guarded(engine, [&] { tmr::cmd_analyze(engine->config); });
}

tmr_status tmr_run_decode(tmr_engine* engine) {
  return guarded(engine, [&] { tmr::cmd_decode(engine->config); });
}

tmr_status tmr_run_report(tmr_engine* engine) {
  return guarded(engine, [&] { tmr::cmd_report(engine->config); });
}

tmr_status tmr_run_all(tmr_engine* engine) {
  return guarded(engine, [&] { tmr::cmd_all(engine->config); });
}

tmr_status tmr_scheduler_create(const char* policy, const char* behavior_csv_path,
                                uint64_t seed, tmr_scheduler** out) {
  if (!out) return TMR_ERROR_CONFIG;
  tmr_scheduler* sched = nullptr;
  try {
    sched = new tmr_scheduler();
  } catch (...) {
    return TMR_ERROR;
  }
  const tmr_status status = guarded(sched, [&] {
    const auto kind = tmr::policy_from_code(policy ? policy : "");
    if (!kind) throw tmr::ConfigError("policy must be nostim|fixed|personalized");
    tmr::Policy p;
    p.kind = *kind;
    std::vector<tmr::BehavioralRecord> pre;
    if (*kind != tmr::PolicyKind::NoStim) {
      if (!behavior_csv_path)
        throw tmr::ConfigError("behavior CSV required for this policy");
      pre = tmr::read_behavior_csv(behavior_csv_path);
    }
    sched->plan = tmr::compile_plan(p, pre, seed);
  });
  if (status != TMR_OK) {
    delete sched;
    *out = nullptr;
    return status;
  }
  *out = sched;
  return TMR_OK;
}

void tmr_scheduler_destroy(tmr_scheduler* scheduler) { delete scheduler; }

const char* tmr_scheduler_last_error(const tmr_scheduler* scheduler) {
  return scheduler ? scheduler->last_error.c_str() : "null scheduler";
}

tmr_status tmr_scheduler_step(tmr_scheduler* scheduler, const char* stage,
                              int64_t epoch_start_ms, tmr_cue* cues,
                              size_t capacity, size_t* n_out) {
  return guarded(scheduler, [&] {
    if (!n_out) throw tmr::ConfigError("n_out is null");
    *n_out = 0;
    const auto st = tmr::stage_from_code(stage ? stage : "");
    if (!st) throw tmr::ConfigError("stage must be W|R|N1|N2|N3");
    if (epoch_start_ms <= scheduler->last_epoch_start)
      throw tmr::DataError("epochs must arrive in chronological order");
    scheduler->last_epoch_start = epoch_start_ms;
    const auto emitted = tmr::scheduler_step(scheduler->state, scheduler->plan,
                                             scheduler->config, *st, epoch_start_ms);
    if (emitted.size() > capacity)
      throw tmr::ConfigError("cue buffer too small (need " +
                             std::to_string(emitted.size()) + ")");
    for (std::size_t i = 0; i < emitted.size(); ++i) {
      cues[i].onset_ms = emitted[i].onset_ms;
      cues[i].item_id = emitted[i].item_id;
      cues[i].pres_index = emitted[i].pres_index;
      cues[i].block_id = emitted[i].block_id;
      cues[i].second_word_offset_ms = emitted[i].second_word_offset_ms;
    }
    *n_out = emitted.size();
  });
}

}  // extern "C"

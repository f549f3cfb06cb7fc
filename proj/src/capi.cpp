#include "batchlr.h"

#include <cstring>
#include <new>
#include <string>

#include "batchlr/harness.hpp"

using namespace batchlr;

struct blr_config {
  ExperimentConfig cfg;
};

struct blr_result {
  TrialResult res;
};

namespace {

thread_local std::string t_last_error;

blr_status set_error(blr_status code, const std::string& msg) {
  t_last_error = msg;
  return code;
}

blr_status clear_error() {
  t_last_error.clear();
  return BLR_OK;
}

/// Runs `fn` with exceptions mapped onto status codes; the boundary for
/// everything that can throw.
template <typename Fn>
blr_status guarded(Fn&& fn) {
  try {
    fn();
    return clear_error();
  } catch (const config_error& e) {
    return set_error(BLR_E_CONFIG, e.what());
  } catch (const io_error& e) {
    return set_error(BLR_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(BLR_E_INVARIANT, "out of memory");
  } catch (const std::exception& e) {
    return set_error(BLR_E_INVARIANT, e.what());
  }
}

}  // namespace

extern "C" {

const char* blr_version(void) { return "1.0.0"; }

const char* blr_last_error(void) { return t_last_error.c_str(); }

void blr_string_free(char* s) { delete[] s; }

blr_status blr_config_parse(const char* json_text, blr_config** out) {
  if (!json_text || !out)
    return set_error(BLR_E_ARG, "blr_config_parse: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* h = new blr_config{ExperimentConfig::from_json_text(json_text)};
    *out = h;
  });
}

blr_status blr_config_dump(const blr_config* cfg, char** out_text) {
  if (!cfg || !out_text)
    return set_error(BLR_E_ARG, "blr_config_dump: null argument");
  *out_text = nullptr;
  return guarded([&] {
    const std::string text = cfg->cfg.to_json_text();
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_text = buf;
  });
}

blr_status blr_config_hash(const blr_config* cfg, char out[17]) {
  if (!cfg || !out)
    return set_error(BLR_E_ARG, "blr_config_hash: null argument");
  return guarded([&] {
    const std::string h = cfg->cfg.hash();
    std::memcpy(out, h.c_str(), h.size() + 1);
  });
}

blr_status blr_config_set_seed(blr_config* cfg, uint64_t seed) {
  if (!cfg) return set_error(BLR_E_ARG, "blr_config_set_seed: null config");
  cfg->cfg.problem.seed = seed;
  return clear_error();
}

blr_status blr_config_set_trials(blr_config* cfg, int trials) {
  if (!cfg) return set_error(BLR_E_ARG, "blr_config_set_trials: null config");
  if (trials < 1)
    return set_error(BLR_E_ARG, "blr_config_set_trials: trials must be >= 1");
  cfg->cfg.trials = trials;
  return clear_error();
}

void blr_config_free(blr_config* cfg) { delete cfg; }

blr_status blr_run_trial(const blr_config* cfg, int trial, blr_result** out) {
  if (!cfg || !out) return set_error(BLR_E_ARG, "blr_run_trial: null argument");
  if (trial < 0)
    return set_error(BLR_E_ARG, "blr_run_trial: trial must be >= 0");
  *out = nullptr;
  return guarded([&] {
    auto* h = new blr_result{run_trial(cfg->cfg, trial)};
    *out = h;
  });
}

blr_status blr_result_list_size(const blr_result* res, int* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_list_size: null argument");
  *out = res->res.list_size;
  return clear_error();
}

blr_status blr_result_dim(const blr_result* res, int* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_dim: null argument");
  *out = static_cast<int>(res->res.beta_star.size());
  return clear_error();
}

blr_status blr_result_min_error(const blr_result* res, double* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_min_error: null argument");
  *out = res->res.min_error;
  return clear_error();
}

blr_status blr_result_wall_ms(const blr_result* res, double* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_wall_ms: null argument");
  *out = res->res.wall_ms;
  return clear_error();
}

blr_status blr_result_baseline_error(const blr_result* res, double* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_baseline_error: null argument");
  *out = res->res.baseline_error;
  return clear_error();
}

blr_status blr_result_batches_drawn(const blr_result* res, uint64_t* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_batches_drawn: null argument");
  *out = res->res.batches_drawn;
  return clear_error();
}

blr_status blr_result_candidate(const blr_result* res, int index,
                                double* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_candidate: null argument");
  if (index < 0 || index >= res->res.list_size)
    return set_error(BLR_E_ARG, "blr_result_candidate: index out of range");
  const Vec& c = res->res.candidates[static_cast<std::size_t>(index)];
  for (int i = 0; i < c.size(); ++i) out[i] = c[i];
  return clear_error();
}

blr_status blr_result_weight(const blr_result* res, int index, double* out) {
  if (!res || !out)
    return set_error(BLR_E_ARG, "blr_result_weight: null argument");
  if (index < 0 || index >= res->res.list_size)
    return set_error(BLR_E_ARG, "blr_result_weight: index out of range");
  *out = res->res.weights[static_cast<std::size_t>(index)];
  return clear_error();
}

void blr_result_free(blr_result* res) { delete res; }

int blr_cmd(const char* name, const blr_options* opt) {
  if (!name || !opt) {
    set_error(BLR_E_ARG, "blr_cmd: null argument");
    return BLR_E_ARG;
  }
  CliOptions cli;
  if (opt->config_path) cli.config_path = opt->config_path;
  if (opt->out_dir) cli.out_dir = opt->out_dir;
  if (opt->seed) cli.seed = *opt->seed;
  if (opt->trials) cli.trials = *opt->trials;
  cli.deterministic_filter = opt->deterministic_filter != 0;
  std::string err;
  int code = 0;
  try {
    code = run_subcommand(name, cli, &err);
  } catch (const std::exception& e) {
    set_error(BLR_E_INVARIANT, e.what());
    return 3;
  }
  if (code == 0)
    clear_error();
  else
    t_last_error = err;
  return code;
}

}  // extern "C"
